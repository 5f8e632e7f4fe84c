#pragma once

#include "sparch/likelihood.hpp"

namespace sparch::detail {

/// Stores `information` and derives standard errors from its inverse when it is positive definite.
void attach_information(FitResult& fit, Matrix information);

/// Sample variance with a small positive floor.
double starting_variance(const Vector& v);

}  // namespace sparch::detail
