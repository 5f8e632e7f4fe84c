#pragma once

#include "sparch/domain.hpp"
#include "sparch/error_spec.hpp"
#include "sparch/likelihood.hpp"
#include "sparch/process.hpp"
#include "sparch/weights.hpp"

#include <nlohmann/json.hpp>

#include <string>

namespace sparch {

using Json = nlohmann::json;

/// {"lattice": d} or {"coords": [[x, y], ...]}, each with optional "metric" ("L1", "L2", "Linf").
SpatialDomain domain_from_json(const Json& j, const std::string& path = "domain");

/// "center" (lattice only: (floor(d/2), floor(d/2))) or a coordinate array.
Location origin_from_json(const Json& j, const SpatialDomain& domain, const std::string& path = "origin");

/**
 * Weight specification. "kind" is one of
 *   rook {d}, queen {d}, queen_lag {d, k}, knn {domain, q}, inverse_distance {domain, cutoff},
 *   sparch_p {base, domain, rho: [...], c}, oriented {base, domain?, origin?},
 *   arch_embedding {n, alpha: [...]}, spatiotemporal {lags: [spec + optional "self"...], T}, zero {n},
 *   triplets {n, entries: [[i, j, w], ...]}.
 * Optional modifiers applied in order: "row_standardize": bool, "scale": rho.
 * The lattice side of rook/queen/queen_lag bases doubles as the domain when none is given.
 */
SparseWeights weights_from_json(const Json& j, const std::string& path = "weights");

/// {"kind": "gaussian"} | {"kind": "truncated_gaussian", "a": a, "rescale": bool} | {"kind": "uniform", "a": a}.
ErrorSpec error_from_json(const Json& j, const std::string& path = "error");
Json error_to_json(const ErrorSpec& error);

/// {"alpha": scalar or array, "weights": spec, "error": spec (default gaussian)}.
SpArchModel sparch_model_from_json(const Json& j, const std::string& path = "model");

/// [1, Z] with Z an n x extra standard normal matrix drawn column by column from `seed`.
Matrix random_covariates(Index n, Index extra, Seed seed);

/**
 * {"beta": [...], "lambda": [...], "lag_weights": [spec...], "noise": spARCH model,
 *  "covariates": {"kind": "normal", "seed": s} | [[row], ...] (without the intercept column)}.
 */
SarSpArchModel sar_model_from_json(const Json& j, const std::string& path = "model");

/// Optimizer budget, starting values and restrictions for the fitters.
FitConfig fit_config_from_json(const Json& j, const std::string& path = "fit");

}  // namespace sparch
