#include "sparch/optimize.hpp"

#include <algorithm>
#include <cmath>

namespace sparch {

namespace {

bool at_bound(const Vector& x, const Vector& lower, const Vector& g, Index i) {
  return std::isfinite(lower(i)) && x(i) <= lower(i) && g(i) > 0.0;
}

double projected_norm(const Vector& x, const Vector& lower, const Vector& g) {
  double norm = 0.0;
  for (Index i = 0; i < x.size(); ++i) {
    if (at_bound(x, lower, g, i)) continue;
    norm = std::max(norm, std::abs(g(i)));
  }
  return norm;
}

Vector project(Vector x, const Vector& lower) { return x.cwiseMax(lower); }

}  // namespace

OptimizeResult minimize_bfgs(const Objective& f, Vector x0, const Vector& lower, const OptimizeOptions& options) {
  const Index p = x0.size();
  OptimizeResult result;
  Vector x = project(std::move(x0), lower);
  Vector g(p);
  double fx = f(x, &g);
  result.trace.push_back(fx);
  if (!std::isfinite(fx) || !g.allFinite()) {
    result.x = x;
    result.value = fx;
    result.gradient = g;
    return result;
  }

  Matrix hinv = Matrix::Identity(p, p);
  for (int iter = 0; iter < options.max_iterations; ++iter) {
    result.projected_gradient_norm = projected_norm(x, lower, g);
    if (result.projected_gradient_norm < options.gradient_tolerance) {
      result.converged = true;
      break;
    }

    std::vector<bool> active(static_cast<std::size_t>(p));
    for (Index i = 0; i < p; ++i) active[static_cast<std::size_t>(i)] = at_bound(x, lower, g, i);
    Matrix h = hinv;
    Vector gf = g;
    for (Index i = 0; i < p; ++i) {
      if (!active[static_cast<std::size_t>(i)]) continue;
      h.row(i).setZero();
      h.col(i).setZero();
      gf(i) = 0.0;
    }
    Vector d = -h * gf;
    if (gf.dot(d) >= 0.0) {
      hinv.setIdentity();
      d = -gf;
    }
    const double longest = d.cwiseAbs().maxCoeff();
    double t = longest > options.max_step ? options.max_step / longest : 1.0;

    Vector x_new(p);
    Vector g_new(p);
    double f_new = std::numeric_limits<double>::infinity();
    bool accepted = false;
    for (int k = 0; k < options.max_backtracks; ++k, t *= 0.5) {
      x_new = project(x + t * d, lower);
      if ((x_new - x).cwiseAbs().maxCoeff() == 0.0) break;
      f_new = f(x_new, &g_new);
      if (std::isfinite(f_new) && g_new.allFinite() && f_new <= fx + options.armijo * g.dot(x_new - x)) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      if (hinv.isIdentity()) break;
      hinv.setIdentity();  // retry from steepest descent before giving up
      continue;
    }

    Vector s = x_new - x;
    Vector y = g_new - g;
    // Curvature pairs only over free coordinates; a pinned variable's gradient change would skew the rest.
    for (Index i = 0; i < p; ++i) {
      if (active[static_cast<std::size_t>(i)] || (std::isfinite(lower(i)) && x_new(i) <= lower(i) && s(i) != 0.0)) {
        s(i) = 0.0;
        y(i) = 0.0;
      }
    }
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (iter == 0 || hinv.isIdentity()) hinv *= sy / y.squaredNorm();
      const double r = 1.0 / sy;
      const Matrix v = Matrix::Identity(p, p) - r * s * y.transpose();
      hinv = v * hinv * v.transpose() + r * s * s.transpose();
    }
    x = x_new;
    g = g_new;
    fx = f_new;
    result.trace.push_back(fx);
    result.iterations = iter + 1;
  }
  result.projected_gradient_norm = projected_norm(x, lower, g);
  result.converged = result.converged || result.projected_gradient_norm < options.gradient_tolerance;
  result.x = x;
  result.value = fx;
  result.gradient = g;
  return result;
}

Vector numeric_gradient(const std::function<double(const Vector&)>& f, const Vector& x, double h) {
  Vector g(x.size());
  Vector xp = x;
  for (Index i = 0; i < x.size(); ++i) {
    const double step = h * std::max(1.0, std::abs(x(i)));
    xp(i) = x(i) + step;
    const double fp = f(xp);
    xp(i) = x(i) - step;
    const double fm = f(xp);
    xp(i) = x(i);
    g(i) = (fp - fm) / (2.0 * step);
  }
  return g;
}

Matrix numeric_hessian(const std::function<double(const Vector&)>& f, const Vector& x, double h) {
  const Index p = x.size();
  Matrix hess(p, p);
  Vector xp = x;
  const double f0 = f(x);
  for (Index i = 0; i < p; ++i) {
    const double hi = h * std::max(1.0, std::abs(x(i)));
    xp(i) = x(i) + hi;
    const double fp = f(xp);
    xp(i) = x(i) - hi;
    const double fm = f(xp);
    xp(i) = x(i);
    hess(i, i) = (fp - 2.0 * f0 + fm) / (hi * hi);
    for (Index j = 0; j < i; ++j) {
      const double hj = h * std::max(1.0, std::abs(x(j)));
      double acc = 0.0;
      for (int si : {1, -1}) {
        for (int sj : {1, -1}) {
          xp(i) = x(i) + si * hi;
          xp(j) = x(j) + sj * hj;
          acc += si * sj * f(xp);
        }
      }
      xp(i) = x(i);
      xp(j) = x(j);
      hess(i, j) = hess(j, i) = acc / (4.0 * hi * hj);
    }
  }
  return hess;
}

}  // namespace sparch
