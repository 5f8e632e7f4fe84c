#include "sparch/process.hpp"

#include "sparch/errors.hpp"
#include "sparch/linalg.hpp"
#include "static_lu.hpp"

#include <algorithm>
#include <cmath>

namespace sparch {

std::string_view to_string(Certificate certificate) {
  switch (certificate) {
    case Certificate::triangular: return "triangular";
    case Certificate::bounded_support: return "bounded_support";
    case Certificate::unverified: return "unverified";
  }
  return "unverified";
}

ValidityReport validate(const Vector& alpha, const SparseWeights& w, const ErrorSpec& error) {
  if (alpha.size() != w.size()) {
    throw InvalidModel("alpha has length " + std::to_string(alpha.size()) + " but W is " +
                       std::to_string(w.size()) + "x" + std::to_string(w.size()));
  }
  for (Index i = 0; i < alpha.size(); ++i) {
    if (!std::isfinite(alpha(i)) || alpha(i) < 0.0) {
      throw InvalidModel("alpha must be nonnegative (alpha[" + std::to_string(i) + "] = " +
                         std::to_string(alpha(i)) + ")");
    }
  }
  ValidityReport report;
  report.support_bound = support_bound(w);
  report.innovation_support = error.support();
  if (w.triangular()) {
    report.certificate = Certificate::triangular;
  } else if (report.innovation_support && *report.innovation_support < report.support_bound) {
    report.certificate = Certificate::bounded_support;
  } else {
    report.certificate = Certificate::unverified;
  }
  return report;
}

ValidityReport validate(const SpArchModel& model) {
  return validate(model.alpha(), model.weights(), model.error());
}

SpArchModel::SpArchModel(Vector alpha, SparseWeights weights, ErrorSpec error)
    : alpha_(std::move(alpha)), weights_(std::move(weights)), error_(error) {
  validity_ = validate(alpha_, weights_, error_);
}

SpArchModel SpArchModel::homogeneous(double alpha, SparseWeights weights, ErrorSpec error) {
  const Index n = weights.size();
  return SpArchModel(Vector::Constant(n, alpha), std::move(weights), error);
}

SparseMatrix build_A(const Vector& eps, const SparseWeights& w) {
  if (eps.size() != w.size()) throw InvalidModel("eps and W differ in size");
  SparseMatrix a = w.matrix();
  for (Index i = 0; i < a.outerSize(); ++i) {
    const double e2 = eps(i) * eps(i);
    for (SparseMatrix::InnerIterator it(a, i); it; ++it) it.valueRef() *= e2;
  }
  return a;
}

Vector eta(const Vector& eps, const Vector& alpha, const SparseWeights& w) {
  if (eps.size() != w.size() || alpha.size() != w.size()) throw InvalidModel("eps, alpha and W differ in size");
  const Vector e2 = eps.array().square();
  const Vector weighted = w.matrix() * e2.cwiseProduct(alpha);
  return e2.cwiseProduct(alpha + weighted);
}

namespace {

void enforce_nonnegative(Vector& v, const char* what) {
  for (Index i = 0; i < v.size(); ++i) {
    if (v(i) >= 0.0) continue;
    if (v(i) >= -kNonnegativityTolerance) {
      v(i) = 0.0;
      continue;
    }
    throw NonnegativityViolation(std::string(what) + "[" + std::to_string(i) + "] = " + std::to_string(v(i)) +
                                 " < 0: (W, eps) is inadmissible");
  }
}

}  // namespace

// I - A shares the pattern of W, so its fill and ordering are fixed across draws.
struct Y2Solver::General {
  detail::StaticLU lu;
  std::vector<Index> entry_slots;  // slot of each stored W entry, in row-major order

  explicit General(const SparseWeights& weights) : lu(weights.matrix()) {
    const SparseMatrix& w = weights.matrix();
    entry_slots.reserve(static_cast<std::size_t>(w.nonZeros()));
    for (Index i = 0; i < w.outerSize(); ++i) {
      for (SparseMatrix::InnerIterator it(w, i); it; ++it) entry_slots.push_back(lu.slot(i, it.col()));
    }
  }

  static bool accurate(const SparseMatrix& w, const Vector& e2, const Vector& b, const Vector& x) {
    const Vector residual = b - (x - e2.cwiseProduct(w * x));
    const double scale = b.cwiseAbs().maxCoeff() + x.cwiseAbs().maxCoeff();
    return x.allFinite() && residual.cwiseAbs().maxCoeff() <= 1e-12 * std::max(scale, 1e-300);
  }

  // Gauss-Seidel sweeps x_i <- b_i + e2_i (W x)_i; a few dozen suffice for admissible draws.
  static bool gauss_seidel(const SparseMatrix& w, const Vector& e2, const Vector& b, Vector& x) {
    constexpr int kMaxSweeps = 200;
    x = b;
    for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
      double change = 0.0;
      double scale = 0.0;
      for (Index i = 0; i < w.outerSize(); ++i) {
        double s = 0.0;
        for (SparseMatrix::InnerIterator it(w, i); it; ++it) s += it.value() * x(it.col());
        const double v = b(i) + e2(i) * s;
        change = std::max(change, std::abs(v - x(i)));
        scale = std::max(scale, std::abs(v));
        x(i) = v;
      }
      if (!std::isfinite(change)) return false;
      if (change <= 1e-16 * scale) return accurate(w, e2, b, x);
    }
    return false;
  }

  // Solves (I - diag(e2) W) x = b; false when neither iteration nor the unpivoted factorization is trustworthy.
  bool solve(const SparseMatrix& w, const Vector& e2, const Vector& b, Vector& x) {
    if (gauss_seidel(w, e2, b, x)) return true;
    lu.clear();
    for (Index i = 0; i < w.outerSize(); ++i) lu.value(lu.diagonal_slot(i)) = 1.0;
    std::size_t k = 0;
    for (Index i = 0; i < w.outerSize(); ++i) {
      for (SparseMatrix::InnerIterator it(w, i); it; ++it) lu.value(entry_slots[k++]) = -e2(i) * it.value();
    }
    if (!lu.factorize(1e-8)) return false;
    x = lu.solve(b);
    return accurate(w, e2, b, x);
  }
};

Y2Solver::Y2Solver(const SpArchModel& model) : alpha_(model.alpha()), weights_(model.weights()) {
  if (!weights_.triangular()) general_ = std::make_unique<General>(weights_);
}

Y2Solver::Y2Solver(Y2Solver&&) noexcept = default;
Y2Solver& Y2Solver::operator=(Y2Solver&&) noexcept = default;
Y2Solver::~Y2Solver() = default;

Y2Solution Y2Solver::solve(const Vector& eps) {
  if (eps.size() != alpha_.size()) throw InvalidModel("eps has the wrong length");
  return weights_.triangular() ? solve_triangular(eps) : solve_general(eps);
}

Y2Solution Y2Solver::solve_triangular(const Vector& eps) const {
  const SparseMatrix& w = weights_.matrix();
  Y2Solution out{Vector::Zero(eps.size()), Vector::Zero(eps.size())};
  for (Index i : *weights_.causal_order()) {
    double h = alpha_(i);
    for (SparseMatrix::InnerIterator it(w, i); it; ++it) h += it.value() * out.y2(it.col());
    out.h(i) = h;
    out.y2(i) = eps(i) * eps(i) * h;
  }
  return out;
}

Y2Solution Y2Solver::solve_general(const Vector& eps) {
  // Y2 = diag(e2) h = diag(e2) (alpha + W Y2), i.e. (I - A) Y2 = diag(e2) alpha. Multiplying by
  // I + A gives the squared system (I - A^2) Y2 = eta, so both share the same unique solution.
  const SparseMatrix& w = weights_.matrix();
  const Vector e2 = eps.array().square();
  const Vector rhs = e2.cwiseProduct(alpha_);
  Y2Solution out;
  if (!general_->solve(w, e2, rhs, out.y2)) {
    SparseMatrix a = w;
    for (Index i = 0; i < a.outerSize(); ++i) {
      for (SparseMatrix::InnerIterator it(a, i); it; ++it) it.valueRef() *= e2(i);
    }
    out.y2 = sparse_solve(identity_minus(a), rhs);
  }
  if (!out.y2.allFinite()) throw SingularSystem("I - A is singular for this innovation draw");
  enforce_nonnegative(out.y2, "Y2");
  out.h = alpha_ + w * out.y2;
  enforce_nonnegative(out.h, "h");
  return out;
}

Y2Solution solve_y2_squared(const Vector& eps, const SpArchModel& model) {
  const SparseMatrix a = build_A(eps, model.weights());
  const SparseMatrix a2 = a * a;
  Y2Solution out;
  out.y2 = sparse_solve(identity_minus(a2), eta(eps, model.alpha(), model.weights()));
  if (!out.y2.allFinite()) throw SingularSystem("I - A^2 solve produced non-finite values");
  enforce_nonnegative(out.y2, "Y2");
  out.h = model.alpha() + model.weights().matrix() * out.y2;
  enforce_nonnegative(out.h, "h");
  return out;
}

Y2Solution solve_y2(const Vector& eps, const SpArchModel& model) { return Y2Solver(model).solve(eps); }

namespace {

Realization assemble_realization(Y2Solution solution, const Vector& eps, Seed seed) {
  Realization r;
  r.y = solution.h.array().sqrt() * eps.array();
  r.y2 = std::move(solution.y2);
  r.h = std::move(solution.h);
  r.eps = eps;
  r.seed = seed;
  return r;
}

}  // namespace

Realization realize(const SpArchModel& model, const Vector& eps, Seed seed) {
  return assemble_realization(solve_y2(eps, model), eps, seed);
}

Realization simulate(const SpArchModel& model, Seed seed) {
  return realize(model, draw_innovations(model.error(), model.size(), seed), seed);
}

Realization Simulator::operator()(Seed seed) {
  return (*this)(draw_innovations(model_.error(), model_.size(), seed), seed);
}

Realization Simulator::operator()(const Vector& eps, Seed seed) {
  return assemble_realization(solver_.solve(eps), eps, seed);
}

Vector spgarch_h(const Vector& y2, const Vector& alpha, const SparseWeights& w1, const SparseWeights& w2) {
  const Index n = alpha.size();
  if (y2.size() != n || w1.size() != n || w2.size() != n) throw InvalidModel("spGARCH inputs differ in size");
  const Vector rhs = alpha + w1.matrix() * y2;
  if (w2.empty()) return rhs;
  return sparse_solve(identity_minus(w2.matrix()), rhs);
}

ClosedFormN2 closed_form_n2(std::array<double, 2> eps, std::array<double, 2> alpha, double w12, double w21) {
  const double e1 = eps[0] * eps[0];
  const double e2 = eps[1] * eps[1];
  const double coupling = w12 * w21 * e1 * e2;
  const double denom = 1.0 - coupling;
  ClosedFormN2 out;
  out.y2[0] = e1 * (alpha[0] + alpha[1] * w12 * e2) / denom;
  out.y2[1] = e2 * (alpha[1] + alpha[0] * w21 * e1) / denom;
  out.admissible = alpha[0] >= 0.0 && alpha[1] >= 0.0 && w12 >= 0.0 && w21 >= 0.0 && coupling < 1.0;
  return out;
}

SarSpArchModel::SarSpArchModel(Matrix covariates, Vector beta, std::vector<double> lambda,
                               std::vector<SparseWeights> lag_weights, SpArchModel noise)
    : covariates_(std::move(covariates)),
      beta_(std::move(beta)),
      lambda_(std::move(lambda)),
      lag_weights_(std::move(lag_weights)),
      noise_(std::move(noise)) {
  const Index n = noise_.size();
  if (covariates_.rows() != n) throw InvalidModel("X must have one row per site");
  if (covariates_.cols() < 1 || !(covariates_.col(0).array() == 1.0).all()) {
    throw InvalidModel("first column of X must be all ones");
  }
  if (beta_.size() != covariates_.cols()) throw InvalidModel("beta must have one entry per column of X");
  if (lambda_.size() != lag_weights_.size()) throw InvalidModel("need one lambda per SAR weight matrix");
  for (const auto& b : lag_weights_) {
    if (b.size() != n) throw InvalidModel("SAR weight matrices must be n x n");
  }
  if (!lag_weights_.empty()) {
    const auto det = sparse_log_determinant(sar_matrix());
    if (det.sign <= 0.0) throw SingularSystem("I - sum lambda_k B_k is not in the invertibility region");
  }
}

ColSparseMatrix SarSpArchModel::sar_matrix() const {
  if (lag_weights_.empty()) {
    ColSparseMatrix identity(size(), size());
    identity.setIdentity();
    return identity;
  }
  return sar_operator(lambda_, lag_weights_);
}

Vector sar_response(const SarSpArchModel& model, const Vector& xi) {
  const Vector rhs = model.covariates() * model.beta() + xi;
  if (model.lag_weights().empty()) return rhs;
  return sparse_solve(model.sar_matrix(), rhs);
}

SarRealization simulate_sar_sparch(const SarSpArchModel& model, Seed seed) {
  SarRealization out;
  out.noise = simulate(model.noise(), seed);
  out.y = sar_response(model, out.noise.y);
  return out;
}

}  // namespace sparch
