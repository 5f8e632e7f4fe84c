#include "sparch/experiment.hpp"

#include "sparch/diagnostics.hpp"
#include "sparch/errors.hpp"
#include "sparch/io.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>
#include <mutex>
#include <numbers>
#include <thread>

namespace sparch {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

std::string setting_id(Index d, double alpha, double rho) {
  return "d=" + std::to_string(d) + " alpha=" + fmt(alpha) + " rho=" + fmt(rho);
}

/// Statistics recorded for one replicate, in a fixed order.
struct Record {
  std::vector<std::pair<std::string, double>> values;
  void add(std::string name, double v) { values.emplace_back(std::move(name), v); }
};

void append_rows(ExperimentResult& out, const std::string& setting, const std::vector<Record>& records) {
  for (std::size_t r = 0; r < records.size(); ++r) {
    for (const auto& [name, v] : records[r].values) out.rows.push_back({setting, static_cast<Index>(r), name, v});
  }
}

std::vector<double> column(const std::vector<Record>& records, const std::string& name,
                           const std::vector<bool>& keep) {
  std::vector<double> out;
  for (std::size_t r = 0; r < records.size(); ++r) {
    if (!keep[r]) continue;
    for (const auto& [key, v] : records[r].values) {
      if (key == name && std::isfinite(v)) out.push_back(v);
    }
  }
  return out;
}

void summarize(ExperimentResult& out, const std::string& setting, const std::vector<Record>& records,
               const std::vector<std::string>& statistics, const std::vector<bool>& keep, bool with_density) {
  for (const auto& name : statistics) {
    std::vector<double> v = column(records, name, keep);
    ExperimentResult::Summary s{setting, name};
    s.count = static_cast<Index>(v.size());
    s.excluded = static_cast<Index>(records.size()) - s.count;
    if (v.empty()) {
      s.mean = s.std = s.q025 = s.q25 = s.q50 = s.q75 = s.q975 = kNaN;
      out.summary.push_back(s);
      continue;
    }
    double sum = 0.0;
    for (double x : v) sum += x;
    s.mean = sum / static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.std = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
    std::vector<double> sorted = v;
    std::sort(sorted.begin(), sorted.end());
    s.q025 = quantile_sorted(sorted, 0.025);
    s.q25 = quantile_sorted(sorted, 0.25);
    s.q50 = quantile_sorted(sorted, 0.5);
    s.q75 = quantile_sorted(sorted, 0.75);
    s.q975 = quantile_sorted(sorted, 0.975);
    out.summary.push_back(s);
    if (with_density && v.size() >= 2) {
      const KernelDensity kde = kernel_density(v);
      for (std::size_t g = 0; g < kde.x.size(); ++g) out.density.push_back({setting, name, kde.x[g], kde.density[g]});
    }
  }
}

void add_moran(Record& rec, const std::string& prefix, const MoranResult& m) {
  rec.add(prefix, m.I);
  rec.add(prefix + "_z", m.z);
  rec.add(prefix + "_p", m.p);
}

void add_missing_moran(Record& rec, const std::string& prefix) {
  rec.add(prefix, kNaN);
  rec.add(prefix + "_z", kNaN);
  rec.add(prefix + "_p", kNaN);
}

MoranResult moran_or_nan(const Vector& x, const SparseWeights& w) {
  try {
    return morans_i(x, w);
  } catch (const DegenerateInput&) {
    return {kNaN, kNaN, kNaN, kNaN, kNaN};
  }
}

/// Null moments of Moran's I depend on W only (normality assumption).
MoranResult null_moments(const SparseWeights& w) {
  Vector x(w.size());
  for (Index i = 0; i < x.size(); ++i) x(i) = static_cast<double>(i);
  return morans_i(x, w);
}

/// Per-worker lazily constructed simulators for one model.
class SimulatorPool {
 public:
  SimulatorPool(const SpArchModel& model, unsigned workers) : model_(model), sims_(workers) {}
  Realization operator()(unsigned worker, Seed seed) {
    auto& slot = sims_[worker];
    if (!slot) slot.emplace(model_);
    return (*slot)(seed);
  }

 private:
  const SpArchModel& model_;
  std::vector<std::optional<Simulator>> sims_;
};

SparseWeights oriented_queen(Index d) {
  const SpatialDomain domain = SpatialDomain::lattice(d);
  const double c = std::floor(static_cast<double>(d) / 2.0);
  return build_oriented(build_queen(d), domain, Location{{c, c}});
}

std::vector<std::string> fit_names(Index m, Index lags, bool plain_sar) {
  std::vector<std::string> names;
  for (Index c = 0; c < m; ++c) names.push_back("beta_" + std::to_string(c));
  for (Index l = 0; l < lags; ++l) names.push_back("lambda_" + std::to_string(l + 1));
  names.emplace_back(plain_sar ? "sigma2" : "alpha");
  if (!plain_sar) names.emplace_back("rho");
  return names;
}

void add_fit(Record& rec, const std::string& prefix, const std::vector<std::string>& names,
             const std::optional<FitResult>& fit, const SparseWeights& w_diag) {
  for (const auto& name : names) rec.add(prefix + "." + name, fit ? fit->estimate(name) : kNaN);
  rec.add(prefix + ".loglik", fit ? fit->loglik : kNaN);
  rec.add(prefix + ".aic", fit ? fit->aic : kNaN);
  rec.add(prefix + ".converged", fit && fit->converged ? 1.0 : 0.0);
  std::vector<std::string> series{"xi", "xi^2"};
  if (prefix != "SAR") {
    series.emplace_back("eps");
    series.emplace_back("eps^2");
  }
  std::vector<DiagnosticRow> rows;
  if (fit) {
    try {
      rows = residual_diagnostics(*fit, w_diag);
    } catch (const DegenerateInput&) {
    }
  }
  for (std::size_t k = 0; k < series.size(); ++k) {
    const std::string p = prefix + ".moran_" + series[k];
    if (k < rows.size()) {
      add_moran(rec, p, rows[k].moran);
    } else {
      add_missing_moran(rec, p);
    }
  }
}

template <class T>
std::vector<T> json_list(const Json& j, const std::string& path) {
  if (j.is_number()) return {j.get<T>()};
  if (!j.is_array()) throw ConfigError(path + ": expected a number or an array of numbers");
  std::vector<T> out;
  for (std::size_t k = 0; k < j.size(); ++k) {
    if (!j[k].is_number()) throw ConfigError(path + "[" + std::to_string(k) + "]: expected a number");
    out.push_back(j[k].get<T>());
  }
  return out;
}

}  // namespace

ExperimentKind parse_experiment_kind(std::string_view name) {
  if (name == "moran_vs_rho") return ExperimentKind::moran_vs_rho;
  if (name == "estimator_density") return ExperimentKind::estimator_density;
  if (name == "sar_sparch_recovery") return ExperimentKind::sar_sparch_recovery;
  if (name == "custom") return ExperimentKind::custom;
  throw ConfigError("experiment: unknown kind '" + std::string(name) + "'");
}

std::string_view to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::moran_vs_rho: return "moran_vs_rho";
    case ExperimentKind::estimator_density: return "estimator_density";
    case ExperimentKind::sar_sparch_recovery: return "sar_sparch_recovery";
    case ExperimentKind::custom: return "custom";
  }
  return "?";
}

ExperimentConfig ExperimentConfig::defaults(ExperimentKind kind) {
  ExperimentConfig c;
  c.kind = kind;
  switch (kind) {
    case ExperimentKind::moran_vs_rho:
      c.lattice_sides = {50};
      c.alpha_grid = {5.0};
      c.rho_grid.clear();
      for (int k = 0; k <= 40; ++k) c.rho_grid.push_back(0.05 * k);
      c.replicates = 500;
      break;
    case ExperimentKind::estimator_density:
      c.lattice_sides = {10, 20, 50};
      c.alpha_grid = {0.5, 1.0, 2.0, 5.0};
      c.rho_grid = {0.0, 0.2, 0.6, 0.9};
      c.replicates = 500;
      break;
    case ExperimentKind::sar_sparch_recovery:
      c.lattice_sides = {30};
      c.alpha_grid = {0.06};
      c.rho_grid = {0.65};
      c.replicates = 200;
      break;
    case ExperimentKind::custom:
      c.lattice_sides = {};
      c.alpha_grid = {};
      c.rho_grid = {};
      c.replicates = 500;
      break;
  }
  return c;
}

void ExperimentConfig::validate() const {
  if (replicates < 1) throw ConfigError("replicates: must be at least 1");
  if (!(truncation_factor > 0.0 && truncation_factor < 1.0)) {
    throw ConfigError("truncation_factor: must lie in (0, 1)");
  }
  if (kind == ExperimentKind::custom) {
    if (model.is_null()) throw ConfigError("model: required for the custom experiment");
    return;
  }
  if (lattice_sides.empty()) throw ConfigError("d: grid is empty");
  for (Index d : lattice_sides) {
    if (d < 2) throw ConfigError("d: lattice side must be at least 2");
  }
  if (rho_grid.empty()) throw ConfigError("rho: grid is empty");
  if (alpha_grid.empty()) throw ConfigError("alpha: grid is empty");
  for (double r : rho_grid) {
    if (!(r >= 0.0) || !std::isfinite(r)) throw ConfigError("rho: values must be finite and nonnegative");
  }
  for (double a : alpha_grid) {
    if (!(a > 0.0) || !std::isfinite(a)) throw ConfigError("alpha: values must be finite and positive");
  }
  if (kind == ExperimentKind::sar_sparch_recovery) {
    if (beta.empty()) throw ConfigError("beta: needs at least the intercept");
  }
}

ExperimentConfig experiment_config_from_json(const Json& j) {
  if (!j.is_object()) throw ConfigError("experiment config: expected an object");
  if (!j.contains("experiment") || !j["experiment"].is_string()) {
    throw ConfigError("experiment: missing or not a string");
  }
  ExperimentConfig c = ExperimentConfig::defaults(parse_experiment_kind(j["experiment"].get<std::string>()));
  const auto number_field = [&](const char* key) {
    if (!j[key].is_number()) throw ConfigError(std::string(key) + ": expected a number");
    return j[key].get<double>();
  };
  const auto nonneg_integer = [&](const char* key) {
    const double v = number_field(key);
    if (v < 0 || v != std::floor(v)) throw ConfigError(std::string(key) + ": expected a nonnegative integer");
    return v;
  };
  if (j.contains("d")) {
    c.lattice_sides.clear();
    for (double d : json_list<double>(j["d"], "d")) {
      if (d != std::floor(d)) throw ConfigError("d: expected integers");
      c.lattice_sides.push_back(static_cast<Index>(d));
    }
  }
  if (j.contains("rho")) c.rho_grid = json_list<double>(j["rho"], "rho");
  if (j.contains("alpha")) c.alpha_grid = json_list<double>(j["alpha"], "alpha");
  if (j.contains("replicates")) c.replicates = static_cast<Index>(nonneg_integer("replicates"));
  if (j.contains("seed")) c.base_seed = static_cast<Seed>(nonneg_integer("seed"));
  if (j.contains("error")) c.error = error_from_json(j["error"], "error");
  if (j.contains("truncation_factor")) c.truncation_factor = number_field("truncation_factor");
  if (j.contains("threads")) c.threads = static_cast<unsigned>(nonneg_integer("threads"));
  if (j.contains("output")) {
    if (!j["output"].is_string()) throw ConfigError("output: expected a string");
    c.output = j["output"].get<std::string>();
  }
  if (j.contains("lambda")) c.lambda = json_list<double>(j["lambda"], "lambda");
  if (j.contains("beta")) c.beta = json_list<double>(j["beta"], "beta");
  if (j.contains("model")) c.model = j["model"];
  if (j.contains("diagnostic_weights")) c.diagnostic_weights = j["diagnostic_weights"];
  if (j.contains("fit")) {
    if (j["fit"].is_boolean()) {
      c.fit_custom = j["fit"].get<bool>();
    } else {
      c.fit = fit_config_from_json(j["fit"], "fit");
      c.fit_custom = true;
    }
  }
  c.validate();
  if (c.kind == ExperimentKind::custom) (void)sparch_model_from_json(c.model, "model");
  if (!c.diagnostic_weights.is_null()) (void)weights_from_json(c.diagnostic_weights, "diagnostic_weights");
  return c;
}

std::vector<double> ExperimentResult::values(std::string_view setting, std::string_view statistic) const {
  std::vector<double> out;
  for (const auto& r : rows) {
    if (r.setting == setting && r.statistic == statistic) out.push_back(r.value);
  }
  return out;
}

const ExperimentResult::Summary* ExperimentResult::find_summary(std::string_view setting,
                                                                std::string_view statistic) const {
  for (const auto& s : summary) {
    if (s.setting == setting && s.statistic == statistic) return &s;
  }
  return nullptr;
}

std::optional<double> ExperimentResult::setting_value(std::string_view setting, std::string_view key) const {
  for (const auto& s : settings) {
    if (s.setting == setting && s.key == key) return s.value;
  }
  return std::nullopt;
}

unsigned worker_count(unsigned threads, Index count) {
  unsigned t = threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : threads;
  if (count < static_cast<Index>(t)) t = static_cast<unsigned>(std::max<Index>(count, 1));
  return t;
}

void parallel_for(Index count, unsigned threads, const std::function<void(unsigned, Index)>& body) {
  const unsigned workers = worker_count(threads, count);
  if (workers <= 1) {
    for (Index i = 0; i < count; ++i) body(0, i);
    return;
  }
  std::atomic<Index> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      while (!failed.load()) {
        const Index i = next.fetch_add(1);
        if (i >= count) return;
        try {
          body(w, i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
          failed.store(true);
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

double quantile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return kNaN;
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

KernelDensity kernel_density(const std::vector<double>& values, Index points) {
  KernelDensity kde;
  if (values.empty() || points < 2) return kde;
  std::vector<double> sorted = values;
  std::sort(sorted.begin(), sorted.end());
  const auto n = static_cast<double>(sorted.size());
  double mean = 0.0;
  for (double v : sorted) mean += v;
  mean /= n;
  double ss = 0.0;
  for (double v : sorted) ss += (v - mean) * (v - mean);
  const double sd = sorted.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  const double iqr = (quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25)) / 1.34;
  double spread = iqr > 0.0 ? std::min(sd, iqr) : sd;
  // Degenerate samples (all equal) get a bandwidth on the scale of the value itself.
  if (!(spread > 0.0)) spread = 1e-3 * std::max(1.0, std::abs(mean));
  kde.bandwidth = 0.9 * spread * std::pow(n, -0.2);
  const double lo = sorted.front() - 3.0 * kde.bandwidth;
  const double hi = sorted.back() + 3.0 * kde.bandwidth;
  const double norm = 1.0 / (n * kde.bandwidth * std::sqrt(2.0 * std::numbers::pi));
  kde.x.resize(static_cast<std::size_t>(points));
  kde.density.resize(static_cast<std::size_t>(points));
  for (Index g = 0; g < points; ++g) {
    const double x = lo + (hi - lo) * static_cast<double>(g) / static_cast<double>(points - 1);
    double acc = 0.0;
    for (double v : sorted) {
      const double u = (x - v) / kde.bandwidth;
      acc += std::exp(-0.5 * u * u);
    }
    kde.x[static_cast<std::size_t>(g)] = x;
    kde.density[static_cast<std::size_t>(g)] = acc * norm;
  }
  return kde;
}

ExperimentResult run_moran_vs_rho(const ExperimentConfig& config) {
  config.validate();
  ExperimentResult out;
  const std::vector<std::string> stats{"moran_y", "moran_y_z", "moran_y_p", "moran_y2", "moran_y2_z", "moran_y2_p"};
  for (Index d : config.lattice_sides) {
    const SparseWeights rook = build_rook(d);
    const MoranResult null = null_moments(rook);
    for (double alpha : config.alpha_grid) {
      for (double rho : config.rho_grid) {
        const std::string id = setting_id(d, alpha, rho);
        const SparseWeights w = rook.scaled(rho);
        const double a_max = support_bound(w);
        const bool bounded = std::isfinite(a_max);
        const ErrorSpec error =
            bounded ? ErrorSpec::truncated_gaussian(config.truncation_factor * a_max) : config.error;
        const SpArchModel model = SpArchModel::homogeneous(alpha, w, error);
        out.settings.push_back({id, "d", static_cast<double>(d)});
        out.settings.push_back({id, "alpha", alpha});
        out.settings.push_back({id, "rho", rho});
        out.settings.push_back({id, "a_max", a_max});
        out.settings.push_back({id, "a", bounded ? config.truncation_factor * a_max : kNaN});
        out.settings.push_back({id, "certified", model.validity().certificate != Certificate::unverified ? 1.0 : 0.0});
        out.settings.push_back({id, "null_expectation", null.expectation});
        out.settings.push_back({id, "null_std", null.std});
        out.settings.push_back({id, "ci_lower", null.expectation - 1.959963984540054 * null.std});
        out.settings.push_back({id, "ci_upper", null.expectation + 1.959963984540054 * null.std});

        const unsigned workers = worker_count(config.threads, config.replicates);
        SimulatorPool pool(model, workers);
        std::vector<Record> records(static_cast<std::size_t>(config.replicates));
        std::vector<char> ok(records.size(), 1);
        parallel_for(config.replicates, config.threads, [&](unsigned worker, Index r) {
          Record rec;
          char& k = ok[static_cast<std::size_t>(r)];
          try {
            const Realization real = pool(worker, config.base_seed + static_cast<Seed>(r));
            rec.add("violation", 0.0);
            add_moran(rec, "moran_y", moran_or_nan(real.y, rook));
            add_moran(rec, "moran_y2", moran_or_nan(real.y2, rook));
          } catch (const NumericalError&) {
            rec.add("violation", 1.0);
            add_missing_moran(rec, "moran_y");
            add_missing_moran(rec, "moran_y2");
            k = 0;
          }
          records[static_cast<std::size_t>(r)] = std::move(rec);
        });
        std::vector<bool> keep(ok.begin(), ok.end());
        out.settings.push_back(
            {id, "violations", static_cast<double>(std::count(keep.begin(), keep.end(), false))});
        append_rows(out, id, records);
        summarize(out, id, records, stats, keep, false);
        std::vector<bool> all(records.size(), true);
        summarize(out, id, records, {"violation"}, all, false);
      }
    }
  }
  return out;
}

ExperimentResult run_estimator_density(const ExperimentConfig& config) {
  config.validate();
  ExperimentResult out;
  for (Index d : config.lattice_sides) {
    const SparseWeights w_tilde = row_standardize(oriented_queen(d));
    for (double alpha : config.alpha_grid) {
      for (double rho : config.rho_grid) {
        const std::string id = setting_id(d, alpha, rho);
        const SpArchModel model = SpArchModel::homogeneous(alpha, w_tilde.scaled(rho), config.error);
        out.settings.push_back({id, "d", static_cast<double>(d)});
        out.settings.push_back({id, "alpha", alpha});
        out.settings.push_back({id, "rho", rho});

        const unsigned workers = worker_count(config.threads, config.replicates);
        SimulatorPool pool(model, workers);
        std::vector<Record> records(static_cast<std::size_t>(config.replicates));
        std::vector<char> converged(records.size(), 0);
        parallel_for(config.replicates, config.threads, [&](unsigned worker, Index r) {
          Record rec;
          std::optional<FitResult> fit;
          try {
            const Realization real = pool(worker, config.base_seed + static_cast<Seed>(r));
            fit = fit_ml(real.y, w_tilde, config.fit);
          } catch (const NumericalError&) {
          }
          const bool good = fit && fit->converged;
          converged[static_cast<std::size_t>(r)] = good ? 1 : 0;
          rec.add("alpha_hat", fit ? fit->estimate("alpha") : kNaN);
          rec.add("rho_hat", fit ? fit->estimate("rho") : kNaN);
          rec.add("alpha_se", fit ? fit->standard_error("alpha") : kNaN);
          rec.add("rho_se", fit ? fit->standard_error("rho") : kNaN);
          rec.add("loglik", fit ? fit->loglik : kNaN);
          rec.add("iterations", fit ? fit->iterations : kNaN);
          rec.add("converged", good ? 1.0 : 0.0);
          rec.add("rho_at_boundary", fit && fit->rho_at_boundary ? 1.0 : 0.0);
          records[static_cast<std::size_t>(r)] = std::move(rec);
        });
        std::vector<bool> keep(converged.begin(), converged.end());
        out.settings.push_back(
            {id, "nonconverged", static_cast<double>(std::count(keep.begin(), keep.end(), false))});
        append_rows(out, id, records);
        summarize(out, id, records, {"alpha_hat", "rho_hat"}, keep, true);
        summarize(out, id, records, {"alpha_se", "rho_se", "rho_at_boundary"}, keep, false);
      }
    }
  }
  return out;
}

ExperimentResult run_sar_sparch_recovery(const ExperimentConfig& config) {
  config.validate();
  ExperimentResult out;
  const auto m = static_cast<Index>(config.beta.size());
  const auto k_lags = static_cast<Index>(config.lambda.size());
  for (Index d : config.lattice_sides) {
    const Index n = d * d;
    const SparseWeights w_tilde = row_standardize(oriented_queen(d));
    std::vector<SparseWeights> lags;
    for (Index k = 1; k <= k_lags; ++k) lags.push_back(build_queen_lag(d, k));
    const SparseWeights w_diag = config.diagnostic_weights.is_null()
                                     ? w_tilde
                                     : weights_from_json(config.diagnostic_weights, "diagnostic_weights");
    if (w_diag.size() != n) throw ConfigError("diagnostic_weights: size differs from the lattice");
    const Matrix x = random_covariates(n, m - 1, config.base_seed);
    Vector beta = Eigen::Map<const Vector>(config.beta.data(), m);
    for (double alpha : config.alpha_grid) {
      for (double rho : config.rho_grid) {
        const std::string id = setting_id(d, alpha, rho);
        const SarSpArchModel model(x, beta, config.lambda, lags,
                                   SpArchModel::homogeneous(alpha, w_tilde.scaled(rho), config.error));
        out.settings.push_back({id, "d", static_cast<double>(d)});
        out.settings.push_back({id, "alpha", alpha});
        out.settings.push_back({id, "rho", rho});
        for (Index k = 0; k < k_lags; ++k) {
          out.settings.push_back({id, "lambda_" + std::to_string(k + 1), config.lambda[static_cast<std::size_t>(k)]});
        }
        for (Index c = 0; c < m; ++c) out.settings.push_back({id, "beta_" + std::to_string(c), beta(c)});

        const auto sar_names = fit_names(m, k_lags, true);
        const auto full_names = fit_names(m, k_lags, false);
        std::vector<Record> records(static_cast<std::size_t>(config.replicates));
        parallel_for(config.replicates, config.threads, [&](unsigned, Index r) {
          Record rec;
          std::optional<FitResult> sar;
          std::optional<FitResult> full;
          try {
            const SarRealization real = simulate_sar_sparch(model, config.base_seed + static_cast<Seed>(r));
            try {
              sar = fit_sar(real.y, x, lags, config.fit);
            } catch (const NumericalError&) {
            }
            try {
              full = fit_sar_sparch(real.y, x, lags, w_tilde, config.fit);
            } catch (const NumericalError&) {
            }
          } catch (const NumericalError&) {
          }
          add_fit(rec, "SAR", sar_names, sar, w_diag);
          add_fit(rec, "SARspARCH", full_names, full, w_diag);
          rec.add("aic_prefers_sparch", sar && full ? (full->aic < sar->aic ? 1.0 : 0.0) : kNaN);
          records[static_cast<std::size_t>(r)] = std::move(rec);
        });
        append_rows(out, id, records);
        std::vector<std::string> stats;
        for (const auto& [name, v] : records.front().values) stats.push_back(name);
        summarize(out, id, records, stats, std::vector<bool>(records.size(), true), false);
      }
    }
  }
  return out;
}

ExperimentResult run_custom(const ExperimentConfig& config) {
  config.validate();
  ExperimentResult out;
  const SpArchModel model = sparch_model_from_json(config.model, "model");
  const SparseWeights w_diag = config.diagnostic_weights.is_null()
                                   ? model.weights()
                                   : weights_from_json(config.diagnostic_weights, "diagnostic_weights");
  if (w_diag.size() != model.size()) throw ConfigError("diagnostic_weights: size differs from the model");
  const bool moran = !w_diag.empty();
  const std::string id = "custom";
  out.settings.push_back({id, "n", static_cast<double>(model.size())});
  out.settings.push_back({id, "support_bound", model.validity().support_bound});
  out.settings.push_back({id, "certified", model.validity().certificate != Certificate::unverified ? 1.0 : 0.0});

  const unsigned workers = worker_count(config.threads, config.replicates);
  SimulatorPool pool(model, workers);
  std::vector<Record> records(static_cast<std::size_t>(config.replicates));
  std::vector<char> ok(records.size(), 1);
  parallel_for(config.replicates, config.threads, [&](unsigned worker, Index r) {
    Record rec;
    std::optional<Realization> real;
    try {
      real = pool(worker, config.base_seed + static_cast<Seed>(r));
    } catch (const NumericalError&) {
      ok[static_cast<std::size_t>(r)] = 0;
    }
    rec.add("violation", real ? 0.0 : 1.0);
    rec.add("mean_y2", real ? real->y2.mean() : kNaN);
    rec.add("max_h", real ? real->h.maxCoeff() : kNaN);
    if (moran) {
      if (real) {
        add_moran(rec, "moran_y", moran_or_nan(real->y, w_diag));
        add_moran(rec, "moran_y2", moran_or_nan(real->y2, w_diag));
      } else {
        add_missing_moran(rec, "moran_y");
        add_missing_moran(rec, "moran_y2");
      }
    }
    if (config.fit_custom) {
      std::optional<FitResult> fit;
      if (real) {
        try {
          fit = fit_ml(real->y, model.weights(), config.fit);
        } catch (const NumericalError&) {
        }
      }
      rec.add("alpha_hat", fit ? fit->estimate("alpha") : kNaN);
      rec.add("rho_hat", fit ? fit->estimate("rho") : kNaN);
      rec.add("converged", fit && fit->converged ? 1.0 : 0.0);
    }
    records[static_cast<std::size_t>(r)] = std::move(rec);
  });
  append_rows(out, id, records);
  std::vector<std::string> stats;
  for (const auto& [name, v] : records.front().values) stats.push_back(name);
  summarize(out, id, records, stats, std::vector<bool>(ok.begin(), ok.end()), false);
  return out;
}

ExperimentResult run_experiment(const ExperimentConfig& config) {
  switch (config.kind) {
    case ExperimentKind::moran_vs_rho: return run_moran_vs_rho(config);
    case ExperimentKind::estimator_density: return run_estimator_density(config);
    case ExperimentKind::sar_sparch_recovery: return run_sar_sparch_recovery(config);
    case ExperimentKind::custom: return run_custom(config);
  }
  throw ConfigError("experiment: unknown kind");
}

void write_experiment(const ExperimentResult& result, const std::string& directory) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(directory, ec);
  if (ec) throw ConfigError("output: cannot create '" + directory + "': " + ec.message());
  const auto open = [&](const char* name) {
    std::ofstream f(fs::path(directory) / name, std::ios::binary);
    if (!f) throw ConfigError(std::string("output: cannot write ") + name);
    return f;
  };
  {
    auto f = open("replicates.csv");
    f << "setting,replicate,statistic,value\n";
    for (const auto& r : result.rows) {
      f << r.setting << ',' << r.replicate << ',' << r.statistic << ',' << format_double(r.value) << '\n';
    }
  }
  {
    auto f = open("summary.csv");
    f << "setting,statistic,count,excluded,mean,std,q025,q25,q50,q75,q975\n";
    for (const auto& s : result.summary) {
      f << s.setting << ',' << s.statistic << ',' << s.count << ',' << s.excluded << ',' << format_double(s.mean)
        << ',' << format_double(s.std) << ',' << format_double(s.q025) << ',' << format_double(s.q25) << ','
        << format_double(s.q50) << ',' << format_double(s.q75) << ',' << format_double(s.q975) << '\n';
    }
  }
  {
    auto f = open("density.csv");
    f << "setting,statistic,x,density\n";
    for (const auto& p : result.density) {
      f << p.setting << ',' << p.statistic << ',' << format_double(p.x) << ',' << format_double(p.density) << '\n';
    }
  }
  {
    auto f = open("settings.csv");
    f << "setting,key,value\n";
    for (const auto& s : result.settings) f << s.setting << ',' << s.key << ',' << format_double(s.value) << '\n';
  }
}

}  // namespace sparch
