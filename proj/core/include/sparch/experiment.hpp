#pragma once

#include "sparch/config.hpp"
#include "sparch/error_spec.hpp"
#include "sparch/likelihood.hpp"
#include "sparch/types.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace sparch {

enum class ExperimentKind { moran_vs_rho, estimator_density, sar_sparch_recovery, custom };

ExperimentKind parse_experiment_kind(std::string_view name);
std::string_view to_string(ExperimentKind kind);

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::moran_vs_rho;
  std::vector<Index> lattice_sides{50};
  std::vector<double> rho_grid;
  std::vector<double> alpha_grid{5.0};
  Index replicates = 500;
  /// Replicate r of every setting uses seed base_seed + r.
  Seed base_seed = 0;
  /// Innovation law; moran_vs_rho replaces it by a truncated Gaussian at the support bound.
  ErrorSpec error = ErrorSpec::gaussian();
  double truncation_factor = 0.999;
  /// Worker pool size; 0 means one worker per hardware thread.
  unsigned threads = 1;
  std::string output;

  // sar_sparch_recovery
  std::vector<double> lambda{0.25, 0.4};
  std::vector<double> beta{1.0, 0.5};

  // custom: a spARCH model spec (see sparch_model_from_json) and optional diagnostic weights
  Json model;
  Json diagnostic_weights;
  bool fit_custom = false;

  FitConfig fit;

  /// Throws ConfigError naming the offending field.
  void validate() const;

  /// Defaults of each experiment: grids, lattice sides and replicate counts.
  static ExperimentConfig defaults(ExperimentKind kind);
};

/// {"experiment": kind, "d": side or [sides], "rho": [...], "alpha": [...], "replicates": R,
///  "seed": s, "error": spec, "truncation_factor": f, "threads": t, "output": dir,
///  "lambda": [...], "beta": [...], "model": spec, "diagnostic_weights": spec, "fit": spec}.
/// Omitted fields take the experiment's defaults.
ExperimentConfig experiment_config_from_json(const Json& j);

struct ExperimentResult {
  struct Row {
    std::string setting;
    Index replicate = 0;
    std::string statistic;
    double value = 0.0;
  };
  struct Summary {
    std::string setting;
    std::string statistic;
    Index count = 0;
    /// Replicates left out (non-converged fits or failed draws).
    Index excluded = 0;
    double mean = 0.0;
    double std = 0.0;
    double q025 = 0.0;
    double q25 = 0.0;
    double q50 = 0.0;
    double q75 = 0.0;
    double q975 = 0.0;
  };
  struct DensityPoint {
    std::string setting;
    std::string statistic;
    double x = 0.0;
    double density = 0.0;
  };
  struct SettingValue {
    std::string setting;
    std::string key;
    double value = 0.0;
  };

  std::vector<Row> rows;
  std::vector<Summary> summary;
  std::vector<DensityPoint> density;
  std::vector<SettingValue> settings;

  /// Values of one statistic for one setting, in replicate order.
  [[nodiscard]] std::vector<double> values(std::string_view setting, std::string_view statistic) const;
  [[nodiscard]] const Summary* find_summary(std::string_view setting, std::string_view statistic) const;
  [[nodiscard]] std::optional<double> setting_value(std::string_view setting, std::string_view key) const;
};

/// Runs body(worker, i) for i in [0, count) on up to `threads` workers. Every index is visited
/// exactly once; worker ids lie in [0, workers). The first exception is rethrown.
void parallel_for(Index count, unsigned threads, const std::function<void(unsigned, Index)>& body);

/// Number of workers parallel_for uses for `threads` and `count`.
unsigned worker_count(unsigned threads, Index count);

struct KernelDensity {
  double bandwidth = 0.0;
  std::vector<double> x;
  std::vector<double> density;
};

/// Gaussian kernel density on a `points`-point grid spanning the data +- 3 bandwidths.
/// Bandwidth by Silverman's rule 0.9 min(sd, IQR / 1.34) n^(-1/5).
KernelDensity kernel_density(const std::vector<double>& values, Index points = 512);

/// Linear-interpolation sample quantile (type 7) of sorted data.
double quantile_sorted(const std::vector<double>& sorted, double q);

ExperimentResult run_moran_vs_rho(const ExperimentConfig& config);
ExperimentResult run_estimator_density(const ExperimentConfig& config);
ExperimentResult run_sar_sparch_recovery(const ExperimentConfig& config);
ExperimentResult run_custom(const ExperimentConfig& config);
ExperimentResult run_experiment(const ExperimentConfig& config);

/// Writes replicates.csv, summary.csv, density.csv and settings.csv into `directory`.
void write_experiment(const ExperimentResult& result, const std::string& directory);

}  // namespace sparch
