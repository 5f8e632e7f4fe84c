#include "cli.hpp"

#include "sparch/config.hpp"
#include "sparch/diagnostics.hpp"
#include "sparch/errors.hpp"
#include "sparch/experiment.hpp"
#include "sparch/io.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace sparch::cli {

namespace {

struct Globals {
  Seed seed = 0;
  bool seed_set = false;
  unsigned threads = 1;
  bool threads_set = false;
  std::string out;
};

Json read_json(const std::string& source) {
  const auto first = source.find_first_not_of(" \t\r\n");
  try {
    if (first != std::string::npos && (source[first] == '{' || source[first] == '[')) return Json::parse(source);
    std::ifstream in(source);
    if (!in) throw ConfigError("cannot open '" + source + "'");
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ConfigError("'" + source + "' is not valid JSON: " + e.what());
  }
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  return in;
}

/// Writes through `body` to --out when given, else to `out`.
template <class F>
void emit(const Globals& g, std::ostream& out, F&& body) {
  if (g.out.empty()) {
    body(out);
    return;
  }
  std::ofstream file(g.out, std::ios::binary);
  if (!file) throw ConfigError("--out: cannot write '" + g.out + "'");
  body(file);
}

SparseWeights load_weights(const std::string& path, Index n) {
  auto in = open_input(path);
  return read_weights_csv(in, n);
}

Matrix covariates_from(const CsvTable& table, Index n) {
  std::vector<std::string> names;
  for (const auto& h : table.header) {
    if (h.size() > 1 && h[0] == 'x' && std::all_of(h.begin() + 1, h.end(), ::isdigit)) names.push_back(h);
  }
  std::sort(names.begin(), names.end(), [](const std::string& a, const std::string& b) {
    return std::stoi(a.substr(1)) < std::stoi(b.substr(1));
  });
  Matrix x(n, static_cast<Index>(names.size()) + 1);
  x.col(0).setOnes();
  for (std::size_t c = 0; c < names.size(); ++c) x.col(static_cast<Index>(c) + 1) = table.column(names[c]);
  return x;
}

void cmd_weights(const Globals& g, const std::string& spec, std::ostream& out) {
  const SparseWeights w = weights_from_json(read_json(spec), "weights");
  emit(g, out, [&](std::ostream& o) { write_weights_csv(o, w); });
}

void cmd_simulate(const Globals& g, const std::string& spec, std::ostream& out) {
  const Json j = read_json(spec);
  if (j.is_object() && j.contains("noise")) {
    const SarSpArchModel model = sar_model_from_json(j, "model");
    const SarRealization r = simulate_sar_sparch(model, g.seed);
    emit(g, out, [&](std::ostream& o) { write_sar_realization_csv(o, r, model.covariates()); });
    return;
  }
  const SpArchModel model = sparch_model_from_json(j, "model");
  const Realization r = simulate(model, g.seed);
  emit(g, out, [&](std::ostream& o) { write_realization_csv(o, r); });
}

struct FitArgs {
  std::string data;
  std::string weights;
  std::string column = "y";
  std::string model = "sparch";
  std::vector<std::string> lag_weights;
  std::string parameterization;
  std::string config;
  std::string residuals;
  int max_iterations = 0;
  double tolerance = 0.0;
};

void cmd_fit(const Globals& g, const FitArgs& a, std::ostream& out) {
  auto in = open_input(a.data);
  const CsvTable table = read_csv(in);
  const Vector y = table.column(a.column);
  const Index n = y.size();
  FitConfig config = a.config.empty() ? FitConfig{} : fit_config_from_json(read_json(a.config), "fit");
  if (!a.parameterization.empty()) config.parameterization = parse_parameterization(a.parameterization);
  if (a.max_iterations > 0) config.max_iterations = a.max_iterations;
  if (a.tolerance > 0.0) config.gradient_tolerance = a.tolerance;
  config.validate();

  std::vector<SparseWeights> lags;
  for (const auto& path : a.lag_weights) lags.push_back(load_weights(path, n));

  FitResult fit;
  if (a.model == "sparch") {
    if (a.weights.empty()) throw ConfigError("--weights: required for the spARCH model");
    fit = fit_ml(y, load_weights(a.weights, n), config);
  } else if (a.model == "sar") {
    fit = fit_sar(y, covariates_from(table, n), lags, config);
  } else if (a.model == "sarsparch") {
    if (a.weights.empty()) throw ConfigError("--weights: required for the SARspARCH model");
    fit = fit_sar_sparch(y, covariates_from(table, n), lags, load_weights(a.weights, n), config);
  } else {
    throw ConfigError("--model: expected sparch, sar or sarsparch");
  }
  emit(g, out, [&](std::ostream& o) { o << fit_to_json(fit).dump(2) << '\n'; });
  if (!a.residuals.empty()) {
    std::ofstream r(a.residuals, std::ios::binary);
    if (!r) throw ConfigError("--residuals: cannot write '" + a.residuals + "'");
    write_residuals_csv(r, fit);
  }
}

struct DiagnoseArgs {
  std::string data;
  std::string weights;
  std::vector<std::string> columns;
  Index max_lag = 1;
  bool squares = true;
};

void cmd_diagnose(const Globals& g, const DiagnoseArgs& a, std::ostream& out) {
  auto in = open_input(a.data);
  const CsvTable table = read_csv(in);
  std::vector<std::string> columns = a.columns;
  if (columns.empty()) {
    for (const auto& h : table.header) {
      if (h != "site_index") columns.push_back(h);
    }
  }
  const Index n = table.rows();
  const SparseWeights base = load_weights(a.weights, n);
  std::vector<SparseWeights> lag_w{base};
  for (Index k = 2; k <= a.max_lag; ++k) lag_w.push_back(graph_lag(base, k));
  std::vector<MoranRow> rows;
  for (const auto& name : columns) {
    const Vector x = table.column(name);
    std::vector<std::pair<std::string, Vector>> series{{name, x}};
    if (a.squares) series.emplace_back(name + "^2", x.array().square().matrix());
    for (const auto& [label, v] : series) {
      for (Index k = 1; k <= a.max_lag; ++k) {
        rows.push_back({label, k, morans_i(v, lag_w[static_cast<std::size_t>(k - 1)])});
      }
    }
  }
  emit(g, out, [&](std::ostream& o) { write_moran_csv(o, rows); });
}

struct ExperimentArgs {
  std::string config;
  Index replicates = 0;
};

void cmd_experiment(const Globals& g, const ExperimentArgs& a, std::ostream& out) {
  ExperimentConfig config = experiment_config_from_json(read_json(a.config));
  if (g.seed_set) config.base_seed = g.seed;
  if (g.threads_set) config.threads = g.threads;
  if (!g.out.empty()) config.output = g.out;
  if (a.replicates > 0) config.replicates = a.replicates;
  if (config.output.empty()) throw ConfigError("output: no output directory (set \"output\" or pass --out)");
  const ExperimentResult result = run_experiment(config);
  write_experiment(result, config.output);
  out << to_string(config.kind) << ": " << result.rows.size() << " replicate rows, " << result.summary.size()
      << " summary rows written to " << config.output << '\n';
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Simulation, estimation and diagnostics for spatial ARCH models", "sparch"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--seed", g.seed, "RNG seed (simulate) or base seed (experiment)")->each([&](const std::string&) {
    g.seed_set = true;
  });
  app.add_option("--threads", g.threads, "worker threads for experiments; 0 = all cores")
      ->each([&](const std::string&) { g.threads_set = true; });
  app.add_option("--out", g.out, "output file, or directory for experiments");

  std::string spec;
  auto* weights = app.add_subcommand("weights", "write a weight specification as a triplet CSV");
  weights->add_option("spec", spec, "weight spec JSON file or inline JSON")->required();

  auto* sim = app.add_subcommand("simulate", "simulate a spARCH or SARspARCH model");
  sim->add_option("model", spec, "model JSON file or inline JSON")->required();

  FitArgs fa;
  auto* fit = app.add_subcommand("fit", "maximum likelihood fit");
  fit->add_option("--data", fa.data, "CSV with the observations (and covariates x1, x2, ...)")->required();
  fit->add_option("--weights", fa.weights, "triplet CSV of W~");
  fit->add_option("--column", fa.column, "observation column")->capture_default_str();
  fit->add_option("--model", fa.model, "sparch, sar or sarsparch")->capture_default_str();
  fit->add_option("--lag-weights", fa.lag_weights, "triplet CSVs of the SAR lag matrices");
  fit->add_option("--parameterization", fa.parameterization, "triangular or general");
  fit->add_option("--max-iterations", fa.max_iterations, "optimizer iteration budget");
  fit->add_option("--tolerance", fa.tolerance, "projected gradient tolerance");
  fit->add_option("--config", fa.config, "fit config JSON");
  fit->add_option("--residuals", fa.residuals, "write residuals CSV here");

  DiagnoseArgs da;
  auto* diag = app.add_subcommand("diagnose", "Moran's I of series and their squares");
  diag->add_option("--data", da.data, "CSV with one column per series")->required();
  diag->add_option("--weights", da.weights, "triplet CSV of the diagnostic weights")->required();
  diag->add_option("--columns", da.columns, "series to test (default: all but site_index)");
  diag->add_option("--max-lag", da.max_lag, "graph-distance lags 2.. use row-standardized lag contiguity")
      ->check(CLI::PositiveNumber);
  diag->add_flag("!--no-squares", da.squares, "skip squared series");

  ExperimentArgs ea;
  auto* exp = app.add_subcommand("experiment", "run a Monte Carlo experiment");
  exp->add_option("config", ea.config, "experiment config JSON file or inline JSON")->required();
  exp->add_option("--replicates", ea.replicates, "override the replicate count")->check(CLI::PositiveNumber);

  for (auto* sub : {weights, sim, fit, diag, exp}) sub->fallthrough();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (weights->parsed()) cmd_weights(g, spec, out);
    if (sim->parsed()) cmd_simulate(g, spec, out);
    if (fit->parsed()) cmd_fit(g, fa, out);
    if (diag->parsed()) cmd_diagnose(g, da, out);
    if (exp->parsed()) cmd_experiment(g, ea, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const Json::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  }
  return kExitOk;
}

}  // namespace sparch::cli
