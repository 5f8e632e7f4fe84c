#include "sparch/config.hpp"

#include "sparch/errors.hpp"

#include <cmath>
#include <optional>

namespace sparch {

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) { throw ConfigError(path + ": " + what); }

const Json& field(const Json& j, const std::string& key, const std::string& path) {
  if (!j.is_object()) fail(path, "expected an object");
  const auto it = j.find(key);
  if (it == j.end()) fail(path + "." + key, "missing");
  return *it;
}

double number(const Json& j, const std::string& path) {
  if (!j.is_number()) fail(path, "expected a number");
  return j.get<double>();
}

Index integer(const Json& j, const std::string& path) {
  if (!j.is_number_integer() && !(j.is_number() && j.get<double>() == std::floor(j.get<double>()))) {
    fail(path, "expected an integer");
  }
  return static_cast<Index>(j.get<double>());
}

bool boolean(const Json& j, const std::string& path) {
  if (!j.is_boolean()) fail(path, "expected true or false");
  return j.get<bool>();
}

std::string text(const Json& j, const std::string& path) {
  if (!j.is_string()) fail(path, "expected a string");
  return j.get<std::string>();
}

std::vector<double> numbers(const Json& j, const std::string& path) {
  if (j.is_number()) return {j.get<double>()};
  if (!j.is_array()) fail(path, "expected a number or an array of numbers");
  std::vector<double> out;
  for (std::size_t k = 0; k < j.size(); ++k) out.push_back(number(j[k], path + "[" + std::to_string(k) + "]"));
  return out;
}

double number_or(const Json& j, const std::string& key, double fallback, const std::string& path) {
  return j.contains(key) ? number(j[key], path + "." + key) : fallback;
}

// Runs a library builder, re-labelling usage errors with the config path.
template <class F>
auto at(const std::string& path, F&& build) {
  try {
    return build();
  } catch (const ConfigError&) {
    throw;
  } catch (const UsageError& e) {
    fail(path, e.what());
  }
}

std::optional<Index> lattice_side(const Json& spec) {
  if (!spec.is_object() || !spec.contains("kind") || !spec.contains("d")) return std::nullopt;
  const auto& kind = spec["kind"];
  if (kind == "rook" || kind == "queen" || kind == "queen_lag") return static_cast<Index>(spec["d"].get<double>());
  if (spec.contains("base")) return lattice_side(spec["base"]);
  return std::nullopt;
}

SpatialDomain domain_for(const Json& j, const std::string& path) {
  if (j.contains("domain")) return domain_from_json(j["domain"], path + ".domain");
  if (j.contains("base")) {
    if (auto d = lattice_side(j["base"])) return at(path, [&] { return SpatialDomain::lattice(*d); });
  }
  fail(path + ".domain", "missing (and no lattice base to infer it from)");
}

}  // namespace

SpatialDomain domain_from_json(const Json& j, const std::string& path) {
  if (!j.is_object()) fail(path, "expected an object");
  const Metric metric =
      j.contains("metric") ? at(path + ".metric", [&] { return parse_metric(text(j["metric"], path + ".metric")); })
                           : Metric::L2;
  if (j.contains("lattice")) {
    const Index d = integer(j["lattice"], path + ".lattice");
    return at(path + ".lattice", [&] { return SpatialDomain::lattice(d, metric); });
  }
  const Json& coords = field(j, "coords", path);
  if (!coords.is_array() || coords.empty()) fail(path + ".coords", "expected a non-empty array of points");
  const auto n = static_cast<Index>(coords.size());
  const auto q = static_cast<Index>(coords[0].is_array() ? coords[0].size() : 0);
  Matrix m(n, q);
  for (Index i = 0; i < n; ++i) {
    const std::string p = path + ".coords[" + std::to_string(i) + "]";
    const auto point = numbers(coords[static_cast<std::size_t>(i)], p);
    if (static_cast<Index>(point.size()) != q) fail(p, "all points need the same dimension");
    for (Index c = 0; c < q; ++c) m(i, c) = point[static_cast<std::size_t>(c)];
  }
  return at(path + ".coords", [&] { return SpatialDomain(std::move(m), metric); });
}

Location origin_from_json(const Json& j, const SpatialDomain& domain, const std::string& path) {
  if (j.is_string()) {
    if (j != "center") fail(path, "expected \"center\" or a coordinate array");
    const double d = std::sqrt(static_cast<double>(domain.size()));
    if (domain.dimension() != 2 || d != std::floor(d)) fail(path, "\"center\" needs a square lattice domain");
    const double c = std::floor(d / 2.0);
    return Location{{c, c}};
  }
  Location s{numbers(j, path)};
  if (static_cast<Index>(s.coords.size()) != domain.dimension()) fail(path, "dimension differs from the domain");
  return s;
}

SparseWeights weights_from_json(const Json& j, const std::string& path) {
  const std::string kind = text(field(j, "kind", path), path + ".kind");
  const auto get_int = [&](const char* key) { return integer(field(j, key, path), path + "." + key); };
  const auto get_num = [&](const char* key) { return number(field(j, key, path), path + "." + key); };

  SparseWeights w;
  if (kind == "rook") {
    w = at(path, [&] { return build_rook(get_int("d")); });
  } else if (kind == "queen") {
    w = at(path, [&] { return build_queen(get_int("d")); });
  } else if (kind == "queen_lag") {
    w = at(path, [&] { return build_queen_lag(get_int("d"), get_int("k")); });
  } else if (kind == "knn") {
    const SpatialDomain domain = domain_from_json(field(j, "domain", path), path + ".domain");
    w = at(path, [&] { return build_knn(domain, get_int("q")); });
  } else if (kind == "inverse_distance") {
    const SpatialDomain domain = domain_from_json(field(j, "domain", path), path + ".domain");
    w = at(path, [&] { return build_inverse_distance(domain, get_num("cutoff")); });
  } else if (kind == "sparch_p") {
    const SparseWeights base = weights_from_json(field(j, "base", path), path + ".base");
    const SpatialDomain domain = domain_for(j, path);
    const auto rho = numbers(field(j, "rho", path), path + ".rho");
    w = at(path, [&] { return build_sparch_p(base, domain, rho, get_num("c")); });
  } else if (kind == "oriented") {
    const SparseWeights base = weights_from_json(field(j, "base", path), path + ".base");
    const SpatialDomain domain = domain_for(j, path);
    const Location origin =
        origin_from_json(j.contains("origin") ? j["origin"] : Json("center"), domain, path + ".origin");
    w = at(path, [&] { return build_oriented(base, domain, origin); });
  } else if (kind == "arch_embedding") {
    const auto alpha = numbers(field(j, "alpha", path), path + ".alpha");
    w = at(path, [&] { return build_arch_embedding(get_int("n"), alpha); });
  } else if (kind == "spatiotemporal") {
    const Json& lags = field(j, "lags", path);
    if (!lags.is_array() || lags.empty()) fail(path + ".lags", "expected a non-empty array of weight specs");
    std::vector<SparseWeights> blocks;
    std::vector<double> self;
    for (std::size_t k = 0; k < lags.size(); ++k) {
      const std::string p = path + ".lags[" + std::to_string(k) + "]";
      blocks.push_back(weights_from_json(lags[k], p));
      self.push_back(number_or(lags[k], "self", 0.0, p));
    }
    w = at(path, [&] { return build_spatiotemporal(blocks, get_int("T"), self); });
  } else if (kind == "zero") {
    w = at(path, [&] { return SparseWeights(get_int("n")); });
  } else if (kind == "triplets") {
    const Index n = get_int("n");
    const Json& entries = field(j, "entries", path);
    if (!entries.is_array()) fail(path + ".entries", "expected an array of [i, j, w]");
    std::vector<SparseWeights::Entry> list;
    for (std::size_t k = 0; k < entries.size(); ++k) {
      const std::string p = path + ".entries[" + std::to_string(k) + "]";
      const auto e = numbers(entries[k], p);
      if (e.size() != 3) fail(p, "expected [i, j, w]");
      const auto i = static_cast<Index>(e[0]);
      const auto c = static_cast<Index>(e[1]);
      if (i < 0 || c < 0 || i >= n || c >= n || e[0] != std::floor(e[0]) || e[1] != std::floor(e[1])) {
        fail(p, "indices must be integers in [0, n)");
      }
      list.push_back({i, c, e[2]});
    }
    w = at(path, [&] { return SparseWeights::from_entries(n, list); });
  } else {
    fail(path + ".kind", "unknown weight kind '" + kind + "'");
  }

  if (j.contains("row_standardize") && boolean(j["row_standardize"], path + ".row_standardize")) {
    w = row_standardize(w);
  }
  if (j.contains("scale")) {
    const double rho = number(j["scale"], path + ".scale");
    w = at(path + ".scale", [&] { return w.scaled(rho); });
  }
  return w;
}

ErrorSpec error_from_json(const Json& j, const std::string& path) {
  if (j.is_string()) return error_from_json(Json{{"kind", j}}, path);
  const std::string kind = text(field(j, "kind", path), path + ".kind");
  if (kind == "gaussian") return ErrorSpec::gaussian();
  if (kind == "truncated_gaussian") {
    const double a = number(field(j, "a", path), path + ".a");
    const bool rescale = j.contains("rescale") && boolean(j["rescale"], path + ".rescale");
    return at(path, [&] { return ErrorSpec::truncated_gaussian(a, rescale); });
  }
  if (kind == "uniform") {
    const double a = number(field(j, "a", path), path + ".a");
    return at(path, [&] { return ErrorSpec::uniform(a); });
  }
  fail(path + ".kind", "unknown error kind '" + kind + "'");
}

Json error_to_json(const ErrorSpec& error) {
  switch (error.kind()) {
    case ErrorSpec::Kind::gaussian: return {{"kind", "gaussian"}};
    case ErrorSpec::Kind::truncated_gaussian:
      return {{"kind", "truncated_gaussian"}, {"a", error.truncation()}, {"rescale", error.rescaled()}};
    case ErrorSpec::Kind::uniform: return {{"kind", "uniform"}, {"a", error.truncation()}};
  }
  return {};
}

SpArchModel sparch_model_from_json(const Json& j, const std::string& path) {
  SparseWeights w = weights_from_json(field(j, "weights", path), path + ".weights");
  const ErrorSpec error = j.contains("error") ? error_from_json(j["error"], path + ".error") : ErrorSpec::gaussian();
  const auto alpha = numbers(field(j, "alpha", path), path + ".alpha");
  Vector a;
  if (alpha.size() == 1) {
    a = Vector::Constant(w.size(), alpha[0]);
  } else {
    a = Eigen::Map<const Vector>(alpha.data(), static_cast<Index>(alpha.size()));
  }
  return at(path + ".alpha", [&] { return SpArchModel(std::move(a), std::move(w), error); });
}

Matrix random_covariates(Index n, Index extra, Seed seed) {
  Matrix x(n, extra + 1);
  x.col(0).setOnes();
  Rng rng(seed);
  for (Index c = 1; c <= extra; ++c) {
    for (Index i = 0; i < n; ++i) x(i, c) = rng.normal();
  }
  return x;
}

SarSpArchModel sar_model_from_json(const Json& j, const std::string& path) {
  SpArchModel noise = sparch_model_from_json(field(j, "noise", path), path + ".noise");
  const Index n = noise.size();
  const auto beta = numbers(field(j, "beta", path), path + ".beta");
  const auto lambda = j.contains("lambda") ? numbers(j["lambda"], path + ".lambda") : std::vector<double>{};
  std::vector<SparseWeights> lags;
  if (j.contains("lag_weights")) {
    const Json& list = j["lag_weights"];
    if (!list.is_array()) fail(path + ".lag_weights", "expected an array of weight specs");
    for (std::size_t k = 0; k < list.size(); ++k) {
      lags.push_back(weights_from_json(list[k], path + ".lag_weights[" + std::to_string(k) + "]"));
    }
  }
  const auto extra = static_cast<Index>(beta.size()) - 1;
  Matrix x;
  const Json cov = j.contains("covariates") ? j["covariates"] : Json{{"kind", "normal"}, {"seed", 0}};
  if (cov.is_object()) {
    const std::string kind = text(field(cov, "kind", path + ".covariates"), path + ".covariates.kind");
    if (kind != "normal") fail(path + ".covariates.kind", "only \"normal\" is generated");
    const auto seed = static_cast<Seed>(cov.contains("seed") ? integer(cov["seed"], path + ".covariates.seed") : 0);
    x = random_covariates(n, extra, seed);
  } else if (cov.is_array()) {
    if (static_cast<Index>(cov.size()) != n) fail(path + ".covariates", "needs one row per site");
    x = Matrix::Ones(n, extra + 1);
    for (Index i = 0; i < n; ++i) {
      const std::string p = path + ".covariates[" + std::to_string(i) + "]";
      const auto row = numbers(cov[static_cast<std::size_t>(i)], p);
      if (static_cast<Index>(row.size()) != extra) fail(p, "needs one value per non-intercept coefficient");
      for (Index c = 0; c < extra; ++c) x(i, c + 1) = row[static_cast<std::size_t>(c)];
    }
  } else {
    fail(path + ".covariates", "expected an object or an array of rows");
  }
  Vector b = Eigen::Map<const Vector>(beta.data(), static_cast<Index>(beta.size()));
  return at(path, [&] { return SarSpArchModel(std::move(x), std::move(b), lambda, std::move(lags), std::move(noise)); });
}

FitConfig fit_config_from_json(const Json& j, const std::string& path) {
  FitConfig config;
  if (j.is_null()) return config;
  if (!j.is_object()) fail(path, "expected an object");
  if (j.contains("parameterization")) {
    config.parameterization = at(path + ".parameterization", [&] {
      return parse_parameterization(text(j["parameterization"], path + ".parameterization"));
    });
  }
  if (j.contains("max_iterations")) config.max_iterations = static_cast<int>(integer(j["max_iterations"], path + ".max_iterations"));
  config.gradient_tolerance = number_or(j, "gradient_tolerance", config.gradient_tolerance, path);
  if (j.contains("initial_alpha")) config.initial_alpha = number(j["initial_alpha"], path + ".initial_alpha");
  if (j.contains("initial_rho")) config.initial_rho = number(j["initial_rho"], path + ".initial_rho");
  if (j.contains("initial_lambda")) config.initial_lambda = numbers(j["initial_lambda"], path + ".initial_lambda");
  if (j.contains("fixed_rho")) config.fixed_rho = number(j["fixed_rho"], path + ".fixed_rho");
  if (j.contains("fixed_lambda")) config.fixed_lambda = numbers(j["fixed_lambda"], path + ".fixed_lambda");
  if (j.contains("error")) config.error = error_from_json(j["error"], path + ".error");
  try {
    config.validate();
  } catch (const ConfigError& e) {
    fail(path, e.what());
  }
  return config;
}

}  // namespace sparch
