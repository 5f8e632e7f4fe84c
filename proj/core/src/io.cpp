#include "sparch/io.hpp"

#include "sparch/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

namespace sparch {

namespace {

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) fields.push_back(trim(field));
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

double parse_number(const std::string& text, std::size_t line_no) {
  if (text == "nan" || text == "NaN") return std::nan("");
  if (text == "inf") return HUGE_VAL;
  if (text == "-inf") return -HUGE_VAL;
  std::size_t used = 0;
  double value = 0.0;
  try {
    value = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size() || text.empty()) {
    throw ConfigError("line " + std::to_string(line_no) + ": '" + text + "' is not a number");
  }
  return value;
}

}  // namespace

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

void write_weights_csv(std::ostream& out, const SparseWeights& w) {
  out << "i,j,w\n";
  for (const auto& e : w.entries()) out << e.row << ',' << e.col << ',' << format_double(e.weight) << '\n';
}

SparseWeights read_weights_csv(std::istream& in, Index n) {
  const CsvTable table = read_csv(in);
  const Vector i = table.column("i");
  const Vector j = table.column("j");
  const Vector w = table.column("w");
  std::vector<SparseWeights::Entry> entries;
  Index largest = -1;
  for (Index k = 0; k < i.size(); ++k) {
    if (i(k) < 0 || j(k) < 0 || i(k) != std::floor(i(k)) || j(k) != std::floor(j(k))) {
      throw ConfigError("weights row " + std::to_string(k + 1) + ": indices must be nonnegative integers");
    }
    const auto row = static_cast<Index>(i(k));
    const auto col = static_cast<Index>(j(k));
    largest = std::max({largest, row, col});
    entries.push_back({row, col, w(k)});
  }
  if (n == 0) n = largest + 1;
  if (largest >= n) throw ConfigError("weights index " + std::to_string(largest) + " exceeds n = " + std::to_string(n));
  return SparseWeights::from_entries(n, entries);
}

bool CsvTable::has(std::string_view name) const {
  return std::find(header.begin(), header.end(), name) != header.end();
}

Vector CsvTable::column(std::string_view name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw ConfigError("CSV has no column '" + std::string(name) + "'");
  const auto& values = columns[static_cast<std::size_t>(it - header.begin())];
  return Eigen::Map<const Vector>(values.data(), static_cast<Index>(values.size()));
}

CsvTable read_csv(std::istream& in) {
  CsvTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!trim(line).empty()) break;
  }
  if (trim(line).empty()) throw ConfigError("CSV input is empty");
  table.header = split(line);
  table.columns.resize(table.header.size());
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split(line);
    if (fields.size() != table.header.size()) {
      throw ConfigError("line " + std::to_string(line_no) + ": expected " + std::to_string(table.header.size()) +
                        " fields, found " + std::to_string(fields.size()));
    }
    for (std::size_t c = 0; c < fields.size(); ++c) table.columns[c].push_back(parse_number(fields[c], line_no));
  }
  return table;
}

void write_realization_csv(std::ostream& out, const Realization& r) {
  out << "site_index,y,h,eps\n";
  for (Index i = 0; i < r.y.size(); ++i) {
    out << i << ',' << format_double(r.y(i)) << ',' << format_double(r.h(i)) << ',' << format_double(r.eps(i)) << '\n';
  }
}

void write_sar_realization_csv(std::ostream& out, const SarRealization& r, const Matrix& covariates) {
  out << "site_index,y,h,eps,xi";
  for (Index c = 1; c < covariates.cols(); ++c) out << ",x" << c;
  out << '\n';
  for (Index i = 0; i < r.y.size(); ++i) {
    out << i << ',' << format_double(r.y(i)) << ',' << format_double(r.noise.h(i)) << ','
        << format_double(r.noise.eps(i)) << ',' << format_double(r.noise.y(i));
    for (Index c = 1; c < covariates.cols(); ++c) out << ',' << format_double(covariates(i, c));
    out << '\n';
  }
}

void write_moran_csv(std::ostream& out, const std::vector<MoranRow>& rows) {
  out << "series,lag,I,expectation,std,z,p\n";
  for (const auto& r : rows) {
    out << r.series << ',' << r.lag << ',' << format_double(r.moran.I) << ',' << format_double(r.moran.expectation)
        << ',' << format_double(r.moran.std) << ',' << format_double(r.moran.z) << ',' << format_double(r.moran.p)
        << '\n';
  }
}

nlohmann::json fit_to_json(const FitResult& fit) {
  nlohmann::json j;
  j["model"] = fit.model;
  nlohmann::json estimates = nlohmann::json::object();
  nlohmann::json stderrs = nlohmann::json::object();
  for (std::size_t k = 0; k < fit.names.size(); ++k) {
    const auto idx = static_cast<Index>(k);
    estimates[fit.names[k]] = fit.estimates(idx);
    const double se = fit.standard_errors.size() > idx ? fit.standard_errors(idx) : std::nan("");
    stderrs[fit.names[k]] = std::isfinite(se) ? nlohmann::json(se) : nlohmann::json(nullptr);
  }
  j["estimates"] = estimates;
  j["stderr"] = stderrs;
  j["loglik"] = fit.loglik;
  j["aic"] = fit.aic;
  j["parameters"] = fit.parameters;
  j["converged"] = fit.converged;
  j["iterations"] = fit.iterations;
  j["rho_at_boundary"] = fit.rho_at_boundary;
  j["information_positive_definite"] = fit.information_positive_definite;
  nlohmann::json info = nlohmann::json::array();
  for (Index r = 0; r < fit.information.rows(); ++r) {
    nlohmann::json row = nlohmann::json::array();
    for (Index c = 0; c < fit.information.cols(); ++c) {
      const double v = fit.information(r, c);
      row.push_back(std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr));
    }
    info.push_back(row);
  }
  j["information"] = info;
  return j;
}

void write_residuals_csv(std::ostream& out, const FitResult& fit) {
  out << "site_index,xi,eps,h\n";
  for (Index i = 0; i < fit.xi.size(); ++i) {
    out << i << ',' << format_double(fit.xi(i)) << ',' << format_double(fit.eps(i)) << ',' << format_double(fit.h(i))
        << '\n';
  }
}

}  // namespace sparch
