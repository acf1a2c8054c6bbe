#pragma once

#include <cctype>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "storage/estimators.hpp"
#include "storage/params.hpp"

namespace storage {

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail_io {

inline std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

inline std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace detail_io

// Reads a `date,price` CSV, validates it, and normalizes to unit mean.
// Suspicious-but-parseable rows (non-positive prices) produce warnings
// rather than errors.
inline PriceSeries load_prices(const std::string& path, int periods_per_year,
                               std::vector<std::string>* warnings = nullptr) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);

  PriceSeries series;
  series.periods_per_year = periods_per_year;

  std::string line;
  std::size_t lineno = 0;
  bool saw_header = false;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = detail_io::trim(line);
    if (t.empty()) continue;
    if (!saw_header) {
      if (t != "date,price")
        throw IoError(path + ":1: expected header `date,price`, got `" + t + "`");
      saw_header = true;
      continue;
    }
    const std::size_t comma = t.find(',');
    if (comma == std::string::npos)
      throw IoError(path + ":" + std::to_string(lineno) + ": missing comma");
    const std::string date = detail_io::trim(t.substr(0, comma));
    const std::string price_str = detail_io::trim(t.substr(comma + 1));
    std::size_t consumed = 0;
    double price;
    try {
      price = std::stod(price_str, &consumed);
    } catch (const std::exception&) {
      throw IoError(path + ":" + std::to_string(lineno) +
                    ": non-numeric price `" + price_str + "`");
    }
    if (consumed != price_str.size() || !std::isfinite(price))
      throw IoError(path + ":" + std::to_string(lineno) +
                    ": non-numeric price `" + price_str + "`");
    if (price <= 0.0 && warnings)
      warnings->push_back(path + ":" + std::to_string(lineno) +
                          ": non-positive price " + price_str);
    series.dates.push_back(date);
    series.values.push_back(price);
  }
  if (!saw_header) throw IoError(path + ": empty file");
  if (series.values.size() < 2)
    throw IoError(path + ": fewer than two data rows");
  series.normalize_to_unit_mean();
  return series;
}

// Flat `key = value` config files with `#` comments.
using KeyValueMap = std::map<std::string, std::string>;

inline KeyValueMap parse_key_values(std::istream& in, const std::string& name) {
  KeyValueMap kv;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string t = detail_io::trim(line);
    if (t.empty()) continue;
    const std::size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw IoError(name + ":" + std::to_string(lineno) + ": expected key = value");
    kv[detail_io::trim(t.substr(0, eq))] = detail_io::trim(t.substr(eq + 1));
  }
  return kv;
}

inline KeyValueMap load_key_values(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  return parse_key_values(in, path);
}

inline void write_key_values(const KeyValueMap& kv, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  for (const auto& [k, v] : kv) out << k << " = " << v << "\n";
  if (!out) throw IoError("write failed: " + path);
}

inline void write_series_csv(const std::string& path,
                             const std::vector<std::string>& dates,
                             const std::vector<double>& values) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << "date,value\n";
  for (std::size_t t = 0; t < values.size(); ++t) {
    if (t < dates.size() && !dates[t].empty())
      out << dates[t];
    else
      out << t;
    out << ',' << detail_io::fmt(values[t]) << '\n';
  }
  if (!out) throw IoError("write failed: " + path);
}

// Writes the machine-readable results file, a human-readable table, and the
// figure-data CSVs (per-period filtered stock-out probability and implied
// storage). Missing sections are marked, not omitted.
inline void emit_report(const EstimationReport& rep, const PriceSeries& series,
                        const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir);

  KeyValueMap kv;
  kv["theta.rho"] = detail_io::fmt(rep.theta_hat.rho);
  kv["theta.a"] = detail_io::fmt(rep.theta_hat.a);
  kv["theta.b"] = detail_io::fmt(rep.theta_hat.b);
  kv["theta.delta"] = detail_io::fmt(rep.theta_hat.delta);
  kv["theta.r"] = detail_io::fmt(rep.theta_hat.r);
  kv["loglik"] = detail_io::fmt(rep.loglik);
  kv["converged"] = rep.converged ? "true" : "false";
  kv["evaluations"] = std::to_string(rep.evaluations);
  kv["iterations"] = std::to_string(rep.iterations);
  kv["normalization_factor"] = detail_io::fmt(series.normalization_factor);
  const bool have_se = rep.bootstrap_se[0] != 0.0 || rep.bootstrap_se[1] != 0.0 ||
                       rep.bootstrap_se[2] != 0.0 || rep.bootstrap_se[3] != 0.0;
  const char* names[4] = {"rho", "a", "b", "delta"};
  for (int k = 0; k < 4; ++k)
    kv[std::string("se.") + names[k]] =
        have_se ? detail_io::fmt(rep.bootstrap_se[k]) : "missing";
  if (rep.diagnostics) {
    kv["diag.jarque_bera_p"] = detail_io::fmt(rep.diagnostics->jarque_bera_p);
    kv["diag.ks_p"] = detail_io::fmt(rep.diagnostics->ks_normal_p);
    kv["diag.ljung_box_p"] = detail_io::fmt(rep.diagnostics->ljung_box_p);
    kv["diag.arch_lm_p"] = detail_io::fmt(rep.diagnostics->arch_p);
  } else {
    kv["diag.jarque_bera_p"] = "missing";
    kv["diag.ks_p"] = "missing";
    kv["diag.ljung_box_p"] = "missing";
    kv["diag.arch_lm_p"] = "missing";
  }
  write_key_values(kv, dir + "/results.txt");

  {
    std::ofstream out(dir + "/summary.txt");
    if (!out) throw IoError("cannot write " + dir + "/summary.txt");
    out << "parameter      estimate        boot.se\n";
    const double est[4] = {rep.theta_hat.rho, rep.theta_hat.a, rep.theta_hat.b,
                           rep.theta_hat.delta};
    char buf[96];
    for (int k = 0; k < 4; ++k) {
      if (have_se)
        std::snprintf(buf, sizeof buf, "%-12s %12.6f   %12.6f\n", names[k],
                      est[k], rep.bootstrap_se[k]);
      else
        std::snprintf(buf, sizeof buf, "%-12s %12.6f   %12s\n", names[k],
                      est[k], "missing");
      out << buf;
    }
    std::snprintf(buf, sizeof buf, "log-likelihood %12.4f\n", rep.loglik);
    out << buf;
    if (rep.diagnostics) {
      std::snprintf(buf, sizeof buf,
                    "residuals: JB p=%.4f  KS p=%.4f  LB p=%.4f  ARCH p=%.4f\n",
                    rep.diagnostics->jarque_bera_p,
                    rep.diagnostics->ks_normal_p,
                    rep.diagnostics->ljung_box_p,
                    rep.diagnostics->arch_p);
      out << buf;
    } else {
      out << "residuals: missing\n";
    }
  }

  write_series_csv(dir + "/stockout_probability.csv", series.dates,
                   rep.stockout_probability);
  write_series_csv(dir + "/implied_storage.csv", series.dates,
                   rep.implied_storage);
}

// Re-reads theta-hat from a results file (round-trip check and tooling).
inline StructuralParams read_theta(const std::string& results_path) {
  const KeyValueMap kv = load_key_values(results_path);
  StructuralParams p;
  p.rho = std::stod(kv.at("theta.rho"));
  p.a = std::stod(kv.at("theta.a"));
  p.b = std::stod(kv.at("theta.b"));
  p.delta = std::stod(kv.at("theta.delta"));
  p.r = std::stod(kv.at("theta.r"));
  return p;
}

}  // namespace storage
