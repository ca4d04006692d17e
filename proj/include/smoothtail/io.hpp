#pragma once

// File formats: sample input, fit JSON, Hill-series and efficiency CSVs, and
// the simulation manifest.

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <cmath>
#include <cstdio>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "errors.hpp"
#include "estimators.hpp"
#include "logcon.hpp"
#include "simulation.hpp"

namespace smoothtail {

// Shortest form is not used on purpose: 17 significant digits round-trip every
// double and keep the output byte-stable across libraries.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline bool parse_number(std::string_view s, double& out) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end;
}

inline std::string json_array(const std::vector<double>& xs) {
  std::string s = "[";
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (i) s += ", ";
    s += format_double(xs[i]);
  }
  return s + "]";
}

}  // namespace detail

// Newline-delimited numbers, or a single-column CSV whose first line may be a
// header. Blank lines are skipped.
inline std::vector<double> read_sample(std::istream& in) {
  std::vector<double> xs;
  std::string line;
  std::size_t lineno = 0;
  bool seen_content = false;
  while (std::getline(in, line)) {
    ++lineno;
    const auto t = detail::trim(line);
    if (t.empty()) continue;
    if (t.find(',') != std::string_view::npos)
      throw InvalidArgument("line " + std::to_string(lineno) + ": expected a single column");
    double v;
    if (!detail::parse_number(t, v)) {
      if (!seen_content) {
        seen_content = true;  // header
        continue;
      }
      throw InvalidArgument("line " + std::to_string(lineno) + ": not a number: '" + std::string(t) + "'");
    }
    if (!std::isfinite(v)) throw InvalidArgument("line " + std::to_string(lineno) + ": non-finite value");
    seen_content = true;
    xs.push_back(v);
  }
  return xs;
}

inline std::string fit_to_json(const LogConcaveFit& fit) {
  std::ostringstream os;
  os << "{\n"
     << "  \"format\": \"smoothtail-logconcave-fit\",\n"
     << "  \"raw_n\": " << fit.raw_n() << ",\n"
     << "  \"tolerance\": " << format_double(fit.tolerance()) << ",\n"
     << "  \"log_likelihood\": " << format_double(fit.log_likelihood()) << ",\n"
     << "  \"points\": " << detail::json_array(fit.points()) << ",\n"
     << "  \"knots\": " << detail::json_array(fit.knots()) << ",\n"
     << "  \"phi\": " << detail::json_array(fit.phi()) << ",\n"
     << "  \"slopes\": " << detail::json_array(fit.slopes()) << ",\n"
     << "  \"cum_mass\": " << detail::json_array(fit.cum_mass()) << "\n"
     << "}\n";
  return os.str();
}

inline LogConcaveFit fit_from_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("fit JSON: ") + e.what());
  }
  auto vec = [&](const char* key) {
    if (!j.contains(key) || !j[key].is_array()) throw InvalidArgument(std::string("fit JSON: missing array '") + key + "'");
    return j[key].get<std::vector<double>>();
  };
  try {
    return LogConcaveFit::from_parts(vec("points"), vec("phi"), vec("slopes"), vec("knots"),
                                     j.value("raw_n", std::size_t{0}), j.value("tolerance", 0.0),
                                     j.value("log_likelihood", 0.0));
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("fit JSON: ") + e.what());
  }
}

inline void write_hill_csv_header(std::ostream& os) { os << "estimator,source,k,value,truncated,defined\n"; }

inline void write_hill_csv_rows(std::ostream& os, const HillSeries& s) {
  for (const auto& p : s.points) {
    os << to_string(s.estimator) << ',' << to_string(s.source) << ',' << p.k << ',';
    if (p.estimate)
      os << format_double(p.estimate->value) << ',' << (p.estimate->truncated ? 1 : 0) << ",1\n";
    else
      os << "nan,0,0\n";
  }
}

inline void write_efficiency_csv(std::ostream& os, const EfficiencyTable& t) {
  os << "setting,param,estimator,k,bias_emp,var_emp,mse_emp,bias_smooth,var_smooth,mse_smooth,rho,"
        "defined_emp,defined_smooth\n";
  for (const auto& r : t.rows) {
    os << to_string(r.setting) << ',' << format_double(r.param) << ',' << r.estimator << ',' << r.k << ','
       << format_double(r.emp.bias) << ',' << format_double(r.emp.var) << ',' << format_double(r.emp.mse) << ','
       << format_double(r.smooth.bias) << ',' << format_double(r.smooth.var) << ','
       << format_double(r.smooth.mse) << ',' << format_double(r.rho) << ',' << r.defined_emp << ','
       << r.defined_smooth << '\n';
  }
}

// Parses a simulation manifest. Every problem found is listed in the thrown
// message. A missing seed is reported unless seed_override is given.
inline SettingSpec manifest_from_json(std::string_view text, std::optional<std::uint64_t> seed_override = {}) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("manifest: ") + e.what());
  }
  if (!j.is_object()) throw InvalidArgument("manifest: top level must be an object");
  SettingSpec spec;
  std::vector<std::string> problems;
  static const std::vector<std::string> known = {
      "setting", "n", "M", "gammas", "sigma", "theta1", "theta2s", "sharpen_fraction",
      "estimators", "truncate", "seed", "tolerance", "max_iterations"};
  for (const auto& [key, _] : j.items())
    if (std::find(known.begin(), known.end(), key) == known.end()) problems.push_back("unknown field '" + key + "'");

  auto get = [&](const char* key, auto& dst, bool required) {
    if (!j.contains(key)) {
      if (required) problems.push_back(std::string("missing field '") + key + "'");
      return;
    }
    try {
      j.at(key).get_to(dst);
    } catch (const nlohmann::json::exception&) {
      problems.push_back(std::string("field '") + key + "' has the wrong type");
    }
  };
  std::string setting;
  get("setting", setting, true);
  if (!setting.empty()) {
    try {
      spec.setting = parse_setting(setting);
    } catch (const InvalidArgument& e) {
      problems.push_back(e.what());
    }
  }
  // Sizes are read as signed so that negative values are reported, not wrapped.
  long long n = static_cast<long long>(spec.n), M = static_cast<long long>(spec.M);
  get("n", n, true);
  get("M", M, true);
  if (n < 0) problems.push_back("n must be non-negative");
  if (M < 0) problems.push_back("M must be non-negative");
  spec.n = static_cast<std::size_t>(std::max(n, 0LL));
  spec.M = static_cast<std::size_t>(std::max(M, 0LL));
  get("gammas", spec.gammas, false);
  get("sigma", spec.sigma, false);
  get("theta1", spec.theta1, false);
  get("theta2s", spec.theta2s, false);
  get("sharpen_fraction", spec.sharpen_fraction, false);
  get("truncate", spec.truncate, false);
  get("tolerance", spec.fit.tolerance, false);
  get("max_iterations", spec.fit.max_iterations, false);
  if (j.contains("estimators")) {
    std::vector<std::string> names;
    get("estimators", names, false);
    spec.estimators.clear();
    for (const auto& s : names) {
      try {
        spec.estimators.push_back(parse_estimator(s));
      } catch (const InvalidArgument& e) {
        problems.push_back(e.what());
      }
    }
  }
  if (seed_override) {
    spec.seed = *seed_override;
  } else if (!j.contains("seed")) {
    problems.push_back("missing field 'seed'");
  } else {
    get("seed", spec.seed, false);
  }
  if (!(spec.fit.tolerance > 0.0)) problems.push_back("tolerance must be positive");
  for (auto& p : spec.problems()) problems.push_back(std::move(p));
  if (!problems.empty()) {
    std::string msg = "invalid manifest:";
    for (const auto& p : problems) msg += "\n  - " + p;
    throw InvalidArgument(msg);
  }
  return spec;
}

inline nlohmann::json manifest_to_json(const SettingSpec& spec) {
  nlohmann::json j;
  j["setting"] = to_string(spec.setting);
  j["n"] = spec.n;
  j["M"] = spec.M;
  if (spec.setting == Setting::BetaSetting2) {
    j["theta1"] = spec.theta1;
    j["theta2s"] = spec.theta2s;
    j["sharpen_fraction"] = spec.sharpen_fraction;
  } else {
    j["gammas"] = spec.gammas;
    j["sigma"] = spec.sigma;
  }
  std::vector<std::string> est;
  for (auto e : spec.estimators) est.push_back(to_string(e));
  j["estimators"] = est;
  j["truncate"] = spec.truncate;
  j["seed"] = spec.seed;
  j["tolerance"] = spec.fit.tolerance;
  j["max_iterations"] = spec.fit.max_iterations;
  return j;
}

}  // namespace smoothtail
