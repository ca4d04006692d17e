#pragma once

// Monte Carlo comparison of empirical and smoothed quantile / tail-index
// estimation.
//
// Each replicate draws its own sample from an RNG seeded with
// derive_seed(derive_seed(seed, parameter index), replicate index), so results
// do not depend on how replicates are spread over threads. Per-replicate
// results are stored and reduced in replicate order.
//
// For every cell (parameter, estimator, k):
//   bias = mean(estimates) - truth
//   var  = sum (estimate - mean)^2 / (P - 1)
//   mse  = bias^2 + var
//   rho  = mse_smoothed / mse_empirical
// where the sums run over the P replicates in which both the empirical and the
// smoothed estimate are defined.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "distributions.hpp"
#include "errors.hpp"
#include "estimators.hpp"
#include "logcon.hpp"
#include "rng.hpp"
#include "smoothdist.hpp"

namespace smoothtail {

enum class Setting { QuantileRE, GpdSetting1, BetaSetting2 };

inline std::string to_string(Setting s) {
  switch (s) {
    case Setting::QuantileRE: return "quantile_re";
    case Setting::GpdSetting1: return "gpd_setting1";
    case Setting::BetaSetting2: return "beta_setting2";
  }
  return "unknown";
}

inline Setting parse_setting(const std::string& s) {
  if (s == "quantile_re") return Setting::QuantileRE;
  if (s == "gpd_setting1") return Setting::GpdSetting1;
  if (s == "beta_setting2") return Setting::BetaSetting2;
  throw InvalidArgument("unknown setting '" + s + "'");
}

struct SettingSpec {
  Setting setting = Setting::GpdSetting1;
  std::size_t n = 64;
  std::size_t M = 300;
  std::vector<double> gammas;   // QuantileRE, GpdSetting1
  double sigma = 1.0;
  double theta1 = 0.5;          // BetaSetting2
  std::vector<double> theta2s;  // BetaSetting2
  double sharpen_fraction = 0.5;
  std::vector<EstimatorKind> estimators{EstimatorKind::Pickands, EstimatorKind::Falk,
                                        EstimatorKind::MVUE};
  bool truncate = false;
  std::uint64_t seed = 0;
  FitOptions fit;
  // Test hook: use the empirical values as the "smoothed" values too.
  bool alias_sources = false;

  // All violated constraints, empty when valid.
  std::vector<std::string> problems() const {
    std::vector<std::string> p;
    if (n < 8) p.push_back("n must be at least 8");
    if (M < 1) p.push_back("M must be at least 1");
    if (!(sigma > 0.0)) p.push_back("sigma must be positive");
    switch (setting) {
      case Setting::QuantileRE:
        if (gammas.empty()) p.push_back("gammas must not be empty");
        for (double g : gammas)
          if (!(g >= -1.0 && g <= 0.0)) p.push_back("quantile_re gammas must lie in [-1,0]");
        break;
      case Setting::GpdSetting1:
        if (gammas.empty()) p.push_back("gammas must not be empty");
        for (double g : gammas)
          if (!(g >= -1.0 && g <= -0.05)) p.push_back("gpd_setting1 gammas must lie in [-1,-0.05]");
        if (estimators.empty()) p.push_back("estimators must not be empty");
        break;
      case Setting::BetaSetting2:
        if (theta2s.empty()) p.push_back("theta2s must not be empty");
        for (double t : theta2s)
          if (!(t > 0.0)) p.push_back("theta2s must be positive");
        if (!(theta1 > 0.0)) p.push_back("theta1 must be positive");
        if (!(sharpen_fraction > 0.0 && sharpen_fraction <= 1.0))
          p.push_back("sharpen_fraction must lie in (0,1]");
        else if (working_size() < 8)
          p.push_back("sharpened subsample must contain at least 8 points");
        if (estimators.empty()) p.push_back("estimators must not be empty");
        break;
    }
    return p;
  }

  void validate() const {
    const auto p = problems();
    if (p.empty()) return;
    std::string msg = "invalid setting:";
    for (const auto& s : p) msg += " " + s + ";";
    throw InvalidArgument(msg);
  }

  // m = ceil(fraction * n) for the sharpened setting, n otherwise.
  std::size_t working_size() const {
    if (setting != Setting::BetaSetting2) return n;
    return static_cast<std::size_t>(std::ceil(sharpen_fraction * static_cast<double>(n) - 1e-9));
  }

  const std::vector<double>& parameters() const {
    return setting == Setting::BetaSetting2 ? theta2s : gammas;
  }
};

struct CellStats {
  double bias = std::numeric_limits<double>::quiet_NaN();
  double var = std::numeric_limits<double>::quiet_NaN();
  double mse = std::numeric_limits<double>::quiet_NaN();
};

struct EfficiencyRow {
  Setting setting = Setting::GpdSetting1;
  double param = 0.0;
  std::string estimator;  // "quantile", "pickands", "falk" or "mvue"
  std::size_t k = 0;
  double truth = 0.0;
  CellStats emp;
  CellStats smooth;
  double rho = std::numeric_limits<double>::quiet_NaN();
  std::size_t defined_emp = 0;
  std::size_t defined_smooth = 0;
  std::size_t paired = 0;
};

struct EfficiencyTable {
  Setting setting = Setting::GpdSetting1;
  std::size_t replicates = 0;
  std::size_t fit_failures = 0;
  std::vector<EfficiencyRow> rows;

  std::size_t undefined_emp() const {
    std::size_t u = 0;
    for (const auto& r : rows) u += replicates - r.defined_emp;
    return u;
  }
  std::size_t undefined_smooth() const {
    std::size_t u = 0;
    for (const auto& r : rows) u += replicates - r.defined_smooth;
    return u;
  }
};

struct PairedAggregate {
  CellStats emp;
  CellStats smooth;
  double rho = std::numeric_limits<double>::quiet_NaN();
  std::size_t defined_emp = 0;
  std::size_t defined_smooth = 0;
  std::size_t paired = 0;
};

namespace detail {

inline CellStats cell_stats(const std::vector<double>& xs, double truth) {
  CellStats c;
  const std::size_t P = xs.size();
  if (P == 0) return c;
  double sum = 0.0;
  for (double x : xs) sum += x;
  const double mean = sum / static_cast<double>(P);
  c.bias = mean - truth;
  if (P < 2) return c;
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  c.var = ss / static_cast<double>(P - 1);
  c.mse = c.bias * c.bias + c.var;
  return c;
}

}  // namespace detail

// Reduces one cell. Replicates where either estimate is missing are dropped
// from both columns.
inline PairedAggregate aggregate_paired(std::span<const std::optional<double>> emp,
                                        std::span<const std::optional<double>> smooth,
                                        double truth) {
  if (emp.size() != smooth.size()) throw InvalidArgument("paired columns differ in length");
  PairedAggregate a;
  std::vector<double> e, s;
  for (std::size_t j = 0; j < emp.size(); ++j) {
    a.defined_emp += emp[j].has_value();
    a.defined_smooth += smooth[j].has_value();
    if (emp[j] && smooth[j]) {
      e.push_back(*emp[j]);
      s.push_back(*smooth[j]);
    }
  }
  a.paired = e.size();
  a.emp = detail::cell_stats(e, truth);
  a.smooth = detail::cell_stats(s, truth);
  if (a.emp.mse > 0.0 && std::isfinite(a.smooth.mse)) a.rho = a.smooth.mse / a.emp.mse;
  return a;
}

namespace detail {

struct CellKey {
  std::string estimator;
  std::size_t k;
  double truth;
};

struct ReplicateResult {
  std::vector<std::optional<double>> emp;
  std::vector<std::optional<double>> smooth;
  bool fit_failed = false;
};

inline std::vector<CellKey> layout(const SettingSpec& spec, double param) {
  std::vector<CellKey> keys;
  if (spec.setting == Setting::QuantileRE) {
    const GpdParams gpd(param, spec.sigma);
    for (std::size_t k = 1; k <= spec.n; ++k) {
      const double q = static_cast<double>(k) / static_cast<double>(spec.n);
      if (k == spec.n && !(gpd.gamma < 0.0 && !gpd.exponential_limit())) continue;
      keys.push_back({"quantile", k, gpd_quantile(gpd, q)});
    }
    return keys;
  }
  const double truth = spec.setting == Setting::BetaSetting2 ? beta_tail_index(BetaParams(spec.theta1, param))
                                                             : param;
  const std::size_t m = spec.working_size();
  for (EstimatorKind e : spec.estimators) {
    const auto r = valid_k_range(e, m);
    for (std::size_t k = r.lo; k <= r.hi; ++k) keys.push_back({to_string(e), k, truth});
  }
  return keys;
}

inline std::optional<SmoothedQuantiles> try_fit(std::span<const double> sample, const FitOptions& opt) {
  try {
    return SmoothedQuantiles(SmoothCdf(fit_logconcave(sample, opt).fit));
  } catch (const Error&) {
    return std::nullopt;
  }
}

inline ReplicateResult run_replicate(const SettingSpec& spec, double param, std::uint64_t seed) {
  RngState rng(seed);
  ReplicateResult out;
  std::vector<double> sample;
  double omega = 1.0;
  if (spec.setting == Setting::BetaSetting2) {
    sample = beta_sample(BetaParams(spec.theta1, param), spec.n, rng);
    std::sort(sample.begin(), sample.end());
    const std::size_t m = spec.working_size();
    sample.erase(sample.begin(), sample.end() - static_cast<std::ptrdiff_t>(m));
  } else {
    const GpdParams gpd(param, spec.sigma);
    sample = gpd_sample(gpd, spec.n, rng);
    omega = gpd.upper_endpoint();
  }
  const EmpiricalQuantiles emp(sample);
  std::optional<SmoothedQuantiles> smooth;
  if (!spec.alias_sources) {
    smooth = try_fit(sample, spec.fit);
    out.fit_failed = !smooth;
  }
  const std::size_t m = emp.sample_size();
  const double x_max = emp.sorted().back();

  auto record = [&](std::optional<double> e, std::optional<double> s) {
    out.emp.push_back(e);
    out.smooth.push_back(spec.alias_sources ? e : s);
  };

  if (spec.setting == Setting::QuantileRE) {
    for (std::size_t k = 1; k <= m; ++k) {
      if (k == m && !std::isfinite(omega)) continue;
      const double q = static_cast<double>(k) / static_cast<double>(m);
      record(emp.order_statistic(k), smooth ? std::optional<double>(smooth->quantile(q)) : std::nullopt);
    }
    return out;
  }

  for (EstimatorKind e : spec.estimators) {
    const double aux = e == EstimatorKind::Falk ? x_max : omega;
    const auto r = valid_k_range(e, m);
    for (std::size_t k = r.lo; k <= r.hi; ++k) {
      auto finish = [&](std::optional<double> v) -> std::optional<double> {
        if (v && spec.truncate) return clamp_index(*v);
        return v;
      };
      const auto ev = finish(estimate_raw(emp, e, k, aux));
      const auto sv = smooth ? finish(estimate_raw(*smooth, e, k, aux)) : std::nullopt;
      record(ev, sv);
    }
  }
  return out;
}

}  // namespace detail

inline EfficiencyTable run_experiment(const SettingSpec& spec, unsigned threads = 1) {
  spec.validate();
  EfficiencyTable table;
  table.setting = spec.setting;
  table.replicates = spec.M;
  const auto& params = spec.parameters();
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    const double param = params[pi];
    const auto keys = detail::layout(spec, param);
    const std::uint64_t param_seed = derive_seed(spec.seed, pi);
    std::vector<detail::ReplicateResult> results(spec.M);
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
      for (std::size_t j = next++; j < spec.M; j = next++)
        results[j] = detail::run_replicate(spec, param, derive_seed(param_seed, j));
    };
    const unsigned nthreads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(spec.M)));
    if (nthreads == 1) {
      worker();
    } else {
      std::vector<std::jthread> pool;
      for (unsigned t = 0; t < nthreads; ++t) pool.emplace_back(worker);
    }

    std::vector<std::optional<double>> e(spec.M), s(spec.M);
    for (const auto& r : results) table.fit_failures += r.fit_failed;
    for (std::size_t c = 0; c < keys.size(); ++c) {
      for (std::size_t j = 0; j < spec.M; ++j) {
        e[j] = results[j].emp[c];
        s[j] = results[j].smooth[c];
      }
      const auto agg = aggregate_paired(e, s, keys[c].truth);
      EfficiencyRow row;
      row.setting = spec.setting;
      row.param = param;
      row.estimator = keys[c].estimator;
      row.k = keys[c].k;
      row.truth = keys[c].truth;
      row.emp = agg.emp;
      row.smooth = agg.smooth;
      row.rho = agg.rho;
      row.defined_emp = agg.defined_emp;
      row.defined_smooth = agg.defined_smooth;
      row.paired = agg.paired;
      table.rows.push_back(std::move(row));
    }
  }
  return table;
}

inline EfficiencyTable quantile_re_experiment(const SettingSpec& spec, unsigned threads = 1) {
  if (spec.setting != Setting::QuantileRE) throw InvalidArgument("expected a quantile_re setting");
  return run_experiment(spec, threads);
}

inline EfficiencyTable setting1_experiment(const SettingSpec& spec, unsigned threads = 1) {
  if (spec.setting != Setting::GpdSetting1) throw InvalidArgument("expected a gpd_setting1 setting");
  return run_experiment(spec, threads);
}

inline EfficiencyTable setting2_experiment(const SettingSpec& spec, unsigned threads = 1) {
  if (spec.setting != Setting::BetaSetting2) throw InvalidArgument("expected a beta_setting2 setting");
  return run_experiment(spec, threads);
}

}  // namespace smoothtail
