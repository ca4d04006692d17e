#pragma once

// Tail-index estimators built from log-spacings of quantiles.
//
// Every estimator is written against a quantile source H: a map from a
// probability level to a quantile together with the sample size n. With the
// empirical source the estimators reduce to the classical Pickands, Falk
// (negative Hill) and Falk MVUE estimators; with the smoothed source the order
// statistics are replaced by quantiles of the fitted log-concave distribution.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <functional>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"
#include "smoothdist.hpp"

namespace smoothtail {

enum class SourceKind { Empirical, Smoothed, Oracle };
enum class EstimatorKind { Pickands, Falk, MVUE };

inline std::string to_string(SourceKind s) {
  switch (s) {
    case SourceKind::Empirical: return "empirical";
    case SourceKind::Smoothed: return "smoothed";
    case SourceKind::Oracle: return "oracle";
  }
  return "unknown";
}

inline std::string to_string(EstimatorKind e) {
  switch (e) {
    case EstimatorKind::Pickands: return "pickands";
    case EstimatorKind::Falk: return "falk";
    case EstimatorKind::MVUE: return "mvue";
  }
  return "unknown";
}

inline EstimatorKind parse_estimator(const std::string& s) {
  if (s == "pickands") return EstimatorKind::Pickands;
  if (s == "falk") return EstimatorKind::Falk;
  if (s == "mvue") return EstimatorKind::MVUE;
  throw InvalidArgument("unknown estimator '" + s + "'");
}

template <class S>
concept QuantileSource = requires(const S& h, double q) {
  { h.quantile(q) } -> std::convertible_to<double>;
  { h.sample_size() } -> std::convertible_to<std::size_t>;
  { h.kind() } -> std::convertible_to<SourceKind>;
};

// F_n^{-1}(q) = X_(ceil(q n)).
class EmpiricalQuantiles {
 public:
  explicit EmpiricalQuantiles(std::vector<double> sample) : sorted_(std::move(sample)) {
    if (sorted_.empty()) throw InvalidArgument("empty sample");
    std::sort(sorted_.begin(), sorted_.end());
  }

  double quantile(double q) const {
    if (!(q >= 0.0 && q <= 1.0)) throw InvalidArgument("probability level outside [0,1]");
    const double n = static_cast<double>(sorted_.size());
    // Levels are usually i/n computed in floating point; absorb the rounding.
    const double idx = std::ceil(q * n - 1e-9);
    const auto i = static_cast<std::size_t>(std::clamp(idx, 1.0, n));
    return sorted_[i - 1];
  }
  // 1-based order statistic X_(i).
  double order_statistic(std::size_t i) const { return sorted_.at(i - 1); }
  std::size_t sample_size() const noexcept { return sorted_.size(); }
  SourceKind kind() const noexcept { return SourceKind::Empirical; }
  const std::vector<double>& sorted() const noexcept { return sorted_; }

 private:
  std::vector<double> sorted_;
};

class SmoothedQuantiles {
 public:
  explicit SmoothedQuantiles(SmoothCdf cdf) : cdf_(std::move(cdf)) {}

  double quantile(double q) const { return cdf_.inverse(q); }
  std::size_t sample_size() const noexcept { return cdf_.sample_size(); }
  SourceKind kind() const noexcept { return SourceKind::Smoothed; }
  const SmoothCdf& cdf() const noexcept { return cdf_; }

 private:
  SmoothCdf cdf_;
};

// A known quantile function, for testing.
class OracleQuantiles {
 public:
  OracleQuantiles(std::function<double(double)> q, std::size_t n) : q_(std::move(q)), n_(n) {}

  double quantile(double q) const { return q_(q); }
  std::size_t sample_size() const noexcept { return n_; }
  SourceKind kind() const noexcept { return SourceKind::Oracle; }

 private:
  std::function<double(double)> q_;
  std::size_t n_;
};

struct TailEstimate {
  double value = 0.0;
  double raw_value = 0.0;
  std::size_t k = 0;
  EstimatorKind kind = EstimatorKind::Pickands;
  SourceKind source = SourceKind::Empirical;
  bool truncated = false;
};

struct KRange {
  std::size_t lo;
  std::size_t hi;
};

inline KRange valid_k_range(EstimatorKind e, std::size_t n) {
  switch (e) {
    case EstimatorKind::Pickands: return {4, n};
    case EstimatorKind::Falk: return {3, n - 1};
    case EstimatorKind::MVUE: return {2, n - 1};
  }
  return {1, 0};
}

namespace detail {

inline double clamp_index(double raw) { return std::clamp(raw, -1.0, 0.0); }

inline TailEstimate finish(double raw, std::size_t k, EstimatorKind e, SourceKind s, bool truncate) {
  TailEstimate t;
  t.raw_value = raw;
  t.k = k;
  t.kind = e;
  t.source = s;
  t.truncated = truncate && (raw < -1.0 || raw > 0.0);
  t.value = truncate ? clamp_index(raw) : raw;
  return t;
}

inline void check_k(EstimatorKind e, std::size_t k, std::size_t n) {
  const auto r = valid_k_range(e, n);
  if (k < r.lo || k > r.hi || r.lo > r.hi)
    throw InvalidArgument(to_string(e) + ": k=" + std::to_string(k) + " outside [" +
                          std::to_string(r.lo) + "," + std::to_string(r.hi) + "] for n=" +
                          std::to_string(n));
}

template <QuantileSource S>
std::optional<double> pickands_levels_raw(const S& h, double q1, double q2, double q3) {
  const double a = h.quantile(q1);
  const double b = h.quantile(q2);
  const double c = h.quantile(q3);
  const double num = a - b;
  const double den = b - c;
  if (!(num > 0.0) || !(den > 0.0)) return std::nullopt;
  return std::log(num / den) / std::numbers::ln2;
}

// r = floor(k/4) for the empirical source, k/4 otherwise.
template <QuantileSource S>
std::optional<double> pickands_raw(const S& h, std::size_t k) {
  const auto n = static_cast<double>(h.sample_size());
  const double r = h.kind() == SourceKind::Empirical ? std::floor(k / 4.0) : k / 4.0;
  const auto level = [n](double x) { return std::clamp(x / n, 0.0, 1.0); };
  return pickands_levels_raw(h, level(n - r + 1), level(n - 2 * r + 1), level(n - 4 * r + 1));
}

template <QuantileSource S>
std::optional<double> falk_raw(const S& h, std::size_t k, double x_max) {
  const auto n = static_cast<double>(h.sample_size());
  const double anchor = x_max - h.quantile((n - static_cast<double>(k)) / n);
  if (!(anchor > 0.0)) return std::nullopt;
  double acc = 0.0;
  for (std::size_t j = 2; j <= k; ++j) {
    const double num = x_max - h.quantile((n - static_cast<double>(j) + 1) / n);
    if (!(num > 0.0)) return std::nullopt;
    acc += std::log(num / anchor);
  }
  return acc / static_cast<double>(k - 1);
}

template <QuantileSource S>
std::optional<double> mvue_raw(const S& h, std::size_t k, double omega) {
  const auto n = static_cast<double>(h.sample_size());
  const double anchor = omega - h.quantile((n - static_cast<double>(k)) / n);
  if (!(anchor > 0.0)) return std::nullopt;
  double acc = 0.0;
  for (std::size_t j = 1; j <= k; ++j) {
    const double num = omega - h.quantile((n - static_cast<double>(j) + 1) / n);
    if (!(num > 0.0)) return std::nullopt;
    acc += std::log(num / anchor);
  }
  return acc / static_cast<double>(k);
}

template <QuantileSource S>
std::optional<double> estimate_raw(const S& h, EstimatorKind e, std::size_t k, double aux) {
  switch (e) {
    case EstimatorKind::Pickands: return pickands_raw(h, k);
    case EstimatorKind::Falk: return falk_raw(h, k, aux);
    case EstimatorKind::MVUE: return mvue_raw(h, k, aux);
  }
  return std::nullopt;
}

}  // namespace detail

// log2 of the spacing ratio (H^{-1}(q1) - H^{-1}(q2)) / (H^{-1}(q2) - H^{-1}(q3)).
template <QuantileSource S>
double pickands_at_levels(const S& h, double q1, double q2, double q3) {
  auto v = detail::pickands_levels_raw(h, q1, q2, q3);
  if (!v) throw UndefinedEstimate(0, "pickands: non-positive quantile spacing");
  return *v;
}

template <QuantileSource S>
TailEstimate pickands(const S& h, std::size_t k, bool truncate = false) {
  detail::check_k(EstimatorKind::Pickands, k, h.sample_size());
  auto v = detail::pickands_raw(h, k);
  if (!v) throw UndefinedEstimate(k, "pickands: non-positive quantile spacing");
  return detail::finish(*v, k, EstimatorKind::Pickands, h.kind(), truncate);
}

// x_max is X_(n) of the underlying sample.
template <QuantileSource S>
TailEstimate falk(const S& h, std::size_t k, double x_max, bool truncate = false) {
  detail::check_k(EstimatorKind::Falk, k, h.sample_size());
  auto v = detail::falk_raw(h, k, x_max);
  if (!v) throw UndefinedEstimate(k, "falk: non-positive log argument");
  return detail::finish(*v, k, EstimatorKind::Falk, h.kind(), truncate);
}

// omega is the known upper endpoint of the true distribution.
template <QuantileSource S>
TailEstimate mvue(const S& h, std::size_t k, double omega, bool truncate = false) {
  detail::check_k(EstimatorKind::MVUE, k, h.sample_size());
  if (!(omega > h.quantile(1.0)))
    throw InvalidArgument("mvue: endpoint omega must exceed the sample maximum");
  auto v = detail::mvue_raw(h, k, omega);
  if (!v) throw UndefinedEstimate(k, "mvue: non-positive log argument");
  return detail::finish(*v, k, EstimatorKind::MVUE, h.kind(), truncate);
}

struct HillPoint {
  std::size_t k = 0;
  std::optional<TailEstimate> estimate;  // empty where the estimate is undefined
};

struct HillSeries {
  EstimatorKind estimator = EstimatorKind::Pickands;
  SourceKind source = SourceKind::Empirical;
  std::vector<HillPoint> points;
};

// Estimates for every valid k (optionally restricted to [k_lo, k_hi]). aux is
// x_max for Falk and omega for MVUE; it is ignored for Pickands.
template <QuantileSource S>
HillSeries hill_series(const S& h, EstimatorKind e, double aux, bool truncate,
                       std::optional<KRange> restrict = std::nullopt) {
  const std::size_t n = h.sample_size();
  if (e == EstimatorKind::MVUE && !(aux > h.quantile(1.0)))
    throw InvalidArgument("mvue: endpoint omega must exceed the sample maximum");
  KRange r = valid_k_range(e, n);
  if (restrict) {
    r.lo = std::max(r.lo, restrict->lo);
    r.hi = std::min(r.hi, restrict->hi);
  }
  HillSeries s{e, h.kind(), {}};
  for (std::size_t k = r.lo; k <= r.hi; ++k) {
    HillPoint p{k, std::nullopt};
    if (auto v = detail::estimate_raw(h, e, k, aux)) p.estimate = detail::finish(*v, k, e, h.kind(), truncate);
    s.points.push_back(p);
  }
  return s;
}

}  // namespace smoothtail
