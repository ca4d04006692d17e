#pragma once

// Generalized Pareto, generalized extreme value and Beta distributions.
//
// Tail indices with |gamma| < kGammaZero are evaluated through the
// exponential / Gumbel limit forms.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "errors.hpp"
#include "rng.hpp"

namespace smoothtail {

inline constexpr double kGammaZero = 1e-12;

struct GpdParams {
  double gamma = 0.0;
  double sigma = 1.0;

  GpdParams() = default;
  GpdParams(double g, double s) : gamma(g), sigma(s) {
    if (!(s > 0.0) || !std::isfinite(s)) throw InvalidArgument("GPD scale must be positive");
    if (!std::isfinite(g)) throw InvalidArgument("GPD tail index must be finite");
  }

  bool exponential_limit() const noexcept { return std::abs(gamma) < kGammaZero; }

  // omega(F): -sigma/gamma for gamma < 0, +inf otherwise.
  double upper_endpoint() const noexcept {
    return (gamma < 0.0 && !exponential_limit()) ? -sigma / gamma
                                                 : std::numeric_limits<double>::infinity();
  }
};

struct GevParams {
  double gamma = 0.0;
};

struct BetaParams {
  double theta1 = 1.0;
  double theta2 = 1.0;

  BetaParams() = default;
  BetaParams(double a, double b) : theta1(a), theta2(b) {
    if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b))
      throw InvalidArgument("Beta shape parameters must be positive");
  }
};

inline double gpd_pdf(const GpdParams& p, double x) {
  if (x < 0.0) return 0.0;
  const double z = x / p.sigma;
  if (p.exponential_limit()) return std::exp(-z) / p.sigma;
  const double t = 1.0 + p.gamma * z;
  if (t < 0.0) return 0.0;
  if (t == 0.0) {
    // Upper endpoint for gamma < 0; the density there is 0, 1/sigma or +inf.
    const double power = -(1.0 + 1.0 / p.gamma);
    if (power > 0.0) return 0.0;
    if (power == 0.0) return 1.0 / p.sigma;
    return std::numeric_limits<double>::infinity();
  }
  return std::exp(-(1.0 + 1.0 / p.gamma) * std::log1p(p.gamma * z)) / p.sigma;
}

inline double gpd_cdf(const GpdParams& p, double x) {
  if (x <= 0.0) return 0.0;
  const double z = x / p.sigma;
  if (p.exponential_limit()) return -std::expm1(-z);
  const double t = p.gamma * z;
  if (t <= -1.0) return 1.0;
  return -std::expm1(-std::log1p(t) / p.gamma);
}

// F^{-1}(q) = inf{x : F(x) >= q}.
inline double gpd_quantile(const GpdParams& p, double q) {
  if (!(q >= 0.0 && q <= 1.0)) throw InvalidArgument("quantile level outside [0,1]");
  if (q == 1.0) {
    if (p.gamma < 0.0 && !p.exponential_limit()) return p.upper_endpoint();
    throw InvalidArgument("level 1 has no finite quantile for gamma >= 0");
  }
  const double log_tail = std::log1p(-q);
  if (p.exponential_limit()) return -p.sigma * log_tail;
  return p.sigma * std::expm1(-p.gamma * log_tail) / p.gamma;
}

inline double gev_cdf(const GevParams& p, double x) {
  if (std::abs(p.gamma) < kGammaZero) return std::exp(-std::exp(-x));
  const double t = 1.0 + p.gamma * x;
  if (t <= 0.0) return p.gamma > 0.0 ? 0.0 : 1.0;
  return std::exp(-std::exp(-std::log1p(p.gamma * x) / p.gamma));
}

inline std::vector<double> gpd_sample(const GpdParams& p, std::size_t n, RngState& rng) {
  if (n == 0) throw InvalidArgument("sample size must be at least 1");
  std::vector<double> out(n);
  for (auto& x : out) x = gpd_quantile(p, rng.uniform());
  return out;
}

inline double beta_draw(const BetaParams& p, RngState& rng) {
  for (;;) {
    const double a = rng.gamma(p.theta1);
    const double b = rng.gamma(p.theta2);
    const double x = a / (a + b);
    if (x > 0.0 && x < 1.0) return x;
  }
}

inline std::vector<double> beta_sample(const BetaParams& p, std::size_t n, RngState& rng) {
  if (n == 0) throw InvalidArgument("sample size must be at least 1");
  std::vector<double> out(n);
  for (auto& x : out) x = beta_draw(p, rng);
  return out;
}

// The upper tail of Beta(theta1, theta2) lies in the domain of attraction of
// G_gamma with gamma = -1/theta2.
inline double beta_tail_index(const BetaParams& p) { return -1.0 / p.theta2; }

enum class ShapeClass : unsigned {
  ConvexNonDecreasing = 1u << 0,
  ConcaveNonIncreasing = 1u << 1,
  ConvexNonIncreasing = 1u << 2,
  LogConcave = 1u << 3,
  LogConvex = 1u << 4,
};

inline std::string to_string(ShapeClass c) {
  switch (c) {
    case ShapeClass::ConvexNonDecreasing: return "convex non-decreasing";
    case ShapeClass::ConcaveNonIncreasing: return "concave non-increasing";
    case ShapeClass::ConvexNonIncreasing: return "convex non-increasing";
    case ShapeClass::LogConcave: return "log-concave";
    case ShapeClass::LogConvex: return "log-convex";
  }
  return "unknown";
}

class ShapeClassSet {
 public:
  constexpr ShapeClassSet() = default;
  constexpr ShapeClassSet(std::initializer_list<ShapeClass> labels) {
    for (auto c : labels) insert(c);
  }

  constexpr void insert(ShapeClass c) noexcept { bits_ |= static_cast<unsigned>(c); }
  constexpr bool contains(ShapeClass c) const noexcept {
    return (bits_ & static_cast<unsigned>(c)) != 0;
  }
  constexpr std::size_t size() const noexcept {
    std::size_t count = 0;
    for (unsigned b = bits_; b != 0; b &= b - 1) ++count;
    return count;
  }
  constexpr bool operator==(const ShapeClassSet&) const = default;

 private:
  unsigned bits_ = 0;
};

// Qualitative shape of w_{gamma,sigma}; independent of sigma. Boundary values
// of gamma belong to every closed range that contains them.
inline ShapeClassSet gpd_shape_class(double gamma) {
  ShapeClassSet s;
  if (gamma <= -1.0) s.insert(ShapeClass::ConvexNonDecreasing);
  if (gamma >= -1.0 && gamma <= -0.5) s.insert(ShapeClass::ConcaveNonIncreasing);
  if (gamma >= -0.5) s.insert(ShapeClass::ConvexNonIncreasing);
  if (gamma >= -1.0 && gamma <= 0.0) s.insert(ShapeClass::LogConcave);
  if (gamma <= -1.0 || gamma >= 0.0) s.insert(ShapeClass::LogConvex);
  return s;
}

}  // namespace smoothtail
