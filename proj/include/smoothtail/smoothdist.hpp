#pragma once

// The distribution function of a fitted log-concave density,
//
//     F(x) = integral_{x_1}^{x} exp(phi(t)) dt,
//
// its exact inverse, and the sup-distance to the empirical distribution
// function.

#include <algorithm>
#include <cmath>
#include <memory>
#include <utility>

#include "errors.hpp"
#include "logcon.hpp"

namespace smoothtail {

class SmoothCdf {
 public:
  explicit SmoothCdf(LogConcaveFit fit)
      : fit_(std::make_shared<const LogConcaveFit>(std::move(fit))) {}
  explicit SmoothCdf(std::shared_ptr<const LogConcaveFit> fit) : fit_(std::move(fit)) {
    if (!fit_) throw InvalidArgument("SmoothCdf needs a fit");
  }

  const LogConcaveFit& fit() const noexcept { return *fit_; }
  std::size_t sample_size() const noexcept { return fit_->raw_n(); }

  double operator()(double x) const noexcept {
    const auto& f = *fit_;
    if (!(x > f.lower())) return 0.0;
    if (x >= f.upper()) return 1.0;
    const auto& pts = f.points();
    const std::size_t j = f.segment_of(x);
    if (x == pts[j]) return f.cum_mass()[j];
    const double phi_x = f.phi()[j] + f.slopes()[j] * (x - pts[j]);
    const double partial = segment_integral(pts[j], x, f.phi()[j], phi_x) / f.total_mass();
    return std::clamp(f.cum_mass()[j] + partial, f.cum_mass()[j], f.cum_mass()[j + 1]);
  }

  // Unique x in [x_1, x_m] with F(x) = q.
  double inverse(double q) const {
    if (!(q >= 0.0 && q <= 1.0)) throw InvalidArgument("probability level outside [0,1]");
    const auto& f = *fit_;
    const auto& pts = f.points();
    const auto& cum = f.cum_mass();
    if (q == 0.0) return f.lower();
    if (q == 1.0) return f.upper();
    auto it = std::upper_bound(cum.begin(), cum.end(), q);
    std::size_t j = static_cast<std::size_t>(it - cum.begin());
    j = std::min(j == 0 ? 0 : j - 1, pts.size() - 2);
    const double dq = q - cum[j];
    const double len = pts[j + 1] - pts[j];
    const double seg = cum[j + 1] - cum[j];
    const double dens = std::exp(f.phi()[j]) / f.total_mass();
    const double slope = f.slopes()[j];
    double x;
    if (dens < 1e-300 || seg <= 0.0) {
      x = pts[j] + (seg > 0.0 ? len * dq / seg : 0.0);
    } else if (slope == 0.0) {
      x = pts[j] + dq / dens;
    } else {
      const double arg = slope * dq / dens;
      x = arg <= -1.0 ? pts[j + 1] : pts[j] + std::log1p(arg) / slope;
    }
    return std::clamp(x, pts[j], pts[j + 1]);
  }

 private:
  std::shared_ptr<const LogConcaveFit> fit_;
};

inline double cdf_eval(const SmoothCdf& s, double x) { return s(x); }
inline double cdf_inverse(const SmoothCdf& s, double q) { return s.inverse(q); }

// max_t |F_n(t) - F(t)| over the whole range. Between consecutive points F_n
// is constant and F is non-decreasing, so the supremum over each gap is
// attained at its endpoints; evaluating both one-sided limits of F_n at every
// point is therefore exact.
inline double sup_distance(const SmoothCdf& s, const SampleData& data) {
  double emp = 0.0;
  double worst = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double smooth = s(data.points[i]);
    worst = std::max(worst, std::abs(smooth - emp));
    emp += data.weights[i];
    worst = std::max(worst, std::abs(smooth - std::min(emp, 1.0)));
  }
  return worst;
}

}  // namespace smoothtail
