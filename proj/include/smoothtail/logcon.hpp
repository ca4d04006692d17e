#pragma once

// Maximum likelihood estimation of a log-concave density.
//
// For distinct points x_1 < ... < x_m with weights w_i (summing to one) the
// estimator maximizes
//
//     L(phi) = sum_i w_i phi(x_i) - integral exp(phi(t)) dt
//
// over concave phi. The maximizer is piecewise linear between the points, with
// kinks ("knots") at a subset of them, and -inf outside [x_1, x_m]. At the
// optimum the integral is one, so exp(phi) is a density.
//
// The solver is an active-set method over knot sets. For a fixed knot set the
// problem is smooth and unconstrained in the values of phi at the knots and is
// solved by Newton's method (the Hessian is tridiagonal). A new knot is added
// where the directional derivative in the direction -(x - x_j)_+ is largest;
// if the resulting unconstrained optimum is not concave the iterate is moved
// back along the segment to the first point where a kink vanishes and that
// knot is dropped. The loop stops once no directional derivative exceeds the
// tolerance.
//
// Internally the points are mapped affinely onto [0,1]; the reported gap is
// measured on that standardized scale.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "errors.hpp"

namespace smoothtail {

struct SampleData {
  std::vector<double> points;   // strictly increasing
  std::vector<double> weights;  // multiplicity / raw_n
  std::size_t raw_n = 0;

  std::size_t size() const noexcept { return points.size(); }
};

inline SampleData prepare_sample(std::span<const double> raw) {
  if (raw.size() < 2) throw DegenerateSample("need at least two observations");
  for (double x : raw)
    if (!std::isfinite(x)) throw InvalidArgument("sample contains a non-finite value");
  std::vector<double> sorted(raw.begin(), raw.end());
  std::sort(sorted.begin(), sorted.end());
  SampleData d;
  d.raw_n = sorted.size();
  const double unit = 1.0 / static_cast<double>(d.raw_n);
  std::size_t i = 0;
  while (i < sorted.size()) {
    std::size_t j = i;
    while (j < sorted.size() && sorted[j] == sorted[i]) ++j;
    d.points.push_back(sorted[i]);
    d.weights.push_back(static_cast<double>(j - i) * unit);
    i = j;
  }
  if (d.points.size() < 2) throw DegenerateSample("need at least two distinct observations");
  return d;
}

// integral_a^b exp of the linear interpolant between (a, phi_a) and (b, phi_b).
inline double segment_integral(double a, double b, double phi_a, double phi_b) {
  const double len = b - a;
  const double d = phi_b - phi_a;
  if (std::abs(d) < 1e-4) {
    return len * std::exp(phi_a) * (1.0 + d * (1.0 / 2 + d * (1.0 / 6 + d * (1.0 / 24 + d / 120))));
  }
  // Factor out the larger endpoint value so neither exponential overflows early.
  if (d > 0.0) return len * std::exp(phi_b) * (-std::expm1(-d)) / d;
  return len * std::exp(phi_a) * std::expm1(d) / d;
}

namespace detail {

// Weighted exponential moments over the unit interval,
//   j_ab = integral_0^1 (1-u)^a u^b exp((1-u) r + u s) du,  a + b <= 2.
struct ExpMoments {
  double j00, j10, j01, j20, j11, j02;
};

// K_p(d) = integral_0^1 u^p exp(u d) du for d <= 0.
inline void unit_moments(double d, double& k0, double& k1, double& k2) {
  if (d > -1.0) {
    k0 = k1 = k2 = 0.0;
    double term = 1.0;  // d^k / k!
    for (int k = 0; k < 30; ++k) {
      k0 += term / (k + 1);
      k1 += term / (k + 2);
      k2 += term / (k + 3);
      term *= d / (k + 1);
    }
    return;
  }
  const double e = std::exp(d);
  k0 = -std::expm1(d) / -d;
  k1 = (e * (d - 1.0) + 1.0) / (d * d);
  k2 = (e * (d * d - 2.0 * d + 2.0) - 2.0) / (d * d * d);
}

inline ExpMoments exp_moments(double r, double s) {
  const bool flip = s > r;
  const double base = flip ? s : r;
  const double d = flip ? r - s : s - r;
  double k0, k1, k2;
  unit_moments(d, k0, k1, k2);
  const double e = std::exp(base);
  // Moments in the orientation where u runs away from the larger endpoint.
  const double a00 = e * k0;
  const double a01 = e * k1;
  const double a10 = e * (k0 - k1);
  const double a02 = e * k2;
  const double a11 = e * (k1 - k2);
  const double a20 = e * (k0 - 2.0 * k1 + k2);
  if (flip) return {a00, a01, a10, a02, a11, a20};
  return {a00, a10, a01, a20, a11, a02};
}

}  // namespace detail

struct FitOptions {
  double tolerance = 1e-8;        // max directional derivative at a certified optimum
  int max_iterations = 500;       // outer active-set iterations
  int max_newton = 200;           // per inner solve
};

struct FitDiagnostics {
  int iterations = 0;
  double final_gap = 0.0;
  double log_likelihood = 0.0;
  std::size_t active_knots = 0;
  bool converged = false;
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, FitDiagnostics diag)
      : Error(what), diagnostics_(diag) {}
  const FitDiagnostics& diagnostics() const noexcept { return diagnostics_; }

 private:
  FitDiagnostics diagnostics_;
};

// Piecewise-linear log-density on the sample points. Immutable.
class LogConcaveFit {
 public:
  LogConcaveFit() = default;

  // Builds a fit from points, log-density values and segment slopes. Masses are
  // recomputed; cumulative masses are normalized so that the last one is 1.
  static LogConcaveFit from_parts(std::vector<double> points, std::vector<double> phi,
                                  std::vector<double> slopes, std::vector<double> knots,
                                  std::size_t raw_n, double tolerance, double log_likelihood) {
    const std::size_t m = points.size();
    if (m < 2 || phi.size() != m || slopes.size() != m - 1)
      throw InvalidArgument("inconsistent log-concave fit dimensions");
    for (std::size_t i = 0; i + 1 < m; ++i)
      if (!(points[i] < points[i + 1])) throw InvalidArgument("fit points must be increasing");
    for (double v : phi)
      if (!std::isfinite(v)) throw InvalidArgument("fit log-density must be finite");
    LogConcaveFit f;
    f.points_ = std::move(points);
    f.phi_ = std::move(phi);
    f.slopes_ = std::move(slopes);
    f.knots_ = std::move(knots);
    f.raw_n_ = raw_n;
    f.tolerance_ = tolerance;
    f.log_likelihood_ = log_likelihood;
    f.segment_mass_.resize(m - 1);
    f.cum_mass_.assign(m, 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < m; ++i) {
      f.segment_mass_[i] = segment_integral(f.points_[i], f.points_[i + 1], f.phi_[i], f.phi_[i + 1]);
      total += f.segment_mass_[i];
      f.cum_mass_[i + 1] = total;
    }
    f.total_mass_ = total;
    for (auto& c : f.cum_mass_) c /= total;
    f.cum_mass_.front() = 0.0;
    f.cum_mass_.back() = 1.0;
    return f;
  }

  std::size_t size() const noexcept { return points_.size(); }
  const std::vector<double>& points() const noexcept { return points_; }
  const std::vector<double>& phi() const noexcept { return phi_; }
  const std::vector<double>& slopes() const noexcept { return slopes_; }
  const std::vector<double>& knots() const noexcept { return knots_; }
  const std::vector<double>& segment_mass() const noexcept { return segment_mass_; }
  const std::vector<double>& cum_mass() const noexcept { return cum_mass_; }
  double total_mass() const noexcept { return total_mass_; }
  std::size_t raw_n() const noexcept { return raw_n_; }
  double tolerance() const noexcept { return tolerance_; }
  double log_likelihood() const noexcept { return log_likelihood_; }
  double lower() const noexcept { return points_.front(); }
  double upper() const noexcept { return points_.back(); }

  // Index j of the segment [x_j, x_{j+1}] containing x (x inside the range).
  std::size_t segment_of(double x) const noexcept {
    auto it = std::upper_bound(points_.begin(), points_.end(), x);
    std::size_t j = static_cast<std::size_t>(it - points_.begin());
    j = j == 0 ? 0 : j - 1;
    return std::min(j, points_.size() - 2);
  }

  double log_density(double x) const noexcept {
    if (x < lower() || x > upper()) return -std::numeric_limits<double>::infinity();
    if (x == upper()) return phi_.back();
    const std::size_t j = segment_of(x);
    return phi_[j] + slopes_[j] * (x - points_[j]);
  }

  double density(double x) const noexcept { return std::exp(log_density(x)); }

  // Mean of the fitted density, in closed form.
  double mean() const {
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < points_.size(); ++i) {
      const double len = points_[i + 1] - points_[i];
      const auto mom = detail::exp_moments(phi_[i], phi_[i + 1]);
      acc += len * (points_[i] * mom.j00 + len * mom.j01);
    }
    return acc;
  }

 private:
  std::vector<double> points_;
  std::vector<double> phi_;
  std::vector<double> slopes_;
  std::vector<double> knots_;
  std::vector<double> segment_mass_;
  std::vector<double> cum_mass_;
  double total_mass_ = 1.0;
  std::size_t raw_n_ = 0;
  double tolerance_ = 0.0;
  double log_likelihood_ = 0.0;
};

inline double log_likelihood(const LogConcaveFit& fit, const SampleData& data) {
  double acc = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) acc += data.weights[i] * fit.log_density(data.points[i]);
  return acc;
}

namespace detail {

// Active-set solver on standardized points z in [0,1].
class ActiveSetSolver {
 public:
  ActiveSetSolver(std::span<const double> z, std::span<const double> w, const FitOptions& opt)
      : z_(z), w_(w), opt_(opt), m_(z.size()) {}

  struct State {
    std::vector<std::size_t> knots;  // indices into z, first 0, last m-1
    std::vector<double> eta;         // phi at the knots
  };

  FitDiagnostics run(State& st) {
    FitDiagnostics diag;
    st.knots = {0, m_ - 1};
    st.eta = {0.0, 0.0};
    newton(st);
    std::vector<double> phi;
    std::vector<double> gap;
    for (;;) {
      expand(st, phi);
      std::size_t best = 0;
      double best_gap = directional_derivatives(phi, gap, st.knots, best);
      diag.final_gap = best_gap;
      diag.iterations++;
      if (best_gap <= opt_.tolerance) {
        diag.converged = true;
        break;
      }
      if (diag.iterations > opt_.max_iterations) break;
      add_knot(st, best);
      solve_with_stepback(st);
    }
    diag.active_knots = st.knots.size();
    return diag;
  }

  // phi at every point from the knot representation.
  void expand(const State& st, std::vector<double>& phi) const {
    phi.assign(m_, 0.0);
    for (std::size_t l = 0; l + 1 < st.knots.size(); ++l) {
      const std::size_t a = st.knots[l];
      const std::size_t b = st.knots[l + 1];
      const double slope = (st.eta[l + 1] - st.eta[l]) / (z_[b] - z_[a]);
      for (std::size_t i = a; i < b; ++i) phi[i] = st.eta[l] + slope * (z_[i] - z_[a]);
    }
    phi[m_ - 1] = st.eta.back();
  }

 private:
  double objective(const std::vector<std::size_t>& knots, const std::vector<double>& wk,
                   const std::vector<double>& eta) const {
    double val = 0.0;
    for (std::size_t l = 0; l < eta.size(); ++l) val += wk[l] * eta[l];
    for (std::size_t l = 0; l + 1 < eta.size(); ++l)
      val -= segment_integral(z_[knots[l]], z_[knots[l + 1]], eta[l], eta[l + 1]);
    return val;
  }

  // Weight mass carried by each knot value under linear interpolation.
  std::vector<double> knot_weights(const std::vector<std::size_t>& knots) const {
    std::vector<double> wk(knots.size(), 0.0);
    for (std::size_t l = 0; l + 1 < knots.size(); ++l) {
      const std::size_t a = knots[l];
      const std::size_t b = knots[l + 1];
      const double len = z_[b] - z_[a];
      for (std::size_t i = a; i < b; ++i) {
        const double lambda = (z_[i] - z_[a]) / len;
        wk[l] += w_[i] * (1.0 - lambda);
        wk[l + 1] += w_[i] * lambda;
      }
    }
    wk.back() += w_[m_ - 1];
    return wk;
  }

  // Damped Newton on the knot values for the current knot set.
  void newton(State& st) const {
    const std::size_t p = st.knots.size();
    const auto wk = knot_weights(st.knots);
    std::vector<double> grad(p), diag(p), off(p > 1 ? p - 1 : 0), step(p), trial(p);
    double current = objective(st.knots, wk, st.eta);
    for (int it = 0; it < opt_.max_newton; ++it) {
      std::fill(grad.begin(), grad.end(), 0.0);
      std::fill(diag.begin(), diag.end(), 0.0);
      for (std::size_t l = 0; l < p; ++l) grad[l] = wk[l];
      for (std::size_t l = 0; l + 1 < p; ++l) {
        const double len = z_[st.knots[l + 1]] - z_[st.knots[l]];
        const auto mom = exp_moments(st.eta[l], st.eta[l + 1]);
        grad[l] -= len * mom.j10;
        grad[l + 1] -= len * mom.j01;
        diag[l] += len * mom.j20;
        diag[l + 1] += len * mom.j02;
        off[l] = len * mom.j11;
      }
      solve_tridiagonal(diag, off, grad, step);
      double decrement = 0.0;
      for (std::size_t l = 0; l < p; ++l) decrement += grad[l] * step[l];
      if (!(decrement > 1e-26)) break;
      double t = 1.0;
      bool accepted = false;
      if (decrement < 1e-12) {
        // Inside the quadratic region the Armijo test is below rounding noise.
        for (std::size_t l = 0; l < p; ++l) trial[l] = st.eta[l] + step[l];
        const double val = objective(st.knots, wk, trial);
        if (std::isfinite(val)) {
          st.eta.swap(trial);
          current = val;
          if (decrement < 1e-24) break;
          continue;
        }
      }
      for (int ls = 0; ls < 60; ++ls) {
        for (std::size_t l = 0; l < p; ++l) trial[l] = st.eta[l] + t * step[l];
        const double val = objective(st.knots, wk, trial);
        if (std::isfinite(val) && val >= current + 0.25 * t * decrement) {
          st.eta.swap(trial);
          current = val;
          accepted = true;
          break;
        }
        t *= 0.5;
      }
      if (!accepted) break;
      if (decrement < 1e-24) break;
    }
  }

  // Solves the symmetric positive definite tridiagonal system (diag, off) x = rhs.
  static void solve_tridiagonal(const std::vector<double>& diag, const std::vector<double>& off,
                                const std::vector<double>& rhs, std::vector<double>& x) {
    const std::size_t p = diag.size();
    std::vector<double> c(p), d(p);
    c[0] = p > 1 ? off[0] / diag[0] : 0.0;
    d[0] = rhs[0] / diag[0];
    for (std::size_t i = 1; i < p; ++i) {
      const double denom = diag[i] - off[i - 1] * c[i - 1];
      c[i] = i + 1 < p ? off[i] / denom : 0.0;
      d[i] = (rhs[i] - off[i - 1] * d[i - 1]) / denom;
    }
    x[p - 1] = d[p - 1];
    for (std::size_t i = p - 1; i-- > 0;) x[i] = d[i] - c[i] * x[i + 1];
  }

  // gap[j] = integral (t - z_j)_+ f(t) dt - sum_i w_i (z_i - z_j)_+ for interior
  // non-knot j; returns the largest such value and its index.
  double directional_derivatives(const std::vector<double>& phi, std::vector<double>& gap,
                                 const std::vector<std::size_t>& knots, std::size_t& arg) const {
    gap.assign(m_, 0.0);
    double tail_mass = 0.0;  // integral from z_{j+1} to z_m of f
    double tail_weight = w_[m_ - 1];
    double model = 0.0;
    double empirical = 0.0;
    for (std::size_t j = m_ - 1; j-- > 0;) {
      const double len = z_[j + 1] - z_[j];
      const auto mom = exp_moments(phi[j], phi[j + 1]);
      model += len * tail_mass + len * len * mom.j01;
      empirical += len * tail_weight;
      gap[j] = model - empirical;
      tail_mass += len * mom.j00;
      tail_weight += w_[j];
    }
    double best = -std::numeric_limits<double>::infinity();
    arg = 0;
    std::size_t next_knot = 0;
    for (std::size_t j = 1; j + 1 < m_; ++j) {
      while (next_knot < knots.size() && knots[next_knot] < j) ++next_knot;
      if (next_knot < knots.size() && knots[next_knot] == j) continue;
      if (gap[j] > best) {
        best = gap[j];
        arg = j;
      }
    }
    return m_ > 2 ? best : 0.0;
  }

  void add_knot(State& st, std::size_t j) const {
    auto pos = std::lower_bound(st.knots.begin(), st.knots.end(), j);
    const std::size_t l = static_cast<std::size_t>(pos - st.knots.begin());
    const std::size_t a = st.knots[l - 1];
    const std::size_t b = st.knots[l];
    const double lambda = (z_[j] - z_[a]) / (z_[b] - z_[a]);
    const double value = (1.0 - lambda) * st.eta[l - 1] + lambda * st.eta[l];
    st.knots.insert(pos, j);
    st.eta.insert(st.eta.begin() + static_cast<std::ptrdiff_t>(l), value);
  }

  // kink[l] = slope left of knot l minus slope right of it (>= 0 when concave).
  std::vector<double> kinks(const State& st) const {
    std::vector<double> k(st.knots.size(), 0.0);
    for (std::size_t l = 1; l + 1 < st.knots.size(); ++l) {
      const double left = (st.eta[l] - st.eta[l - 1]) / (z_[st.knots[l]] - z_[st.knots[l - 1]]);
      const double right = (st.eta[l + 1] - st.eta[l]) / (z_[st.knots[l + 1]] - z_[st.knots[l]]);
      k[l] = left - right;
    }
    return k;
  }

  void solve_with_stepback(State& st) const {
    for (;;) {
      State trial = st;
      newton(trial);
      const auto old_kinks = kinks(st);
      const auto new_kinks = kinks(trial);
      // Largest step along old -> new that keeps every kink non-negative.
      std::vector<double> hit(st.knots.size(), 2.0);
      double t = 1.0;
      for (std::size_t l = 1; l + 1 < st.knots.size(); ++l) {
        if (new_kinks[l] < 0.0) {
          const double c = std::max(old_kinks[l], 0.0);
          hit[l] = c / (c - new_kinks[l]);
          t = std::min(t, hit[l]);
        }
      }
      if (t >= 1.0) {
        st = std::move(trial);
        return;
      }
      for (std::size_t l = 0; l < st.eta.size(); ++l)
        st.eta[l] = (1.0 - t) * st.eta[l] + t * trial.eta[l];
      const auto merged = kinks(st);
      State reduced;
      for (std::size_t l = 0; l < st.knots.size(); ++l) {
        const bool interior = l > 0 && l + 1 < st.knots.size();
        if (interior && (hit[l] <= t || merged[l] <= 0.0)) continue;
        reduced.knots.push_back(st.knots[l]);
        reduced.eta.push_back(st.eta[l]);
      }
      st = std::move(reduced);
    }
  }

  std::span<const double> z_;
  std::span<const double> w_;
  FitOptions opt_;
  std::size_t m_;
};

}  // namespace detail

struct FitResult {
  LogConcaveFit fit;
  FitDiagnostics diagnostics;
};

inline FitResult fit_logconcave(const SampleData& data, const FitOptions& opt = {}) {
  const std::size_t m = data.size();
  if (m < 2) throw DegenerateSample("need at least two distinct observations");
  if (data.weights.size() != m) throw InvalidArgument("points and weights differ in length");
  if (!(opt.tolerance > 0.0)) throw InvalidArgument("tolerance must be positive");
  const double origin = data.points.front();
  const double scale = data.points.back() - origin;
  std::vector<double> z(m);
  for (std::size_t i = 0; i < m; ++i) z[i] = (data.points[i] - origin) / scale;
  z.front() = 0.0;
  z.back() = 1.0;

  detail::ActiveSetSolver solver(z, data.weights, opt);
  detail::ActiveSetSolver::State st;
  FitDiagnostics diag = solver.run(st);

  // Back to the original scale: phi(x) = phi_z(z) - log(scale).
  const double shift = std::log(scale);
  std::vector<double> phi(m), slopes(m - 1), knots;
  for (std::size_t l = 0; l + 1 < st.knots.size(); ++l) {
    const std::size_t a = st.knots[l];
    const std::size_t b = st.knots[l + 1];
    const double slope_z = (st.eta[l + 1] - st.eta[l]) / (z[b] - z[a]);
    const double slope = slope_z / scale;
    for (std::size_t i = a; i < b; ++i) {
      phi[i] = st.eta[l] + slope_z * (z[i] - z[a]) - shift;
      slopes[i] = slope;
    }
  }
  phi[m - 1] = st.eta.back() - shift;
  for (std::size_t idx : st.knots) knots.push_back(data.points[idx]);

  double ll = 0.0;
  for (std::size_t i = 0; i < m; ++i) ll += data.weights[i] * phi[i];
  diag.log_likelihood = ll;
  if (!diag.converged) {
    throw ConvergenceError("log-concave fit did not reach the requested tolerance within " +
                               std::to_string(opt.max_iterations) + " iterations",
                           diag);
  }
  auto fit = LogConcaveFit::from_parts(data.points, std::move(phi), std::move(slopes),
                                       std::move(knots), data.raw_n, opt.tolerance, ll);
  return {std::move(fit), diag};
}

inline FitResult fit_logconcave(std::span<const double> raw, const FitOptions& opt = {}) {
  return fit_logconcave(prepare_sample(raw), opt);
}

}  // namespace smoothtail
