#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <vector>

#include <smoothtail/logcon.hpp>

#include "oracles.hpp"

using namespace smoothtail;
using Catch::Approx;

TEST_CASE("prepare_sample sorts and merges ties", "[logcon]") {
  const std::vector<double> a{3, 1, 2};
  auto d = prepare_sample(a);
  CHECK(d.points == std::vector<double>{1, 2, 3});
  for (double w : d.weights) CHECK(w == Approx(1.0 / 3.0));
  CHECK(d.raw_n == 3);

  const std::vector<double> b{1, 1, 2};
  d = prepare_sample(b);
  CHECK(d.points == std::vector<double>{1, 2});
  CHECK(d.weights[0] == Approx(2.0 / 3.0));
  CHECK(d.weights[1] == Approx(1.0 / 3.0));
}

TEST_CASE("prepare_sample rejects degenerate input", "[logcon]") {
  CHECK_THROWS_AS(prepare_sample(std::vector<double>{5, 5, 5}), DegenerateSample);
  CHECK_THROWS_AS(prepare_sample(std::vector<double>{1}), DegenerateSample);
  CHECK_THROWS_AS(prepare_sample(std::vector<double>{}), DegenerateSample);
  CHECK_THROWS_AS(prepare_sample(std::vector<double>{1, std::numeric_limits<double>::quiet_NaN()}),
                  InvalidArgument);
  CHECK_THROWS_AS(prepare_sample(std::vector<double>{1, std::numeric_limits<double>::infinity()}),
                  InvalidArgument);
}

TEST_CASE("segment_integral", "[logcon]") {
  CHECK(segment_integral(0, 1, 0, 0) == 1.0);
  CHECK(segment_integral(0, 1, 0, 1) == Approx(std::numbers::e - 1.0).epsilon(1e-14));
  // exact value 2 (e^d - 1) / d = 2 + 1e-9 + O(1e-19)
  CHECK(std::abs(segment_integral(0, 2, 0, 1e-9) - (2.0 + 1e-9)) < 1e-12);
  CHECK(segment_integral(0, 1, 1, 0) == Approx(std::numbers::e - 1.0).epsilon(1e-14));

  // Relative accuracy across both branches against Gauss-Legendre.
  for (double d : {-30.0, -3.0, -0.5, -2e-4, -9e-5, -1e-7, 0.0, 1e-7, 9e-5, 2e-4, 0.5, 3.0, 30.0}) {
    for (double base : {-5.0, 0.0, 2.0}) {
      const double ref = oracle::gauss_legendre([&](double t) { return std::exp(base + d * t); }, 0.0, 1.0);
      INFO("d=" << d << " base=" << base);
      CHECK(std::abs(segment_integral(0.0, 1.0, base, base + d) / ref - 1.0) < 1e-13);
    }
  }
}

TEST_CASE("exponential moment kernel matches quadrature", "[logcon]") {
  for (double r : {-2.0, 0.0, 1.5}) {
    for (double d : {-40.0, -5.0, -1.0, -0.3, 0.0, 1e-9, 0.3, 1.0, 5.0, 40.0}) {
      const double s = r + d;
      const auto m = detail::exp_moments(r, s);
      auto q = [&](int a, int b) {
        return oracle::gauss_legendre(
            [&](double u) { return std::pow(1 - u, a) * std::pow(u, b) * std::exp((1 - u) * r + u * s); }, 0.0, 1.0);
      };
      INFO("r=" << r << " d=" << d);
      CHECK(m.j00 == Approx(q(0, 0)).epsilon(1e-12));
      CHECK(m.j10 == Approx(q(1, 0)).epsilon(1e-12));
      CHECK(m.j01 == Approx(q(0, 1)).epsilon(1e-12));
      CHECK(m.j20 == Approx(q(2, 0)).epsilon(1e-11));
      CHECK(m.j11 == Approx(q(1, 1)).epsilon(1e-11));
      CHECK(m.j02 == Approx(q(0, 2)).epsilon(1e-11));
    }
  }
}

TEST_CASE("two-point samples give the uniform density on their range", "[logcon][oracle]") {
  for (auto pair : {std::pair{0.0, 1.0}, std::pair{-3.0, 5.0}, std::pair{1e6, 1e6 + 0.25}}) {
    const std::vector<double> raw{pair.first, pair.second};
    const auto res = fit_logconcave(raw);
    const double expected = -std::log(pair.second - pair.first);
    for (double v : res.fit.phi()) CHECK(std::abs(v - expected) < 1e-8);
    CHECK(res.fit.slopes()[0] == Approx(0.0).margin(1e-8));
  }
  const auto res = fit_logconcave(std::vector<double>{0.0, 1.0});
  CHECK(log_likelihood(res.fit, prepare_sample(std::vector<double>{0.0, 1.0})) == Approx(0.0).margin(1e-12));
}

TEST_CASE("fit of (1,2,4) matches the sample mean", "[logcon][oracle]") {
  const auto res = fit_logconcave(std::vector<double>{1, 2, 4});
  CHECK(std::abs(oracle::fit_moment(res.fit, 1) - 7.0 / 3.0) < 1e-6);
  CHECK(std::abs(oracle::fit_moment(res.fit, 0) - 1.0) < 1e-7);
}

TEST_CASE("n = 3 fits agree with a brute-force grid search", "[logcon][oracle]") {
  const std::vector<std::vector<double>> samples{{1, 2, 4}, {0, 0.1, 1}, {0, 0.9, 1}, {-1, 0, 1}, {0, 1, 1, 3}};
  for (const auto& raw : samples) {
    const auto data = prepare_sample(raw);
    if (data.size() != 3) continue;
    const auto res = fit_logconcave(data);
    const double fitted = oracle::objective(data.points, data.weights, res.fit.phi());
    const double grid = oracle::n3_grid_optimum(data.points, data.weights);
    INFO("sample starts at " << raw.front());
    CHECK(std::abs(fitted - grid) < 1e-5);
    CHECK(fitted >= grid - 1e-9);
  }
}

TEST_CASE("fits satisfy the optimality conditions on fuzzed samples", "[logcon][property]") {
  RngState rng(20240611);
  for (std::size_t i = 0; i < 60; ++i) {
    const auto raw = oracle::fuzz_sample(i, rng);
    const auto data = prepare_sample(raw);
    const auto res = fit_logconcave(data);
    const auto& fit = res.fit;
    INFO("fuzz sample " << i << " n=" << raw.size());

    const auto& s = fit.slopes();
    for (std::size_t j = 0; j + 1 < s.size(); ++j) REQUIRE(s[j + 1] <= s[j] + 1e-10);

    double mass = 0.0;
    for (double m : fit.segment_mass()) mass += m;
    CHECK(std::abs(mass - 1.0) < 1e-7);
    CHECK(fit.cum_mass().front() == 0.0);
    CHECK(fit.cum_mass().back() == 1.0);

    double sample_mean = 0.0;
    for (std::size_t j = 0; j < data.size(); ++j) sample_mean += data.weights[j] * data.points[j];
    CHECK(std::abs(oracle::fit_moment(fit, 1) - sample_mean) < 1e-6 * std::max(1.0, std::abs(sample_mean)));

    const double ll = log_likelihood(fit, data);
    CHECK(ll == Approx(res.diagnostics.log_likelihood).epsilon(1e-12));
    CHECK(ll >= oracle::gaussian_loglik(data.points, data.weights) - 1e-9);
    CHECK(ll >= oracle::uniform_loglik(data.points) - 1e-9);
    CHECK(res.diagnostics.final_gap <= FitOptions{}.tolerance);
    CHECK(res.diagnostics.converged);
  }
}

TEST_CASE("no single-knot perturbation improves the objective", "[logcon][property]") {
  RngState rng(99);
  for (std::size_t i = 0; i < 9; ++i) {
    const auto data = prepare_sample(oracle::fuzz_sample(i, rng));
    const auto res = fit_logconcave(data);
    const auto& x = data.points;
    const double base = oracle::objective(x, data.weights, res.fit.phi());
    const double range = x.back() - x.front();
    const double t = 1e-6 / range;
    for (std::size_t j = 1; j + 1 < x.size(); ++j) {
      auto phi = res.fit.phi();
      for (std::size_t i2 = j; i2 < x.size(); ++i2) phi[i2] -= t * (x[i2] - x[j]);
      const double slope = (oracle::objective(x, data.weights, phi) - base) / (t * range);
      CHECK(slope <= 1e-6);
    }
    // Shifting or tilting the log-density must not help either.
    for (double eps : {1e-6, -1e-6}) {
      auto shifted = res.fit.phi();
      for (auto& v : shifted) v += eps;
      CHECK(oracle::objective(x, data.weights, shifted) <= base + 1e-12);
    }
  }
}

TEST_CASE("fits are affine equivariant", "[logcon][property]") {
  RngState rng(7);
  for (std::size_t i = 0; i < 12; ++i) {
    const auto raw = oracle::fuzz_sample(i, rng);
    const double a = -4.0 + 8.0 * rng.uniform();
    const double b = 0.1 + 10.0 * rng.uniform();
    std::vector<double> moved(raw.size());
    for (std::size_t j = 0; j < raw.size(); ++j) moved[j] = a + b * raw[j];
    const auto f0 = fit_logconcave(raw).fit;
    const auto f1 = fit_logconcave(moved).fit;
    REQUIRE(f0.size() == f1.size());
    for (std::size_t j = 0; j < f0.size(); ++j) CHECK(std::abs(f1.phi()[j] - (f0.phi()[j] - std::log(b))) < 1e-6);
  }
}

TEST_CASE("ties are fitted through merged weights", "[logcon]") {
  const std::vector<double> raw{0.1, 0.2, 0.2, 0.2, 0.5, 0.7, 0.7, 1.0};
  const auto data = prepare_sample(raw);
  CHECK(data.size() == 5);
  const auto res = fit_logconcave(data);
  CHECK(res.fit.raw_n() == 8);
  double mean = 0.0;
  for (double x : raw) mean += x / 8.0;
  CHECK(std::abs(res.fit.mean() - mean) < 1e-9);
}

TEST_CASE("non-convergence is reported with diagnostics", "[logcon]") {
  RngState rng(1);
  const auto raw = gpd_sample({-0.5, 1.0}, 2000, rng);
  FitOptions opt;
  opt.max_iterations = 1;
  try {
    fit_logconcave(raw, opt);
    FAIL("expected ConvergenceError");
  } catch (const ConvergenceError& e) {
    CHECK(e.diagnostics().final_gap > opt.tolerance);
    CHECK_FALSE(e.diagnostics().converged);
  }
  opt = {};
  opt.tolerance = 0.0;
  CHECK_THROWS_AS(fit_logconcave(raw, opt), InvalidArgument);
}

TEST_CASE("LogConcaveFit::from_parts validates its input", "[logcon]") {
  CHECK_THROWS_AS(LogConcaveFit::from_parts({0, 1}, {0}, {0}, {0, 1}, 2, 1e-8, 0), InvalidArgument);
  CHECK_THROWS_AS(LogConcaveFit::from_parts({1, 0}, {0, 0}, {0}, {0, 1}, 2, 1e-8, 0), InvalidArgument);
  const auto f = LogConcaveFit::from_parts({0, 1}, {0, 0}, {0}, {0, 1}, 2, 1e-8, 0);
  CHECK(f.density(0.5) == Approx(1.0));
  CHECK(f.density(1.5) == 0.0);
  CHECK(f.log_density(-0.1) == -std::numeric_limits<double>::infinity());
}
