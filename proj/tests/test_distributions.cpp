#include <catch2/catch_amalgamated.hpp>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include <cmath>
#include <numbers>
#include <numeric>
#include <vector>

#include <smoothtail/distributions.hpp>

using namespace smoothtail;
using Catch::Approx;

namespace {

double mean_of(const std::vector<double>& xs) {
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

}  // namespace

TEST_CASE("gpd_pdf closed-form values", "[distributions]") {
  CHECK(gpd_pdf({-1.0, 1.0}, 0.3) == Approx(1.0).epsilon(1e-15));
  CHECK(gpd_pdf({0.0, 1.0}, 0.0) == Approx(1.0).epsilon(1e-15));
  CHECK(gpd_pdf({-0.5, 1.0}, 1.0) == Approx(0.5).epsilon(1e-14));
  CHECK(gpd_pdf({-0.5, 1.0}, -0.1) == 0.0);
  CHECK(gpd_pdf({-0.5, 1.0}, 2.5) == 0.0);
  CHECK(gpd_pdf({-0.5, 1.0}, 2.0) == 0.0);
  CHECK(std::isinf(gpd_pdf({-2.0, 1.0}, 0.5)));
}

TEST_CASE("GpdParams rejects a non-positive scale", "[distributions]") {
  CHECK_THROWS_AS(GpdParams(-0.5, 0.0), InvalidArgument);
  CHECK_THROWS_AS(GpdParams(-0.5, -1.0), InvalidArgument);
  CHECK_THROWS_AS(BetaParams(0.0, 1.0), InvalidArgument);
}

TEST_CASE("gpd_quantile closed-form values and errors", "[distributions]") {
  CHECK(gpd_quantile({-1.0, 1.0}, 0.25) == Approx(0.25).epsilon(1e-15));
  CHECK(gpd_quantile({0.0, 1.0}, 1.0 - std::exp(-1.0)) == Approx(1.0).epsilon(1e-14));
  CHECK(gpd_quantile({-0.5, 1.0}, 1.0) == 2.0);
  CHECK_THROWS_AS(gpd_quantile({-0.5, 1.0}, 1.5), InvalidArgument);
  CHECK_THROWS_AS(gpd_quantile({-0.5, 1.0}, -0.1), InvalidArgument);
  CHECK_THROWS_AS(gpd_quantile({0.0, 1.0}, 1.0), InvalidArgument);
  CHECK_THROWS_AS(gpd_quantile({0.3, 1.0}, 1.0), InvalidArgument);
}

TEST_CASE("gpd cdf/quantile round trip", "[distributions][property]") {
  for (double g : {-1.0, -0.5, -1e-9, 0.0, 0.5}) {
    for (double sigma : {0.5, 1.0, 3.0}) {
      const GpdParams p(g, sigma);
      for (int i = 1; i <= 99; ++i) {
        const double q = i / 100.0;
        INFO("gamma=" << g << " sigma=" << sigma << " q=" << q);
        CHECK(std::abs(gpd_cdf(p, gpd_quantile(p, q)) - q) < 1e-12);
      }
    }
  }
}

TEST_CASE("gpd_pdf integrates to one on its support", "[distributions][property]") {
  boost::math::quadrature::tanh_sinh<double> finite;
  boost::math::quadrature::exp_sinh<double> infinite;
  for (double sigma : {0.5, 2.0}) {
    for (double g : {-1.0, -0.9, -0.75, -0.6, -0.5, -0.4, -0.25, -0.1, -0.01, 0.0}) {
      const GpdParams p(g, sigma);
      auto pdf = [&](double x) { return gpd_pdf(p, x); };
      const double total =
          p.exponential_limit() ? infinite.integrate(pdf, 0.0, std::numeric_limits<double>::infinity())
                                : finite.integrate(pdf, 0.0, p.upper_endpoint());
      INFO("gamma=" << g << " sigma=" << sigma);
      CHECK(std::abs(total - 1.0) < 1e-8);
    }
  }
}

TEST_CASE("log gpd_pdf curvature matches the log rows of the shape table", "[distributions][property]") {
  auto second_differences = [](const GpdParams& p) {
    const double hi = std::isfinite(p.upper_endpoint()) ? p.upper_endpoint() : 10.0 * p.sigma;
    const int N = 400;
    const double h = hi / (N + 1);
    std::vector<double> d2;
    for (int i = 2; i < N; ++i) {
      const double x = i * h;
      d2.push_back(std::log(gpd_pdf(p, x + h)) - 2.0 * std::log(gpd_pdf(p, x)) + std::log(gpd_pdf(p, x - h)));
    }
    return d2;
  };
  for (double g : {-1.0, -0.875, -0.75, -0.5, -0.25, -0.125, 0.0}) {
    for (double v : second_differences({g, 1.0})) CHECK(v <= 1e-10);
  }
  for (double g : {-2.0, -1.5, 0.5, 1.0}) {
    for (double v : second_differences({g, 1.0})) CHECK(v >= -1e-10);
  }
}

TEST_CASE("gpd_pdf is continuous at gamma = 0", "[distributions][property]") {
  for (int i = 0; i <= 100; ++i) {
    const double x = 0.1 * i;
    CHECK(std::abs(gpd_pdf({1e-8, 1.0}, x) - gpd_pdf({0.0, 1.0}, x)) < 1e-6);
  }
}

TEST_CASE("gev_cdf values", "[distributions]") {
  CHECK(gev_cdf({0.0}, 0.0) == Approx(std::exp(-1.0)).epsilon(1e-15));
  CHECK(gev_cdf({1.0}, 0.0) == Approx(std::exp(-1.0)).epsilon(1e-15));
  CHECK(gev_cdf({-1.0}, 1.5) == 1.0);
  CHECK(gev_cdf({1.0}, -2.0) == 0.0);
  CHECK(gev_cdf({1e-13}, 0.7) == Approx(std::exp(-std::exp(-0.7))).epsilon(1e-14));
}

TEST_CASE("gpd_sample support, determinism and mean", "[distributions][sampling]") {
  RngState a(123);
  const auto unif = gpd_sample({-1.0, 1.0}, 1000, a);
  for (double x : unif) CHECK((x >= 0.0 && x <= 1.0));

  RngState r1(77), r2(77);
  CHECK(gpd_sample({-0.5, 1.0}, 500, r1) == gpd_sample({-0.5, 1.0}, 500, r2));

  RngState r3(2024);
  const std::size_t n = 100000;
  const auto xs = gpd_sample({-0.5, 1.0}, n, r3);
  // mean sigma/(1-gamma), variance sigma^2 / ((1-gamma)^2 (1-2 gamma))
  const double se = std::sqrt((1.0 / (2.25 * 2.0)) / n);
  CHECK(std::abs(mean_of(xs) - 2.0 / 3.0) < 3.0 * se);
  CHECK_THROWS_AS(gpd_sample({-0.5, 1.0}, 0, r3), InvalidArgument);
}

TEST_CASE("beta_sample moments and determinism", "[distributions][sampling]") {
  RngState rng(31337);
  const auto u = beta_sample({1.0, 1.0}, 10000, rng);
  CHECK(std::abs(mean_of(u) - 0.5) < 3.0 * std::sqrt(1.0 / 12.0 / 10000));
  for (double x : u) CHECK((x > 0.0 && x < 1.0));

  const auto b = beta_sample({0.5, 3.0}, 100000, rng);
  const double var = 0.5 * 3.0 / (3.5 * 3.5 * 4.5);
  CHECK(std::abs(mean_of(b) - 1.0 / 7.0) < 3.0 * std::sqrt(var / 100000));
  for (double x : b) CHECK((x > 0.0 && x < 1.0));

  RngState r1(5), r2(5);
  CHECK(beta_sample({0.5, 3.0}, 300, r1) == beta_sample({0.5, 3.0}, 300, r2));
}

TEST_CASE("gamma deviates have the right mean for all sampler branches", "[distributions][sampling]") {
  for (double shape : {0.3, 0.5, 1.0, 2.5, 10.0}) {
    RngState rng(derive_seed(9, static_cast<std::uint64_t>(shape * 10)));
    const int n = 50000;
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += rng.gamma(shape);
    INFO("shape=" << shape);
    CHECK(std::abs(s / n - shape) < 4.0 * std::sqrt(shape / n));
  }
}

TEST_CASE("rng uniforms stay inside the open unit interval", "[rng]") {
  RngState rng(0);
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.uniform();
    REQUIRE(u > 0.0);
    REQUIRE(u < 1.0);
  }
  CHECK(derive_seed(1, 0) != derive_seed(1, 1));
  CHECK(derive_seed(1, 0) != derive_seed(2, 0));
}

TEST_CASE("gpd_shape_class follows the shape table", "[distributions]") {
  CHECK(gpd_shape_class(-0.75) == ShapeClassSet{ShapeClass::ConcaveNonIncreasing, ShapeClass::LogConcave});
  CHECK(gpd_shape_class(0.5) == ShapeClassSet{ShapeClass::ConvexNonIncreasing, ShapeClass::LogConvex});
  CHECK(gpd_shape_class(-1.0) == ShapeClassSet{ShapeClass::ConvexNonDecreasing, ShapeClass::ConcaveNonIncreasing,
                                               ShapeClass::LogConcave, ShapeClass::LogConvex});
  CHECK(gpd_shape_class(-0.5) == ShapeClassSet{ShapeClass::ConcaveNonIncreasing, ShapeClass::ConvexNonIncreasing,
                                               ShapeClass::LogConcave});
  CHECK(gpd_shape_class(0.0) == ShapeClassSet{ShapeClass::ConvexNonIncreasing, ShapeClass::LogConcave,
                                              ShapeClass::LogConvex});
  CHECK(gpd_shape_class(-3.0) == ShapeClassSet{ShapeClass::ConvexNonDecreasing, ShapeClass::LogConvex});
}

TEST_CASE("beta_tail_index", "[distributions]") {
  CHECK(beta_tail_index({0.5, 1.0}) == -1.0);
  CHECK(beta_tail_index({0.5, 3.0}) == Approx(-1.0 / 3.0));
  CHECK(beta_tail_index({0.5, 10.0}) == Approx(-0.1));
}
