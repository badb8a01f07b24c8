#include "doctest.h"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "mspline/error.hpp"
#include "mspline/scale.hpp"
#include "mspline/simulate.hpp"

using namespace mspline;

namespace {

double sample_variance(const std::vector<double>& v) {
  double m = 0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_CASE("test functions") {
  CHECK(test_function(FunctionId::F1, 0.0) == 1.0);
  CHECK(test_function(FunctionId::F2, 0.5) == 0.5);
  CHECK(test_function(FunctionId::F3, 0.5) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(test_function(FunctionId::PolyNull, 0.5, 0, 2) == doctest::Approx(2.0));
  CHECK(test_function(FunctionId::PolyNull, 0.5, 2, 2) == 0.0);
  CHECK_THROWS_AS(test_function(FunctionId::F1, 1.5), Error);
  CHECK_THROWS_AS(test_function(FunctionId::Custom, 0.5), Error);
  CHECK_THROWS_AS(test_function(FunctionId::F2, 0.5, 4), Error);

  const double h = 1e-5;
  for (auto id : {FunctionId::F1, FunctionId::F2, FunctionId::F3, FunctionId::PolyNull}) {
    for (int j = 1; j <= 3; ++j) {
      for (double t : {0.1, 0.37, 0.5, 0.81}) {
        const double fd = (test_function(id, t + h, j - 1, 3) - test_function(id, t - h, j - 1, 3)) / (2 * h);
        const double d = test_function(id, t, j, 3);
        CAPTURE(to_string(id));
        CAPTURE(j);
        CHECK(std::abs(d - fd) <= 1e-5 * (1 + std::abs(d)));
      }
    }
  }
}

TEST_CASE("error laws") {
  std::mt19937_64 rng(123);
  const std::size_t n = 1000000;
  SUBCASE("gaussian variance") {
    const double v = sample_variance(gen_errors(ErrorDist::Gaussian, n, rng));
    CHECK(v >= 0.99);
    CHECK(v <= 1.01);
  }
  SUBCASE("mixture variance") {
    const double v = sample_variance(gen_errors(ErrorDist::Mixture, n, rng));
    CHECK(v >= 12.75);
    CHECK(v <= 13.27);
  }
  SUBCASE("t3 median absolute value") {
    auto e = gen_errors(ErrorDist::T3, n, rng);
    for (double& x : e) x = std::abs(x);
    const double med = median(e);
    CHECK(med >= 0.74);
    CHECK(med <= 0.78);
  }
  SUBCASE("slash is heavy tailed and centered") {
    auto e = gen_errors(ErrorDist::Slash, n, rng);
    CHECK(std::abs(median(e)) < 0.01);
    double mx = 0;
    for (double x : e) mx = std::max(mx, std::abs(x));
    CHECK(mx > 1e4);
  }
}

TEST_CASE("configuration validation") {
  ScenarioConfig c;
  c.replications = 0;
  CHECK(code_of([&] { run_monte_carlo(c); }) == ErrorCode::Config);
  c.replications = 2;
  c.n = 5;
  CHECK(code_of([&] { run_monte_carlo(c); }) == ErrorCode::Config);
  c.n = 30;
  c.estimators.clear();
  CHECK(code_of([&] { run_monte_carlo(c); }) == ErrorCode::Config);

  RateConfig r;
  r.n_grid = {64, 128, 256};
  CHECK(code_of([&] { rate_study(r); }) == ErrorCode::Config);
  r.n_grid = {64, 32, 256, 512};
  CHECK(code_of([&] { rate_study(r); }) == ErrorCode::Config);
  r.n_grid = {64, 128, 256, 512};
  r.gamma = 1.0;
  CHECK(code_of([&] { rate_study(r); }) == ErrorCode::Config);

  CHECK(function_from_string("f3") == FunctionId::F3);
  CHECK(error_dist_from_string("slash") == ErrorDist::Slash);
  CHECK(estimator_from_string("HPR") == Estimator::HPR);
  CHECK(code_of([] { function_from_string("f9"); }) == ErrorCode::Config);
}

TEST_CASE("monte carlo is reproducible for any number of threads") {
  ScenarioConfig c;
  c.n = 30;
  c.replications = 6;
  c.error = ErrorDist::T3;
  c.seed = 99;
  c.threads = 1;
  const auto a = run_monte_carlo(c);
  c.threads = 3;
  const auto b = run_monte_carlo(c);
  REQUIRE(a.cells.size() == 4);
  REQUIRE(b.cells.size() == 4);
  for (std::size_t k = 0; k < 4; ++k) {
    CHECK(a.cells[k].mean_mse == b.cells[k].mean_mse);
    CHECK(a.cells[k].se_mse == b.cells[k].se_mse);
    CHECK(a.cells[k].max_mse == b.cells[k].max_mse);
    CHECK(a.cells[k].failures == 0);
  }
  c.seed = 100;
  CHECK(run_monte_carlo(c).cells[0].mean_mse != a.cells[0].mean_mse);
}

TEST_CASE("estimators see common samples and table cells match single runs") {
  ScenarioConfig c;
  c.n = 20;
  c.replications = 3;
  c.estimators = {Estimator::LS};
  const auto table = run_table(c, {FunctionId::F1, FunctionId::F2}, {ErrorDist::Gaussian, ErrorDist::Slash});
  REQUIRE(table.cells.size() == 4);
  c.function = FunctionId::F2;
  c.error = ErrorDist::Slash;
  CHECK(run_monte_carlo(c).cells[0].mean_mse == table.cells[3].mean_mse);
  c.estimators = {Estimator::HPS, Estimator::LS};
  CHECK(run_monte_carlo(c).cells[1].mean_mse == table.cells[3].mean_mse);
}

TEST_CASE("custom truth and fixed schedule") {
  ScenarioConfig c;
  c.function = FunctionId::Custom;
  c.custom = [](double t, int j) { return j == 0 ? 2.0 * t : (j == 1 ? 2.0 : 0.0); };
  c.n = 40;
  c.replications = 4;
  c.lambda_mode = LambdaMode::Schedule;
  c.schedule_a = 1e3;
  c.estimators = {Estimator::LS, Estimator::HPS};
  const auto r = run_monte_carlo(c);
  for (const auto& cell : r.cells) {
    CHECK(cell.failures == 0);
    CHECK(cell.mean_mse < 0.2);
  }
  c.custom = nullptr;
  CHECK(code_of([&] { run_monte_carlo(c); }) == ErrorCode::Config);
}

TEST_CASE("log-log slope") {
  const std::vector<double> x{64, 128, 256, 512, 1024};
  std::vector<double> exact;
  for (double v : x) exact.push_back(3.0 * std::pow(v, -0.8));
  const Slope s = log_log_slope(x, exact);
  CHECK(s.value == doctest::Approx(-0.8).epsilon(1e-12));
  CHECK(s.se < 1e-12);
  // Five points checked by hand: OLS on logs.
  const Slope t = log_log_slope(x, {0.05, 0.031, 0.017, 0.0102, 0.0049});
  CHECK(t.value == doctest::Approx(-0.8305847944396502).epsilon(1e-12));
  CHECK(t.se == doctest::Approx(0.03488999425985848).epsilon(1e-10));
}

TEST_CASE("small rate study") {
  RateConfig c;
  c.n_grid = {32, 64, 128, 256};
  c.replications = 4;
  c.a = 1e-3;
  c.threads = 2;
  const auto a = rate_study(c);
  c.threads = 1;
  const auto b = rate_study(c);
  CHECK(a.median_l2 == b.median_l2);
  CHECK(a.lambdas[0] == doctest::Approx(1e-3 * std::pow(32.0, -0.8)));
  REQUIRE(a.median_deriv.size() == 2);
  REQUIRE(a.slope_deriv.size() == 2);
  CHECK(a.slope_l2.value < 0.0);
  for (std::size_t f : a.failures) CHECK(f == 0);

  RateConfig cal = c;
  cal.a.reset();
  cal.calibration_replications = 2;
  const auto r = rate_study(cal);
  CHECK(r.a > 0.0);
}

TEST_CASE("parallel_for rethrows") {
  CHECK_THROWS_AS(parallel_for(10, 3,
                               [](std::size_t i) {
                                 if (i == 7) throw std::runtime_error("boom");
                               }),
                  std::runtime_error);
  std::vector<int> hits(50, 0);
  parallel_for(50, 4, [&](std::size_t i) { hits[i] += 1; });
  for (int h : hits) CHECK(h == 1);
}
