#pragma once

// Monte-Carlo harness: MSE comparisons of the robust and
// least-squares estimators, and empirical convergence-rate studies under a
// fixed lambda schedule.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "mspline/fit.hpp"
#include "mspline/loss.hpp"
#include "mspline/select.hpp"

namespace mspline {

enum class FunctionId { F1, F2, F3, PolyNull, Custom };
enum class ErrorDist { Gaussian, T3, Mixture, Slash };
enum class Estimator { HPS, HPR, LAD, LS };
enum class LambdaMode { Gcv, Schedule };

std::string to_string(FunctionId id);
std::string to_string(ErrorDist d);
std::string to_string(Estimator e);
/// Inverse of to_string; throws Error(Config) on unknown names.
FunctionId function_from_string(const std::string& s);
ErrorDist error_dist_from_string(const std::string& s);
Estimator estimator_from_string(const std::string& s);

/// j-th derivative of a built-in test function at t in [0, 1].
///   f1 = cos(2 pi t), f2 = 1 / (1 + exp(-20 (t - 1/2))),
///   f3 = sin(2 pi t) + exp(-3 (t - 1/2)^2), poly_null = sum_{k<m} (k + 1) t^k.
/// f2 supports j <= 3. Throws Error(InvalidArgument) for Custom or bad input.
double test_function(FunctionId id, double t, int j = 0, int m = 2);

/// n i.i.d. draws. Mixture = 0.85 N(0, 1) + 0.15 N(0, 81); Slash = N(0, 1) / U(0, 1).
std::vector<double> gen_errors(ErrorDist dist, std::size_t n, std::mt19937_64& rng);

/// Engine for replication `rep` of cell (a, b); independent of scheduling.
std::mt19937_64 replication_engine(std::uint64_t seed, std::uint64_t a, std::uint64_t b,
                                   std::uint64_t rep);

/// Runs body(i) for i in [0, count) on up to `threads` workers (0 = hardware
/// concurrency). The first exception thrown by a body is rethrown.
void parallel_for(std::size_t count, unsigned threads, const std::function<void(std::size_t)>& body);

struct ScenarioConfig {
  FunctionId function = FunctionId::F1;
  /// Used when function == Custom: value of the j-th derivative at t.
  std::function<double(double, int)> custom;
  ErrorDist error = ErrorDist::Gaussian;
  std::size_t n = 60;
  std::size_t replications = 200;
  std::vector<Estimator> estimators{Estimator::HPS, Estimator::HPR, Estimator::LAD, Estimator::LS};
  std::uint64_t seed = 1;
  LambdaMode lambda_mode = LambdaMode::Gcv;
  double schedule_a = 1.0;      ///< lambda = a * n^{-gamma} in Schedule mode
  double schedule_gamma = 0.8;
  int m = 2;
  double huber_k = 1.345;
  double lad_eps_factor = 1e-4;  ///< LAD corner width relative to the Rice scale of y
  unsigned threads = 0;
  SearchOptions search{};

  /// Throws Error(Config) on an invalid configuration.
  void validate() const;
};

struct CellResult {
  FunctionId function = FunctionId::F1;
  ErrorDist error = ErrorDist::Gaussian;
  Estimator estimator = Estimator::HPS;
  std::size_t n = 0;
  std::size_t replications = 0;  ///< requested
  std::size_t failures = 0;      ///< replications whose fit or selection threw
  double mean_mse = 0.0;         ///< over successful replications
  double se_mse = 0.0;           ///< sample standard deviation / sqrt(successes)
  double median_mse = 0.0;
  double max_mse = 0.0;
};

struct SimulationReport {
  std::vector<CellResult> cells;
};

/// One cell per requested estimator; all estimators see the same samples.
SimulationReport run_monte_carlo(const ScenarioConfig& config);

/// Runs run_monte_carlo for every (function, error) pair with the remaining
/// fields taken from `base`, cells ordered function-major.
SimulationReport run_table(const ScenarioConfig& base, const std::vector<FunctionId>& functions,
                           const std::vector<ErrorDist>& errors);

struct RateConfig {
  FunctionId function = FunctionId::F1;
  ErrorDist error = ErrorDist::Gaussian;
  LossSpec loss = LossSpec::least_squares();
  double sigma = 1.0;  ///< fixed scale of the loss
  int m = 2;
  std::vector<std::size_t> n_grid{64, 128, 256, 512, 1024};
  double gamma = 0.8;
  /// Schedule constant; calibrated by GCV at the smallest n when absent.
  std::optional<double> a;
  std::size_t replications = 50;
  std::size_t calibration_replications = 10;
  std::uint64_t seed = 1;
  unsigned threads = 0;
  SearchOptions search{};

  void validate() const;
};

struct Slope {
  double value = 0.0;
  double se = 0.0;
};

struct RateReport {
  std::vector<std::size_t> n_grid;
  std::vector<double> lambdas;
  double a = 0.0;
  double gamma = 0.0;
  int m = 2;
  std::vector<std::size_t> failures;     ///< per n
  std::vector<double> median_l2;         ///< median ||f_hat - f||_2^2 per n
  std::vector<double> median_sobolev;    ///< median ||f_hat - f||_{m,lambda}^2 per n
  std::vector<std::vector<double>> median_deriv;  ///< [j - 1][n] for j = 1..m
  Slope slope_l2;
  Slope slope_sobolev;
  std::vector<Slope> slope_deriv;  ///< j = 1..m
};

RateReport rate_study(const RateConfig& config);

/// Ordinary least-squares slope of log(y) on log(x) with its standard error.
Slope log_log_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace mspline
