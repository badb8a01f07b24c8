#include "mspline/simulate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <numbers>
#include <thread>

#include "mspline/error.hpp"
#include "mspline/quadrature.hpp"
#include "mspline/scale.hpp"

namespace mspline {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

[[noreturn]] void config_error(const std::string& msg) { throw Error(ErrorCode::Config, msg); }

double trig_derivative(bool is_cos, double w, double t, int j) {
  const double phase = w * t + j * std::numbers::pi / 2.0;
  return std::pow(w, j) * (is_cos ? std::cos(phase) : std::sin(phase));
}

// d^j/dt^j exp(-a u^2), u = t - 1/2, via physicists' Hermite polynomials.
double bump_derivative(double a, double u, int j) {
  const double x = std::sqrt(a) * u;
  double h_prev = 1.0, h = 2.0 * x;
  double hj = 1.0;
  if (j == 1) hj = h;
  for (int k = 1; k < j; ++k) {
    const double next = 2.0 * x * h - 2.0 * k * h_prev;
    h_prev = h;
    h = next;
    hj = h;
  }
  return (j % 2 == 0 ? 1.0 : -1.0) * std::pow(a, 0.5 * j) * hj * std::exp(-a * u * u);
}

double logistic_derivative(double t, int j) {
  const double s = 1.0 / (1.0 + std::exp(-20.0 * (t - 0.5)));
  const double d1 = 20.0 * s * (1.0 - s);
  switch (j) {
    case 0: return s;
    case 1: return d1;
    case 2: return 20.0 * d1 * (1.0 - 2.0 * s);
    case 3: {
      const double d2 = 20.0 * d1 * (1.0 - 2.0 * s);
      return 20.0 * (d2 * (1.0 - 2.0 * s) - 2.0 * d1 * d1);
    }
    default: break;
  }
  throw Error(ErrorCode::InvalidArgument, "f2 derivatives are available up to order 3");
}

double truth(const ScenarioConfig& c, double t, int j) {
  if (c.function == FunctionId::Custom) return c.custom(t, j);
  return test_function(c.function, t, j, c.m);
}

std::vector<double> design_points(std::size_t n) {
  std::vector<double> t(n);
  for (std::size_t i = 0; i < n; ++i) t[i] = static_cast<double>(i + 1) / static_cast<double>(n);
  return t;
}

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double median_copy(std::vector<double> v) { return median(v); }

// Fitted values at the design points for one estimator.
std::vector<double> estimate(Estimator e, const PenalizedProblem& pb, const ScenarioConfig& c) {
  FitOptions opt;
  opt.m = c.m;
  LossSpec spec = LossSpec::least_squares();
  switch (e) {
    case Estimator::HPS:
      spec = LossSpec::huber(c.huber_k);
      opt.scale = {ScaleMode::Rice, 1.0};
      break;
    case Estimator::HPR:
      spec = LossSpec::huber(c.huber_k);
      opt.scale = {ScaleMode::TauRefit, 1.0};
      break;
    case Estimator::LAD:
      spec = LossSpec::smoothed_abs(c.lad_eps_factor * rice_scale(pb.data.y()).value);
      opt.scale = {ScaleMode::Fixed, 1.0};
      break;
    case Estimator::LS:
      opt.scale = {ScaleMode::Fixed, 1.0};
      break;
  }
  SplineFit fit;
  if (c.lambda_mode == LambdaMode::Gcv) {
    fit = select_lambda(pb, spec, opt, c.search).fit;
  } else {
    const double lambda = c.schedule_a * std::pow(static_cast<double>(pb.data.size()), -c.schedule_gamma);
    fit = fit_spline(pb, spec, lambda, opt);
  }
  std::vector<double> out(pb.data.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = pb.data.y()[i] - fit.residuals[i];
  return out;
}

CellResult aggregate(const ScenarioConfig& c, Estimator e, const std::vector<double>& mse) {
  CellResult cell;
  cell.function = c.function;
  cell.error = c.error;
  cell.estimator = e;
  cell.n = c.n;
  cell.replications = mse.size();
  std::vector<double> ok;
  for (double v : mse) {
    if (std::isfinite(v)) ok.push_back(v);
  }
  cell.failures = mse.size() - ok.size();
  if (ok.empty()) {
    cell.mean_mse = cell.se_mse = cell.median_mse = cell.max_mse =
        std::numeric_limits<double>::quiet_NaN();
    return cell;
  }
  cell.mean_mse = mean_of(ok);
  double ss = 0.0;
  for (double v : ok) ss += (v - cell.mean_mse) * (v - cell.mean_mse);
  const double k = static_cast<double>(ok.size());
  cell.se_mse = ok.size() > 1 ? std::sqrt(ss / (k - 1.0)) / std::sqrt(k) : 0.0;
  cell.median_mse = median_copy(ok);
  cell.max_mse = *std::max_element(ok.begin(), ok.end());
  return cell;
}

// Gauss nodes and weights over [0, 1] split at the design points.
struct Quadrature {
  std::vector<double> x;
  std::vector<double> w;
};

Quadrature panel_rule(const std::vector<double>& t, std::size_t per_panel) {
  const GaussRule rule = gauss_legendre(per_panel);
  std::vector<double> cuts;
  if (t.front() > 0.0) cuts.push_back(0.0);
  cuts.insert(cuts.end(), t.begin(), t.end());
  if (t.back() < 1.0) cuts.push_back(1.0);
  Quadrature q;
  for (std::size_t p = 0; p + 1 < cuts.size(); ++p) {
    const double half = 0.5 * (cuts[p + 1] - cuts[p]), mid = 0.5 * (cuts[p] + cuts[p + 1]);
    for (std::size_t k = 0; k < rule.nodes.size(); ++k) {
      q.x.push_back(mid + half * rule.nodes[k]);
      q.w.push_back(half * rule.weights[k]);
    }
  }
  return q;
}

}  // namespace

std::string to_string(FunctionId id) {
  switch (id) {
    case FunctionId::F1: return "f1";
    case FunctionId::F2: return "f2";
    case FunctionId::F3: return "f3";
    case FunctionId::PolyNull: return "poly_null";
    case FunctionId::Custom: return "custom";
  }
  return "unknown";
}

std::string to_string(ErrorDist d) {
  switch (d) {
    case ErrorDist::Gaussian: return "gaussian";
    case ErrorDist::T3: return "t3";
    case ErrorDist::Mixture: return "mixture";
    case ErrorDist::Slash: return "slash";
  }
  return "unknown";
}

std::string to_string(Estimator e) {
  switch (e) {
    case Estimator::HPS: return "HPS";
    case Estimator::HPR: return "HPR";
    case Estimator::LAD: return "LAD";
    case Estimator::LS: return "LS";
  }
  return "unknown";
}

FunctionId function_from_string(const std::string& s) {
  for (auto id : {FunctionId::F1, FunctionId::F2, FunctionId::F3, FunctionId::PolyNull}) {
    if (s == to_string(id)) return id;
  }
  config_error("unknown function '" + s + "' (expected f1, f2, f3 or poly_null)");
}

ErrorDist error_dist_from_string(const std::string& s) {
  for (auto d : {ErrorDist::Gaussian, ErrorDist::T3, ErrorDist::Mixture, ErrorDist::Slash}) {
    if (s == to_string(d)) return d;
  }
  config_error("unknown error distribution '" + s + "' (expected gaussian, t3, mixture or slash)");
}

Estimator estimator_from_string(const std::string& s) {
  for (auto e : {Estimator::HPS, Estimator::HPR, Estimator::LAD, Estimator::LS}) {
    if (s == to_string(e)) return e;
  }
  config_error("unknown estimator '" + s + "' (expected HPS, HPR, LAD or LS)");
}

double test_function(FunctionId id, double t, int j, int m) {
  if (!(t >= 0.0 && t <= 1.0)) throw Error(ErrorCode::InvalidArgument, "t must lie in [0, 1]");
  if (j < 0) throw Error(ErrorCode::InvalidArgument, "derivative order must be >= 0");
  switch (id) {
    case FunctionId::F1:
      return trig_derivative(true, kTwoPi, t, j);
    case FunctionId::F2:
      return logistic_derivative(t, j);
    case FunctionId::F3:
      return trig_derivative(false, kTwoPi, t, j) + bump_derivative(3.0, t - 0.5, j);
    case FunctionId::PolyNull: {
      double v = 0.0;
      for (int k = j; k < m; ++k) {
        double c = k + 1.0;
        for (int q = 0; q < j; ++q) c *= k - q;
        v += c * std::pow(t, k - j);
      }
      return v;
    }
    case FunctionId::Custom:
      break;
  }
  throw Error(ErrorCode::InvalidArgument, "no built-in definition for this function id");
}

std::vector<double> gen_errors(ErrorDist dist, std::size_t n, std::mt19937_64& rng) {
  std::vector<double> e(n);
  std::normal_distribution<double> gauss;
  switch (dist) {
    case ErrorDist::Gaussian:
      for (double& v : e) v = gauss(rng);
      break;
    case ErrorDist::T3: {
      std::student_t_distribution<double> st(3.0);
      for (double& v : e) v = st(rng);
      break;
    }
    case ErrorDist::Mixture: {
      std::uniform_real_distribution<double> u;
      for (double& v : e) {
        const bool wide = u(rng) < 0.15;
        v = (wide ? 9.0 : 1.0) * gauss(rng);
      }
      break;
    }
    case ErrorDist::Slash: {
      std::uniform_real_distribution<double> u;
      for (double& v : e) {
        const double z = gauss(rng);
        v = z / (1.0 - u(rng));  // divisor in (0, 1]
      }
      break;
    }
  }
  return e;
}

std::mt19937_64 replication_engine(std::uint64_t seed, std::uint64_t a, std::uint64_t b,
                                   std::uint64_t rep) {
  auto lo = [](std::uint64_t v) { return static_cast<std::uint32_t>(v & 0xffffffffu); };
  auto hi = [](std::uint64_t v) { return static_cast<std::uint32_t>(v >> 32); };
  std::seed_seq seq{lo(seed), hi(seed), lo(a), hi(a), lo(b), hi(b), lo(rep), hi(rep)};
  return std::mt19937_64(seq);
}

void parallel_for(std::size_t count, unsigned threads,
                  const std::function<void(std::size_t)>& body) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(count, 1)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= count) return;
      try {
        body(i);
      } catch (...) {
        const std::lock_guard lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        next.store(count);
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (unsigned k = 0; k < threads; ++k) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

void ScenarioConfig::validate() const {
  if (n < 10) config_error("n must be >= 10");
  if (replications < 1) config_error("replications must be >= 1");
  if (estimators.empty()) config_error("at least one estimator is required");
  if (m < 1) config_error("m must be >= 1");
  if (!(huber_k > 0.0)) config_error("huber k must be positive");
  if (!(lad_eps_factor > 0.0)) config_error("lad eps factor must be positive");
  if (function == FunctionId::Custom && !custom) config_error("custom function not provided");
  if (lambda_mode == LambdaMode::Schedule && (!(schedule_a > 0.0) || !(schedule_gamma > 0.0))) {
    config_error("lambda schedule needs a > 0 and gamma > 0");
  }
  try {
    search.validate();
  } catch (const Error& e) {
    config_error(e.what());
  }
}

SimulationReport run_monte_carlo(const ScenarioConfig& c) {
  c.validate();
  const auto t = design_points(c.n);
  std::vector<double> f(c.n);
  for (std::size_t i = 0; i < c.n; ++i) f[i] = truth(c, t[i], 0);

  const std::size_t ne = c.estimators.size();
  // mse[e][r]; NaN marks a failed replication.
  std::vector<std::vector<double>> mse(ne, std::vector<double>(c.replications));
  parallel_for(c.replications, c.threads, [&](std::size_t r) {
    auto rng = replication_engine(c.seed, static_cast<std::uint64_t>(c.function),
                                  static_cast<std::uint64_t>(c.error), r);
    const auto eps = gen_errors(c.error, c.n, rng);
    std::vector<double> y(c.n);
    for (std::size_t i = 0; i < c.n; ++i) y[i] = f[i] + eps[i];
    const PenalizedProblem pb(DesignData(t, y), c.m);
    for (std::size_t k = 0; k < ne; ++k) {
      try {
        const auto fhat = estimate(c.estimators[k], pb, c);
        double s = 0.0;
        for (std::size_t i = 0; i < c.n; ++i) s += (fhat[i] - f[i]) * (fhat[i] - f[i]);
        mse[k][r] = s / static_cast<double>(c.n);
      } catch (const Error&) {
        mse[k][r] = std::numeric_limits<double>::quiet_NaN();
      }
    }
  });

  SimulationReport report;
  for (std::size_t k = 0; k < ne; ++k) report.cells.push_back(aggregate(c, c.estimators[k], mse[k]));
  return report;
}

SimulationReport run_table(const ScenarioConfig& base, const std::vector<FunctionId>& functions,
                           const std::vector<ErrorDist>& errors) {
  SimulationReport out;
  for (FunctionId fid : functions) {
    for (ErrorDist d : errors) {
      ScenarioConfig c = base;
      c.function = fid;
      c.error = d;
      const auto r = run_monte_carlo(c);
      out.cells.insert(out.cells.end(), r.cells.begin(), r.cells.end());
    }
  }
  return out;
}

void RateConfig::validate() const {
  if (n_grid.size() < 4) config_error("n_grid needs at least 4 sample sizes");
  for (std::size_t i = 0; i < n_grid.size(); ++i) {
    if (n_grid[i] < 10) config_error("every n in n_grid must be >= 10");
    if (i > 0 && n_grid[i] <= n_grid[i - 1]) config_error("n_grid must be increasing");
  }
  if (!(gamma > 0.0 && gamma < 1.0)) config_error("gamma must lie in (0, 1)");
  if (replications < 1) config_error("replications must be >= 1");
  if (!a && calibration_replications < 1) config_error("calibration_replications must be >= 1");
  if (a && !(*a > 0.0)) config_error("a must be positive");
  if (!(sigma > 0.0)) config_error("sigma must be positive");
  if (m < 1) config_error("m must be >= 1");
  if (function == FunctionId::Custom) config_error("rate studies need a built-in function");
  try {
    search.validate();
  } catch (const Error& e) {
    config_error(e.what());
  }
}

Slope log_log_slope(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 3) {
    throw Error(ErrorCode::InvalidArgument, "slope needs at least 3 matched points");
  }
  const std::size_t k = x.size();
  std::vector<double> lx(k), ly(k);
  for (std::size_t i = 0; i < k; ++i) {
    lx[i] = std::log(x[i]);
    ly[i] = std::log(y[i]);
  }
  const double mx = mean_of(lx), my = mean_of(ly);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  Slope s;
  s.value = sxy / sxx;
  double rss = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const double e = ly[i] - my - s.value * (lx[i] - mx);
    rss += e * e;
  }
  s.se = std::sqrt(rss / static_cast<double>(k - 2) / sxx);
  return s;
}

RateReport rate_study(const RateConfig& c) {
  c.validate();
  FitOptions opt;
  opt.m = c.m;
  opt.scale = {ScaleMode::Fixed, c.sigma};
  const auto dist_code = static_cast<std::uint64_t>(c.error);

  auto sample = [&](std::size_t n, std::size_t r) {
    auto rng = replication_engine(c.seed, n, dist_code, r);
    const auto t = design_points(n);
    const auto eps = gen_errors(c.error, n, rng);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = test_function(c.function, t[i], 0, c.m) + eps[i];
    return PenalizedProblem(DesignData(t, y), c.m);
  };

  RateReport rep;
  rep.n_grid = c.n_grid;
  rep.gamma = c.gamma;
  rep.m = c.m;
  const double n0 = static_cast<double>(c.n_grid.front());
  if (c.a) {
    rep.a = *c.a;
  } else {
    std::vector<double> logs(c.calibration_replications, std::numeric_limits<double>::quiet_NaN());
    parallel_for(logs.size(), c.threads, [&](std::size_t r) {
      try {
        logs[r] = std::log(select_lambda(sample(c.n_grid.front(), r), c.loss, opt, c.search).lambda_opt);
      } catch (const Error&) {
      }
    });
    std::erase_if(logs, [](double v) { return !std::isfinite(v); });
    if (logs.empty()) throw Error(ErrorCode::SelectionFailed, "lambda calibration failed");
    rep.a = std::exp(median(logs)) * std::pow(n0, c.gamma);
  }

  const int jmax = c.m;
  rep.median_deriv.assign(static_cast<std::size_t>(jmax), {});
  for (std::size_t n : c.n_grid) {
    const double lambda = rep.a * std::pow(static_cast<double>(n), -c.gamma);
    rep.lambdas.push_back(lambda);
    const Quadrature quad = panel_rule(design_points(n), 6);
    std::vector<std::vector<double>> f_true(static_cast<std::size_t>(jmax) + 1);
    for (int j = 0; j <= jmax; ++j) {
      for (double x : quad.x) f_true[static_cast<std::size_t>(j)].push_back(test_function(c.function, x, j, c.m));
    }
    // err[j][r] = ||f_hat^{(j)} - f^{(j)}||_2^2, NaN for failed replications.
    std::vector<std::vector<double>> err(static_cast<std::size_t>(jmax) + 1,
                                         std::vector<double>(c.replications));
    parallel_for(c.replications, c.threads, [&](std::size_t r) {
      try {
        const SplineFit fit = fit_spline(sample(n, r), c.loss, lambda, opt);
        for (int j = 0; j <= jmax; ++j) {
          const auto fj = predict(fit, quad.x, j);
          const auto& tj = f_true[static_cast<std::size_t>(j)];
          double s = 0.0;
          for (std::size_t q = 0; q < fj.size(); ++q) s += quad.w[q] * (fj[q] - tj[q]) * (fj[q] - tj[q]);
          err[static_cast<std::size_t>(j)][r] = s;
        }
      } catch (const Error&) {
        for (auto& e : err) e[r] = std::numeric_limits<double>::quiet_NaN();
      }
    });
    std::vector<double> sob;
    std::vector<std::vector<double>> ok(err.size());
    for (std::size_t r = 0; r < c.replications; ++r) {
      if (!std::isfinite(err[0][r])) continue;
      for (std::size_t j = 0; j < err.size(); ++j) ok[j].push_back(err[j][r]);
      sob.push_back(err[0][r] + lambda * err[static_cast<std::size_t>(jmax)][r]);
    }
    rep.failures.push_back(c.replications - sob.size());
    if (sob.empty()) throw Error(ErrorCode::IllPosed, "every fit failed at n = " + std::to_string(n));
    rep.median_l2.push_back(median(ok[0]));
    rep.median_sobolev.push_back(median(sob));
    for (int j = 1; j <= jmax; ++j) {
      rep.median_deriv[static_cast<std::size_t>(j - 1)].push_back(median(ok[static_cast<std::size_t>(j)]));
    }
  }

  std::vector<double> ns(c.n_grid.begin(), c.n_grid.end());
  rep.slope_l2 = log_log_slope(ns, rep.median_l2);
  rep.slope_sobolev = log_log_slope(ns, rep.median_sobolev);
  for (const auto& d : rep.median_deriv) rep.slope_deriv.push_back(log_log_slope(ns, d));
  return rep;
}

}  // namespace mspline
