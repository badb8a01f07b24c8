// Acceptance checks: one PASS/FAIL line per criterion. Exit status is nonzero
// when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "mspline/cli.hpp"
#include "oracle.hpp"

using namespace mspline;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail += (detail.empty() ? "" : "; ") + std::string("FAILED ") + what;
    }
  }
  void note(const std::string& s) { detail += (detail.empty() ? "" : "; ") + s; }
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

Eigen::MatrixXd dense(const SymBandMatrix& a) {
  const auto n = static_cast<Eigen::Index>(a.size());
  Eigen::MatrixXd d(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      d(i, j) = a(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
  return d;
}

std::vector<double> random_design(std::mt19937_64& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<double> t(n);
  for (;;) {
    for (double& v : t) v = u(rng);
    std::sort(t.begin(), t.end());
    bool ok = true;
    for (std::size_t i = 1; i < n; ++i) ok = ok && (t[i] - t[i - 1] > 0.2 / static_cast<double>(n));
    if (ok) return t;
  }
}

DesignData sine_data(std::size_t n, std::uint64_t seed, double noise, bool heavy) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::student_t_distribution<double> st(3.0);
  std::vector<double> t(n), y(n);
  for (std::size_t i = 0; i < n; ++i) {
    t[i] = static_cast<double>(i + 1) / static_cast<double>(n);
    y[i] = std::sin(2 * std::numbers::pi * t[i]) + noise * (heavy ? st(rng) : g(rng));
  }
  return {t, y};
}

Outcome oracle_equivalence() {
  Outcome out;
  const std::size_t n = 12;
  DesignData data = sine_data(n, 31, 0.5, true);
  std::vector<double> y(data.y().begin(), data.y().end());
  y[4] += 6.0;  // pushes one residual onto the linear part of the loss
  const std::vector<double> t(data.t().begin(), data.t().end());
  data = DesignData(t, y);
  const double k = 1.345, sigma = 1.0, lambda = 0.01;
  const PenalizedProblem pb(data, 2);
  const auto& b = *pb.basis;

  const Eigen::MatrixXd bm = oracle::dense_basis(b.knots, b.order(), 0, t);
  const Eigen::MatrixXd om = oracle::gram_quadrature(b.knots, b.order(), b.m);
  const Eigen::VectorXd ye = Eigen::Map<const Eigen::VectorXd>(y.data(), static_cast<Eigen::Index>(n));
  auto psi_h = [&](double u) { return std::abs(u) <= k ? 2 * u : 2 * k * (u > 0 ? 1 : -1); };
  auto grad = [&](const Eigen::VectorXd& c) {
    const Eigen::VectorXd r = (ye - bm * c) / sigma;
    Eigen::VectorXd p(r.size());
    for (Eigen::Index i = 0; i < r.size(); ++i) p(i) = psi_h(r(i));
    return Eigen::VectorXd(-bm.transpose() * p / (sigma * static_cast<double>(n)) + 2 * lambda * om * c);
  };
  const double lip = 2.0 / (sigma * sigma * static_cast<double>(n)) * (bm.transpose() * bm).eval().operatorNorm() +
                     2 * lambda * om.operatorNorm();
  const auto ref = oracle::accelerated_gradient(grad, Eigen::VectorXd::Zero(bm.cols()), lip, 1e-12, 5000000);
  out.require(ref.grad_norm <= 1e-10, "oracle gradient norm " + fmt("%.2e", ref.grad_norm));

  FitOptions opt;
  opt.tol = 1e-12;
  const auto t0 = Clock::now();
  const auto fit = fit_with_scale(pb, LossSpec::huber(k), lambda, {sigma, ScaleMethod::Fixed}, opt);
  const double secs = seconds_since(t0);
  double linf = 0;
  for (std::size_t i = 0; i < fit.coef.size(); ++i) {
    linf = std::max(linf, std::abs(fit.coef[i] - ref.x(static_cast<Eigen::Index>(i))));
  }
  std::size_t clipped = 0;
  for (double w : fit.weights) clipped += w < 1.0 ? 1 : 0;
  out.require(fit.converged, "IRLS converged");
  out.require(clipped >= 1, "at least one residual beyond k");
  out.require(linf <= 1e-6, "coefficient l-inf <= 1e-6");
  out.require(secs < 1.0, "runtime < 1 s");
  out.note("coef l-inf " + fmt("%.2e", linf) + ", oracle |grad| " + fmt("%.1e", ref.grad_norm) +
           ", residuals beyond k " + std::to_string(clipped) + ", IRLS " + fmt("%.4f", secs) + " s");
  return out;
}

Outcome penalty_matrix() {
  Outcome out;
  std::mt19937_64 rng(4711);
  double worst_rel = 0, worst_root = 0, worst_null_rel = 0, worst_null_abs = 0;
  for (int m = 1; m <= 3; ++m) {
    for (std::size_t n : {4, 9, 14, 20}) {
      const auto t = random_design(rng, n);
      const BasisSystem b = build_basis(t, m);
      const Eigen::MatrixXd ref = oracle::gram_quadrature(b.knots, b.order(), m);
      const double rel = (dense(b.omega) - ref).cwiseAbs().maxCoeff() / ref.cwiseAbs().maxCoeff();
      worst_rel = std::max(worst_rel, rel);

      // Interpolate random polynomials of degree < m at the Greville abscissae
      // with the oracle basis, then evaluate the penalty quadratic form.
      std::vector<double> g(b.n_basis);
      for (std::size_t i = 0; i < b.n_basis; ++i) {
        double s = 0;
        for (int j = 1; j < b.order(); ++j) s += b.knots[i + static_cast<std::size_t>(j)];
        g[i] = s / (b.order() - 1);
      }
      const Eigen::MatrixXd bg = oracle::dense_basis(b.knots, b.order(), 0, g);
      std::uniform_real_distribution<double> u(-2.0, 2.0);
      for (int deg = 0; deg < m; ++deg) {
        Eigen::VectorXd rhs(static_cast<Eigen::Index>(g.size()));
        std::vector<double> poly(static_cast<std::size_t>(deg + 1));
        for (double& p : poly) p = u(rng);
        for (std::size_t i = 0; i < g.size(); ++i) {
          double v = 0, xp = 1;
          for (double p : poly) { v += p * xp; xp *= g[i]; }
          rhs(static_cast<Eigen::Index>(i)) = v;
        }
        const Eigen::VectorXd c = bg.partialPivLu().solve(rhs);
        const std::vector<double> cv(c.data(), c.data() + c.size());
        // ||root c||^2 is the penalty as fits evaluate it (Omega = root' root);
        // c' Omega c on the assembled matrix is bounded relative to |c|' |Omega| |c|.
        double root_sq = 0;
        for (double v : b.penalty_root.multiply(cv)) root_sq += v * v;
        worst_root = std::max(worst_root, root_sq);
        const double q = std::abs(b.omega.quadratic_form(cv));
        double mag = 0;
        for (std::size_t i = 0; i < cv.size(); ++i)
          for (std::size_t j = 0; j < cv.size(); ++j) mag += std::abs(cv[i] * b.omega(i, j) * cv[j]);
        worst_null_abs = std::max(worst_null_abs, q);
        worst_null_rel = std::max(worst_null_rel, q / mag);
      }
    }
  }
  out.require(worst_rel <= 1e-8, "omega vs adaptive Simpson rel <= 1e-8");
  out.require(worst_root <= 1e-10, "null-space ||root c||^2 <= 1e-10");
  out.require(worst_null_rel <= 1e-10, "null-space |c' Omega c| <= 1e-10 relative to |c|'|Omega||c|");
  out.note("max rel diff " + fmt("%.2e", worst_rel) + "; degree < m: max ||root c||^2 " + fmt("%.2e", worst_root) +
           ", max |c' Omega c| " + fmt("%.2e", worst_null_abs) + " (relative " + fmt("%.2e", worst_null_rel) + ")");
  return out;
}

const CellResult& cell(const SimulationReport& r, FunctionId f, ErrorDist e, Estimator s) {
  for (const auto& c : r.cells) {
    if (c.function == f && c.error == e && c.estimator == s) return c;
  }
  throw std::runtime_error("missing cell");
}

Outcome table_reproduction(const SimulationReport& r, double secs) {
  Outcome out;
  const auto F = {FunctionId::F1, FunctionId::F2, FunctionId::F3};
  const double hps = cell(r, FunctionId::F1, ErrorDist::Gaussian, Estimator::HPS).mean_mse;
  out.require(std::abs(hps - 0.096) <= 0.25 * 0.096, "(a) f1/gaussian HPS within 25% of 0.096");
  out.note("(a) f1/gaussian HPS " + fmt("%.4f", hps));
  std::size_t ok_b = 0, n_b = 0;
  for (auto f : F) {
    for (auto e : {ErrorDist::T3, ErrorDist::Mixture, ErrorDist::Slash}) {
      ++n_b;
      const double h = cell(r, f, e, Estimator::HPS).mean_mse, l = cell(r, f, e, Estimator::LS).mean_mse;
      if (h < l) ++ok_b;
      else out.require(false, "(b) HPS < LS in " + to_string(f) + "/" + to_string(e));
    }
  }
  out.note("(b) HPS < LS in " + std::to_string(ok_b) + "/" + std::to_string(n_b) + " cells");
  double min_ratio = INFINITY;
  for (auto f : F) {
    const double ratio = cell(r, f, ErrorDist::Slash, Estimator::LS).mean_mse /
                         cell(r, f, ErrorDist::Slash, Estimator::HPS).mean_mse;
    min_ratio = std::min(min_ratio, ratio);
    out.require(ratio >= 100.0, "(c) slash LS >= 100 x HPS for " + to_string(f));
  }
  out.note("(c) min slash LS/HPS " + fmt("%.0f", min_ratio));
  for (auto f : {FunctionId::F1, FunctionId::F2}) {
    const double lad = cell(r, f, ErrorDist::Gaussian, Estimator::LAD).mean_mse;
    const double h = cell(r, f, ErrorDist::Gaussian, Estimator::HPS).mean_mse;
    out.require(lad > h, "(d) gaussian LAD > HPS for " + to_string(f));
    out.note("(d) " + to_string(f) + " LAD/HPS " + fmt("%.2f", lad / h));
  }
  std::size_t failures = 0;
  for (const auto& c : r.cells) failures += c.failures;
  out.require(secs < 600.0, "runtime < 10 min");
  out.note("failed fits " + std::to_string(failures) + ", " + fmt("%.0f", secs) + " s");
  return out;
}

Outcome scale_regimes(const SimulationReport& r) {
  Outcome out;
  double worst = 0;
  std::string where;
  for (const auto& c : r.cells) {
    if (c.estimator != Estimator::HPS) continue;
    const double h = c.mean_mse, p = cell(r, c.function, c.error, Estimator::HPR).mean_mse;
    const double d = std::abs(h - p) / std::min(h, p);
    if (d >= 0.2) out.require(false, "HPS vs HPR < 20% in " + to_string(c.function) + "/" + to_string(c.error) + " (" + fmt("%.1f%%", 100 * d) + ")");
    if (d > worst) {
      worst = d;
      where = to_string(c.function) + "/" + to_string(c.error);
    }
  }
  out.note("largest |HPS - HPR| / min " + fmt("%.1f%%", 100 * worst) + " at " + where);
  return out;
}

Outcome rates(const fs::path& configs) {
  Outcome out;
  const auto t0 = Clock::now();
  for (const char* name : {"rates_ls.json", "rates_huber.json"}) {
    const auto c = cli::parse_rates_config(slurp(configs / name));
    const RateReport r = rate_study(c.rate);
    const double s0 = r.slope_l2.value, s1 = r.slope_deriv.at(0).value;
    const std::string tag = c.rate.loss.name() + "/" + to_string(c.rate.error);
    out.require(std::abs(s0 + 0.8) <= 0.15, tag + " L2 slope in -0.8 +/- 0.15");
    out.require(std::abs(s1 + 0.4) <= 0.2, tag + " derivative slope in -0.4 +/- 0.2");
    out.note(tag + " L2 " + fmt("%.3f", s0) + " (se " + fmt("%.3f", r.slope_l2.se) + "), d1 " + fmt("%.3f", s1) +
             " (se " + fmt("%.3f", r.slope_deriv[0].se) + ")");
  }
  const double secs = seconds_since(t0);
  out.require(secs < 600.0, "runtime < 10 min");
  out.note(fmt("%.1f", secs) + " s");
  return out;
}

Outcome property_suites() {
  Outcome out;
  const auto t0 = Clock::now();
  std::vector<std::string> passed;

  {  // psi against a central difference of rho
    double worst = 0;
    for (const auto& spec : {LossSpec::least_squares(), LossSpec::huber(1.345), LossSpec::smoothed_abs(0.1),
                             LossSpec::smoothed_quantile(0.3, 0.1), LossSpec::lp(1.5)}) {
      for (int i = -60; i <= 60; ++i) {
        const double x = 0.1 * i + 0.013;
        const double h = 1e-5;
        const double fd = (rho(spec, x + h) - rho(spec, x - h)) / (2 * h);
        worst = std::max(worst, std::abs(fd - psi(spec, x)) / std::max(1.0, std::abs(fd)));
      }
    }
    out.require(worst <= 1e-6, "psi vs finite difference (" + fmt("%.1e", worst) + ")");
    passed.push_back("psi-fd " + fmt("%.0e", worst));
  }
  {  // monotone descent
    const auto data = sine_data(100, 5, 0.4, true);
    FitOptions opt;
    opt.max_iter = 500;
    bool mono = true;
    for (const auto& spec : {LossSpec::huber(), LossSpec::smoothed_abs(0.05), LossSpec::smoothed_quantile(0.2, 0.05)}) {
      const auto fit = fit_spline(data, spec, 1e-5, opt);
      for (std::size_t i = 1; i < fit.objective_trace.size(); ++i) {
        mono = mono && fit.objective_trace[i] <= fit.objective_trace[i - 1] * (1 + 1e-12);
      }
    }
    out.require(mono, "IRLS monotone descent");
    passed.push_back("descent");
  }
  {  // equivariance y -> a y + c with lambda / a^2
    const auto data = sine_data(60, 9, 0.3, true);
    FitOptions opt;
    opt.scale = {ScaleMode::Rice, 1.0};
    opt.tol = 1e-12;
    const auto base = fit_spline(data, LossSpec::huber(), 1e-4, opt);
    double worst = 0;
    for (auto [a, c] : {std::pair{3.0, 5.0}, std::pair{-2.0, 0.5}, std::pair{0.01, -100.0}}) {
      std::vector<double> y2(data.size());
      for (std::size_t i = 0; i < y2.size(); ++i) y2[i] = a * data.y()[i] + c;
      const std::vector<double> t(data.t().begin(), data.t().end());
      const auto fit = fit_spline(DesignData(t, y2), LossSpec::huber(), 1e-4 / (a * a), opt);
      for (std::size_t i = 0; i < y2.size(); ++i) {
        worst = std::max(worst, std::abs(fit.residuals[i] - a * base.residuals[i]) / std::abs(a));
      }
    }
    out.require(worst <= 1e-8, "equivariance (" + fmt("%.1e", worst) + ")");
    passed.push_back("equivariance " + fmt("%.0e", worst));
  }
  {  // interpolation limit
    const auto data = sine_data(8, 11, 0.3, false);
    const auto fit = fit_spline(data, LossSpec::least_squares(), 1e-12, FitOptions{});
    double worst = 0;
    for (double r : fit.residuals) worst = std::max(worst, std::abs(r));
    out.require(worst < 1e-6, "interpolation limit (" + fmt("%.1e", worst) + ")");
    passed.push_back("interpolation " + fmt("%.0e", worst));
  }
  {  // GCV search against a grid over the whole search interval
    const auto data = sine_data(60, 17, 0.3, true);
    const PenalizedProblem pb(data, 2);
    FitOptions opt;
    const SearchOptions so;
    const auto g = select_lambda(pb, LossSpec::huber(), opt, so);
    double best = INFINITY;
    for (int k = 0; k <= 180; ++k) {
      try {
        best = std::min(best, gcv_score(pb, LossSpec::huber(), std::pow(10.0, so.log10_lambda_min + 0.1 * k), opt).score);
      } catch (const Error&) {
      }
    }
    out.require(g.score_opt <= best * (1 + 1e-6), "GCV search <= grid minimum");
    passed.push_back("gcv-grid " + fmt("%.2e", g.score_opt / best - 1));
  }
  {  // quantile coverage
    const std::size_t n = 500;
    std::mt19937_64 rng(21);
    std::normal_distribution<double> z;
    std::vector<double> t(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
      t[i] = static_cast<double>(i + 1) / static_cast<double>(n);
      y[i] = std::sin(2 * std::numbers::pi * t[i]) + 0.5 * z(rng);
    }
    FitOptions opt;
    opt.max_iter = 1000;
    for (double alpha : {0.1, 0.25, 0.75}) {
      const auto fit = fit_spline(DesignData(t, y), LossSpec::smoothed_quantile(alpha, 1e-3), 1e-5, opt);
      double below = 0;
      for (double r : fit.residuals) below += r < 0 ? 1.0 : 0.0;
      below /= static_cast<double>(n);
      out.require(std::abs(below - alpha) <= 3 * std::sqrt(alpha * (1 - alpha) / n),
                  "quantile coverage at " + fmt("%.2f", alpha) + " (" + fmt("%.3f", below) + ")");
    }
    passed.push_back("coverage");
  }
  {  // seed determinism under varying parallelism
    ScenarioConfig c;
    c.function = FunctionId::F3;
    c.error = ErrorDist::Mixture;
    c.n = 40;
    c.replications = 12;
    c.seed = 99;
    c.threads = 1;
    const auto a = run_monte_carlo(c);
    c.threads = 4;
    const auto b = run_monte_carlo(c);
    bool same = a.cells.size() == b.cells.size();
    for (std::size_t i = 0; same && i < a.cells.size(); ++i) {
      same = a.cells[i].mean_mse == b.cells[i].mean_mse && a.cells[i].se_mse == b.cells[i].se_mse &&
             a.cells[i].max_mse == b.cells[i].max_mse;
    }
    out.require(same, "seed determinism across thread counts");
    passed.push_back("determinism");
  }
  const double secs = seconds_since(t0);
  out.require(secs < 120.0, "runtime < 2 min");
  std::string list;
  for (const auto& p : passed) list += (list.empty() ? "" : ", ") + p;
  out.note(list + "; " + fmt("%.1f", secs) + " s");
  return out;
}

}  // namespace

// Optional arguments select criteria by number; all run by default.
int main(int argc, char** argv) {
  const fs::path configs = fs::path(MSPLINE_SOURCE_DIR) / "configs";
  std::vector<std::string> only(argv + 1, argv + argc);
  auto wanted = [&](const char* id) {
    return only.empty() || std::find(only.begin(), only.end(), std::string(id)) != only.end();
  };
  int failed = 0;
  auto report = [&](const char* name, const Outcome& o) {
    std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
    std::fflush(stdout);
    failed += o.pass ? 0 : 1;
  };
  auto guarded = [&](const char* name, const std::function<Outcome()>& fn) {
    try {
      report(name, fn());
    } catch (const std::exception& e) {
      report(name, Outcome{false, std::string("exception: ") + e.what()});
    }
  };

  if (wanted("1")) guarded("1 oracle_equivalence", oracle_equivalence);
  if (wanted("2")) guarded("2 penalty_matrix", penalty_matrix);

  SimulationReport table;
  double table_secs = 0;
  bool have_table = false;
  if (wanted("3") || wanted("5")) try {
    const auto c = cli::parse_simulate_config(slurp(configs / "table1.json"));
    const auto t0 = Clock::now();
    table = run_table(c.base, c.functions, c.errors);
    table_secs = seconds_since(t0);
    have_table = true;
    std::printf("%s", cli::format_table(table).c_str());
  } catch (const std::exception& e) {
    report("3 table_reproduction", Outcome{false, std::string("exception: ") + e.what()});
    report("5 scale_regimes", Outcome{false, "table unavailable"});
  }
  if (have_table && wanted("3")) {
    guarded("3 table_reproduction", [&] { return table_reproduction(table, table_secs); });
  }
  if (wanted("4")) guarded("4 rates", [&] { return rates(configs); });
  if (have_table && wanted("5")) guarded("5 scale_regimes", [&] { return scale_regimes(table); });
  if (wanted("6")) guarded("6 property_suites", property_suites);

  std::printf("%d criteria failed\n", failed);
  return failed == 0 ? 0 : 1;
}
