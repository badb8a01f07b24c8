#include <cstdio>
#include <exception>
#include <iostream>
#include <limits>
#include <string>

#include <CLI11.hpp>

#include "mspline/cli.hpp"

namespace {

using namespace mspline;
using namespace mspline::cli;

struct FitFlags {
  std::string data, x = "0", y = "1", delimiter = ",", decimal = ".", out = ".";
  std::optional<double> missing;
  bool no_header = false;
  std::string loss = "huber", scale = "rice", lambda = "auto";
  double k = 1.345, eps = 1e-4, alpha = 0.5, p = 1.5, sigma = 1.0;
  int m = 2, derivatives = 0, max_iter = 100;
  double tol = 1e-8;
  std::size_t grid = 201, max_knots = 0, scan = 0;
};

void add_fit_flags(CLI::App* sub, FitFlags& f, bool select) {
  sub->add_option("--data", f.data, "Delimited input file")->required();
  sub->add_option("--x", f.x, "x column: header name or 0-based index")->capture_default_str();
  sub->add_option("--y", f.y, "y column: header name or 0-based index")->capture_default_str();
  sub->add_option("--delimiter", f.delimiter, "Field delimiter (one character)")->capture_default_str();
  sub->add_option("--decimal", f.decimal, "Decimal mark (one character)")->capture_default_str();
  sub->add_option("--missing", f.missing, "Numeric missing-value sentinel");
  sub->add_flag("--no-header", f.no_header, "First row holds data");
  sub->add_option("--loss", f.loss, "ls | huber | lad | quantile | lp")->capture_default_str();
  sub->add_option("--k", f.k, "Huber threshold")->capture_default_str();
  sub->add_option("--eps", f.eps, "Smoothing width for lad and quantile")->capture_default_str();
  sub->add_option("--alpha", f.alpha, "Quantile level")->capture_default_str();
  sub->add_option("--p", f.p, "Exponent for lp")->capture_default_str();
  sub->add_option("--scale", f.scale, "rice | tau-refit | fixed")->capture_default_str();
  sub->add_option("--sigma", f.sigma, "Scale value for --scale fixed")->capture_default_str();
  if (!select) {
    sub->add_option("--lambda", f.lambda, "auto (GCV) or a positive value")->capture_default_str();
    sub->add_option("--grid", f.grid, "Number of equispaced output grid points")->capture_default_str();
    sub->add_option("--derivatives", f.derivatives, "Highest derivative order written")->capture_default_str();
  } else {
    sub->add_option("--scan", f.scan, "Also tabulate GCV on this many log-spaced lambdas")->capture_default_str();
  }
  sub->add_option("--m", f.m, "Penalty order")->capture_default_str();
  sub->add_option("--max-iter", f.max_iter, "IRLS iteration cap")->capture_default_str();
  sub->add_option("--tol", f.tol, "IRLS relative coefficient tolerance")->capture_default_str();
  sub->add_option("--max-knots", f.max_knots, "Knot cap (0 = every design point)")->capture_default_str();
  sub->add_option("--out", f.out, "Output directory")->capture_default_str();
}

char single_char(const std::string& s, const char* flag) {
  if (s.size() != 1) {
    throw Error(ErrorCode::Config, std::string(flag) + " must be a single character");
  }
  return s[0];
}

FitArgs to_args(const FitFlags& f) {
  FitArgs a;
  a.dataset.path = f.data;
  a.dataset.x_column = f.x;
  a.dataset.y_column = f.y;
  a.dataset.delimiter = single_char(f.delimiter, "--delimiter");
  a.dataset.decimal_mark = single_char(f.decimal, "--decimal");
  a.dataset.missing_sentinel = f.missing;
  a.dataset.header = !f.no_header;
  a.loss = make_loss(f.loss, f.k, f.eps, f.alpha, f.p);
  a.scale = make_scale(f.scale, f.sigma);
  if (f.lambda != "auto") {
    double v = std::numeric_limits<double>::quiet_NaN();
    try {
      std::size_t used = 0;
      v = std::stod(f.lambda, &used);
      if (used != f.lambda.size()) v = std::numeric_limits<double>::quiet_NaN();
    } catch (const std::exception&) {
    }
    if (!(v > 0.0)) throw Error(ErrorCode::InvalidArgument, "--lambda must be 'auto' or a positive number");
    a.lambda = v;
  }
  a.options.m = f.m;
  a.options.max_iter = f.max_iter;
  a.options.tol = f.tol;
  a.options.max_knots = f.max_knots;
  a.grid_size = f.grid;
  a.derivatives = f.derivatives;
  a.out_dir = f.out;
  return a;
}

void print_fit(const FitReport& r) {
  std::printf("lambda %s  edf %s  scale %s  iterations %d  converged %s\n",
              format_double(r.fit.lambda).c_str(), format_double(r.fit.edf).c_str(),
              format_double(r.fit.scale.value).c_str(), r.fit.iterations,
              r.fit.converged ? "true" : "false");
  for (const auto& w : r.input.warnings) std::fprintf(stderr, "warning: %s\n", w.c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Penalized robust smoothing splines"};
  app.require_subcommand(1);

  FitFlags fit_flags, select_flags;
  add_fit_flags(app.add_subcommand("fit", "Fit a spline to a dataset"), fit_flags, false);
  add_fit_flags(app.add_subcommand("select", "Select lambda by weighted GCV"), select_flags, true);

  std::string sim_config, sim_out = ".", rate_config, rate_out = ".";
  std::optional<unsigned> sim_threads, rate_threads;
  auto* sim = app.add_subcommand("simulate", "Monte-Carlo estimator comparison");
  sim->add_option("--config", sim_config, "JSON configuration")->required();
  sim->add_option("--out", sim_out, "Output directory")->capture_default_str();
  sim->add_option("--threads", sim_threads, "Worker threads (0 = all cores)");
  auto* rates = app.add_subcommand("rates", "Empirical convergence-rate study");
  rates->add_option("--config", rate_config, "JSON configuration")->required();
  rates->add_option("--out", rate_out, "Output directory")->capture_default_str();
  rates->add_option("--threads", rate_threads, "Worker threads (0 = all cores)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return exit_code(ErrorCategory::Usage);
  }

  try {
    if (app.got_subcommand("fit")) {
      print_fit(cmd_fit(to_args(fit_flags)));
    } else if (app.got_subcommand("select")) {
      const GcvResult g = cmd_select(to_args(select_flags), select_flags.scan);
      std::printf("lambda %s  score %s  edf %s  evaluations %d\n", format_double(g.lambda_opt).c_str(),
                  format_double(g.score_opt).c_str(), format_double(g.fit.edf).c_str(), g.evaluations);
    } else if (app.got_subcommand("simulate")) {
      std::fputs(format_table(cmd_simulate(sim_config, sim_out, sim_threads)).c_str(), stdout);
    } else {
      const RateReport r = cmd_rates(rate_config, rate_out, rate_threads);
      std::printf("slope l2 %.3f +/- %.3f\n", r.slope_l2.value, r.slope_l2.se);
      for (std::size_t j = 0; j < r.slope_deriv.size(); ++j) {
        std::printf("slope d%zu %.3f +/- %.3f\n", j + 1, r.slope_deriv[j].value, r.slope_deriv[j].se);
      }
    }
  } catch (const Error& e) {
    const int code = exit_code(e.category());
    std::fprintf(stderr, "error [%s, exit %d]: %s\n", std::string(to_string(e.code())).c_str(), code, e.what());
    return code;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error [internal, exit 4]: %s\n", e.what());
    return exit_code(ErrorCategory::Numerical);
  }
  return 0;
}
