#include "mspline/select.hpp"

#include <cmath>
#include <limits>
#include <optional>

#include "mspline/error.hpp"
#include "mspline/nelder_mead.hpp"

namespace mspline {

double gcv_of_fit(const SplineFit& fit, std::size_t n) {
  const double nn = static_cast<double>(n);
  const double ratio = fit.edf / nn;
  // Rounding can leave an exact interpolant a hair below edf = n.
  if (!(ratio < 1.0 - 1e-10)) {
    throw Error(ErrorCode::DegenerateGcv, "trace of the influence matrix reaches n");
  }
  double num = 0.0;
  for (std::size_t i = 0; i < n; ++i) num += fit.raw_weights[i] * fit.residuals[i] * fit.residuals[i];
  num /= nn;
  return num / ((1.0 - ratio) * (1.0 - ratio));
}

GcvEvaluation gcv_score(const PenalizedProblem& pb, const LossSpec& spec, double lambda,
                        const FitOptions& options) {
  GcvEvaluation ev;
  ev.fit = fit_spline(pb, spec, lambda, options);
  ev.edf = ev.fit.edf;
  ev.score = gcv_of_fit(ev.fit, pb.data.size());
  return ev;
}

void SearchOptions::validate() const {
  if (max_evals < 3) throw Error(ErrorCode::InvalidArgument, "max_evals must be >= 3");
  if (!(xtol > 0.0)) throw Error(ErrorCode::InvalidArgument, "xtol must be positive");
  if (!(init_step != 0.0) || !std::isfinite(init_step)) {
    throw Error(ErrorCode::InvalidArgument, "init_step must be nonzero");
  }
  if (!(log10_lambda_min < log10_lambda_max) || log10_lambda_init < log10_lambda_min ||
      log10_lambda_init > log10_lambda_max) {
    throw Error(ErrorCode::InvalidArgument, "search bounds must bracket the initial point");
  }
}

namespace {

GcvResult search_fixed_scale(const PenalizedProblem& pb, const LossSpec& spec,
                             const FitOptions& options, ScaleEstimate scale,
                             const SearchOptions& search) {
  GcvResult out;
  std::optional<SplineFit> best_fit;
  double best = std::numeric_limits<double>::infinity();

  auto objective = [&](double u) {
    const double lambda = std::pow(10.0, u);
    GcvTraceEntry entry{lambda, std::numeric_limits<double>::infinity(),
                        std::numeric_limits<double>::quiet_NaN()};
    try {
      SplineFit fit = fit_with_scale(pb, spec, lambda, scale, options);
      entry.edf = fit.edf;
      entry.score = gcv_of_fit(fit, pb.data.size());
      if (entry.score < best) {
        best = entry.score;
        best_fit = std::move(fit);
      }
    } catch (const Error& e) {
      if (e.code() != ErrorCode::IllPosed && e.code() != ErrorCode::DegenerateGcv) throw;
    }
    out.trace.push_back(entry);
    return entry.score;
  };

  NelderMead1dOptions nm;
  nm.init_step = search.init_step;
  nm.max_evals = search.max_evals;
  nm.xtol = search.xtol;
  nm.lower = search.log10_lambda_min;
  nm.upper = search.log10_lambda_max;
  const auto res = nelder_mead_1d(objective, search.log10_lambda_init, nm);

  out.evaluations = res.evaluations;
  out.converged = res.converged;
  if (!best_fit) {
    throw Error(ErrorCode::SelectionFailed, "every GCV evaluation failed");
  }
  out.fit = std::move(*best_fit);
  out.lambda_opt = out.fit.lambda;
  out.score_opt = best;
  return out;
}

}  // namespace

GcvResult select_lambda(const PenalizedProblem& pb, const LossSpec& spec,
                        const FitOptions& options, const SearchOptions& search) {
  options.validate();
  search.validate();
  if (options.scale.mode != ScaleMode::TauRefit) {
    return search_fixed_scale(pb, spec, options, resolve_simple_scale(pb, options.scale), search);
  }
  const GcvResult stage1 = search_fixed_scale(pb, spec, options, rice_scale(pb.data.y()), search);
  GcvResult stage2 =
      search_fixed_scale(pb, spec, options, tau_scale(stage1.fit.residuals), search);
  stage2.preliminary_lambda = stage1.lambda_opt;
  return stage2;
}

}  // namespace mspline
