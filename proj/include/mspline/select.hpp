#pragma once

// Smoothing-parameter selection by weighted generalized cross-validation,
//
//   GCV(lambda) = n^{-1} sum_i W_i r_i^2 / (1 - n^{-1} tr H(lambda))^2,
//
// with W_i = psi(r_i / sigma) / (r_i / sigma) and H the weighted hat matrix of
// the converged IRLS step, minimized over log10(lambda) by Nelder-Mead.

#include <vector>

#include "mspline/fit.hpp"
#include "mspline/loss.hpp"

namespace mspline {

struct GcvEvaluation {
  double score = 0.0;
  double edf = 0.0;
  SplineFit fit;
};

/// Full IRLS fit at lambda followed by the criterion. Throws
/// Error(DegenerateGcv) when edf / n >= 1.
GcvEvaluation gcv_score(const PenalizedProblem& problem, const LossSpec& spec, double lambda,
                        const FitOptions& options);

/// Criterion for an existing fit.
double gcv_of_fit(const SplineFit& fit, std::size_t n);

struct SearchOptions {
  double log10_lambda_init = -2.0;
  double init_step = 1.0;
  int max_evals = 60;
  double xtol = 1e-3;  ///< in log10 units
  double log10_lambda_min = -12.0;
  double log10_lambda_max = 6.0;

  void validate() const;
};

struct GcvTraceEntry {
  double lambda = 0.0;
  double score = 0.0;  ///< +inf for failed evaluations
  double edf = 0.0;
};

struct GcvResult {
  double lambda_opt = 0.0;
  double score_opt = 0.0;
  std::vector<GcvTraceEntry> trace;
  int evaluations = 0;
  bool converged = false;
  SplineFit fit;  ///< fit at lambda_opt
  /// Lambda chosen for the preliminary Rice-scale stage under TauRefit, else 0.
  double preliminary_lambda = 0.0;
};

/// Under ScaleMode::TauRefit the search runs twice: with the Rice scale, then
/// with the tau-scale of the first optimum's residuals held fixed.
/// Throws Error(SelectionFailed) when every evaluation fails.
GcvResult select_lambda(const PenalizedProblem& problem, const LossSpec& spec,
                        const FitOptions& options, const SearchOptions& search = {});

}  // namespace mspline
