#pragma once

#include <functional>

namespace mspline {

struct NelderMead1dOptions {
  double init_step = 1.0;
  int max_evals = 60;
  double xtol = 1e-3;
  double lower = -1e300;  ///< points outside [lower, upper] score +inf without evaluation
  double upper = 1e300;
};

struct NelderMead1dResult {
  double x = 0.0;
  double value = 0.0;
  int evaluations = 0;
  bool converged = false;
};

/// Nelder-Mead on the real line: the simplex is a pair of points, updated by
/// reflection, expansion, contraction and shrink. Non-finite values are
/// treated as +inf. Returns the best point evaluated.
NelderMead1dResult nelder_mead_1d(const std::function<double(double)>& f, double x0,
                                  const NelderMead1dOptions& options);

}  // namespace mspline
