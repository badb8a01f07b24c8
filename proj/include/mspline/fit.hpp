#pragma once

// Penalized M-type smoothing spline:
//
//   minimize (1/n) sum_i rho((y_i - f(t_i)) / sigma) + lambda * int_0^1 (f^{(m)})^2
//
// over the B-spline space of BasisSystem, solved by iteratively reweighted
// banded least squares.

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "mspline/band.hpp"
#include "mspline/basis.hpp"
#include "mspline/loss.hpp"
#include "mspline/scale.hpp"

namespace mspline {

enum class ScaleMode {
  Fixed,     ///< use ScaleChoice::value (1 by default)
  Rice,      ///< rice_scale(y), computed once
  TauRefit,  ///< Huber-type fit with Rice scale, tau-scale of its residuals, refit
};

struct ScaleChoice {
  ScaleMode mode = ScaleMode::Fixed;
  double value = 1.0;
};

struct FitOptions {
  int m = 2;
  int max_iter = 100;
  double tol = 1e-8;  ///< relative l-infinity change of the coefficients
  ScaleChoice scale{};
  std::size_t max_knots = 0;  ///< 0 keeps one knot per design point

  /// Throws Error(InvalidArgument) unless max_iter >= 1, tol > 0, m >= 1.
  void validate() const;
};

/// Data, basis and design matrix shared by every fit on the same design.
struct PenalizedProblem {
  PenalizedProblem(DesignData data, int m, std::size_t max_knots = 0);

  DesignData data;
  std::shared_ptr<const BasisSystem> basis;
  RowBandMatrix design;  ///< B-spline values at the design points
};

struct SplineFit {
  std::shared_ptr<const BasisSystem> basis;
  std::vector<double> coef;
  double lambda = 0.0;
  ScaleEstimate scale{};
  std::vector<double> residuals;
  std::vector<double> raw_weights;  ///< psi(u)/u at convergence (unnormalized)
  std::vector<double> weights;      ///< raw_weights / psi'(0), in (0, 1]
  int iterations = 0;
  bool converged = false;
  double edf = 0.0;  ///< trace of the pseudo-influence matrix
  double objective = 0.0;
  std::vector<double> objective_trace;  ///< warm start, then one entry per IRLS step
};

/// Penalized criterion at `coef`. Throws on dimension mismatch or bad lambda/sigma.
double objective(const PenalizedProblem& problem, const LossSpec& spec, double lambda,
                 double sigma, std::span<const double> coef);

/// IRLS at a fixed, already resolved scale.
SplineFit fit_with_scale(const PenalizedProblem& problem, const LossSpec& spec, double lambda,
                         ScaleEstimate scale, const FitOptions& options);

/// Resolves the scale per options.scale and fits. TauRefit runs exactly two
/// stages at the same lambda.
SplineFit fit_spline(const PenalizedProblem& problem, const LossSpec& spec, double lambda,
                     const FitOptions& options);

SplineFit fit_spline(const DesignData& data, const LossSpec& spec, double lambda,
                     const FitOptions& options);

/// Scale for a Fixed or Rice choice. TauRefit needs a preliminary fit and is
/// handled by the drivers.
ScaleEstimate resolve_simple_scale(const PenalizedProblem& problem, const ScaleChoice& choice);

/// j-th derivative of the fitted spline at x in [0, 1].
std::vector<double> predict(const SplineFit& fit, std::span<const double> x, int j = 0);

/// ||f||_2^2 + lambda ||f^{(m)}||_2^2 on [0, 1] for the spline with coefficients `coef`.
double sobolev_norm_sq(const BasisSystem& basis, std::span<const double> coef, double lambda);

/// Penalized normal-equation matrix B^T W B / n + 2 lambda sigma^2 Omega.
SymBandMatrix normal_matrix(const PenalizedProblem& problem, std::span<const double> raw_weights,
                            double lambda, double sigma);

/// Trace of B A^{-1} B^T W / n with A = normal_matrix(...).
double influence_trace(const PenalizedProblem& problem, std::span<const double> raw_weights,
                       double lambda, double sigma);

}  // namespace mspline
