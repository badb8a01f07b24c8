#include "mspline/fit.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mspline/error.hpp"

namespace mspline {

namespace {

void check_lambda_sigma(double lambda, double sigma) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw Error(ErrorCode::InvalidArgument, "lambda must be positive and finite");
  }
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw Error(ErrorCode::InvalidScale, "scale must be positive and finite");
  }
}

std::vector<double> residuals_of(const PenalizedProblem& pb, std::span<const double> coef) {
  auto fitted = pb.design.multiply(coef);
  const auto y = pb.data.y();
  for (std::size_t i = 0; i < fitted.size(); ++i) fitted[i] = y[i] - fitted[i];
  return fitted;
}

// Stacked least squares [sqrt(2 lambda) sigma P; sqrt(W/n) B] c ~ [0; z] with
// pseudo-responses z = y + offset * sigma / w. Its normal equations are
// (B^T W B / n + 2 lambda sigma^2 Omega) c = B^T (W y + offset * sigma) / n.
// The penalty block does not change between IRLS steps and is rotated in once.
BandQR penalty_system(const BasisSystem& b, double lambda, double sigma) {
  BandQR qr(b.n_basis, static_cast<std::size_t>(b.degree()));
  const RowBandMatrix& p = b.penalty_root;
  const double ps = std::sqrt(2.0 * lambda) * sigma;
  for (std::size_t q = 0; q < p.rows(); ++q) qr.add_row(p.first_col(q), p.row(q), 0.0, ps);
  return qr;
}

BandQR weighted_system(const PenalizedProblem& pb, const BandQR& penalty_block,
                       const LossSpec& spec, std::span<const double> w, double sigma) {
  BandQR qr = penalty_block;
  const std::size_t n = pb.data.size();
  const double inv_n = 1.0 / static_cast<double>(n);
  const double shift = score_offset(spec) * sigma;
  const auto y = pb.data.y();
  for (std::size_t i = 0; i < n; ++i) {
    qr.add_row(pb.design.first_col(i), pb.design.row(i), y[i] + shift / w[i],
               std::sqrt(w[i] * inv_n));
  }
  return qr;
}

double penalty(const BasisSystem& b, std::span<const double> coef) {
  double s = 0.0;
  for (double v : b.penalty_root.multiply(coef)) s += v * v;
  return s;
}

double linf(std::span<const double> x) {
  double m = 0.0;
  for (double v : x) m = std::max(m, std::abs(v));
  return m;
}

}  // namespace

void FitOptions::validate() const {
  if (m < 1) throw Error(ErrorCode::InvalidArgument, "m must be >= 1");
  if (max_iter < 1) throw Error(ErrorCode::InvalidArgument, "max_iter must be >= 1");
  if (!(tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "tol must be positive");
  if (scale.mode == ScaleMode::Fixed && !(scale.value > 0.0)) {
    throw Error(ErrorCode::InvalidScale, "fixed scale must be positive");
  }
}

PenalizedProblem::PenalizedProblem(DesignData d, int m, std::size_t max_knots)
    : data(std::move(d)),
      basis(std::make_shared<const BasisSystem>(build_basis(data.t(), m, max_knots))),
      design(design_matrix(*basis, data.t())) {}

SymBandMatrix normal_matrix(const PenalizedProblem& pb, std::span<const double> raw_weights,
                            double lambda, double sigma) {
  const BasisSystem& b = *pb.basis;
  SymBandMatrix a(b.n_basis, static_cast<std::size_t>(b.degree()));
  a.add_gram(pb.design, raw_weights, 1.0 / static_cast<double>(pb.data.size()));
  a.add_scaled(b.omega, 2.0 * lambda * sigma * sigma);
  return a;
}

double influence_trace(const PenalizedProblem& pb, std::span<const double> raw_weights,
                       double lambda, double sigma) {
  // A fixed spec with zero offset gives the same left-hand side.
  const BandCholesky chol = weighted_system(pb, penalty_system(*pb.basis, lambda, sigma),
                                            LossSpec::least_squares(), raw_weights, sigma)
                                .factor();
  const SymBandMatrix inv = chol.inverse_band();
  const RowBandMatrix& bm = pb.design;
  double tr = 0.0;
  for (std::size_t i = 0; i < bm.rows(); ++i) {
    const auto r = bm.row(i);
    const std::size_t f = bm.first_col(i);
    double q = 0.0;
    for (std::size_t a = 0; a < r.size(); ++a) {
      if (r[a] == 0.0) continue;
      for (std::size_t c = 0; c < r.size(); ++c) q += r[a] * inv(f + a, f + c) * r[c];
    }
    tr += raw_weights[i] * q;
  }
  return tr / static_cast<double>(pb.data.size());
}

double objective(const PenalizedProblem& pb, const LossSpec& spec, double lambda, double sigma,
                 std::span<const double> coef) {
  check_lambda_sigma(lambda, sigma);
  if (coef.size() != pb.basis->n_basis) {
    std::ostringstream os;
    os << "coefficient length " << coef.size() << " != basis size " << pb.basis->n_basis;
    throw Error(ErrorCode::InvalidArgument, os.str());
  }
  const auto r = residuals_of(pb, coef);
  double s = 0.0;
  for (double ri : r) s += rho(spec, ri / sigma);
  return s / static_cast<double>(r.size()) + lambda * penalty(*pb.basis, coef);
}

SplineFit fit_with_scale(const PenalizedProblem& pb, const LossSpec& spec, double lambda,
                         ScaleEstimate scale, const FitOptions& options) {
  options.validate();
  const double sigma = scale.value;
  check_lambda_sigma(lambda, sigma);
  const std::size_t n = pb.data.size();

  SplineFit fit;
  fit.basis = pb.basis;
  fit.lambda = lambda;
  fit.scale = scale;

  // Warm start: every weight at psi'(0), i.e. the least-squares spline.
  const BandQR penalty_block = penalty_system(*pb.basis, lambda, sigma);
  std::vector<double> w(n, psi_prime_zero(spec));
  fit.coef = weighted_system(pb, penalty_block, spec, w, sigma).solve();
  fit.objective_trace.push_back(objective(pb, spec, lambda, sigma, fit.coef));

  for (int it = 1; it <= options.max_iter; ++it) {
    const auto r = residuals_of(pb, fit.coef);
    for (std::size_t i = 0; i < n; ++i) w[i] = weight(spec, r[i] / sigma);
    auto next = weighted_system(pb, penalty_block, spec, w, sigma).solve();

    double change = 0.0;
    for (std::size_t k = 0; k < next.size(); ++k) {
      change = std::max(change, std::abs(next[k] - fit.coef[k]));
    }
    fit.coef = std::move(next);
    fit.iterations = it;
    fit.objective_trace.push_back(objective(pb, spec, lambda, sigma, fit.coef));
    if (change <= options.tol * linf(fit.coef)) {
      fit.converged = true;
      break;
    }
  }

  fit.residuals = residuals_of(pb, fit.coef);
  fit.raw_weights.resize(n);
  fit.weights.resize(n);
  const double w0 = psi_prime_zero(spec);
  for (std::size_t i = 0; i < n; ++i) {
    fit.raw_weights[i] = weight(spec, fit.residuals[i] / sigma);
    fit.weights[i] = fit.raw_weights[i] / w0;
  }
  fit.objective = fit.objective_trace.back();
  fit.edf = influence_trace(pb, fit.raw_weights, lambda, sigma);
  return fit;
}

ScaleEstimate resolve_simple_scale(const PenalizedProblem& pb, const ScaleChoice& choice) {
  switch (choice.mode) {
    case ScaleMode::Fixed:
      if (!(choice.value > 0.0)) throw Error(ErrorCode::InvalidScale, "fixed scale must be positive");
      return {choice.value, ScaleMethod::Fixed};
    case ScaleMode::Rice:
      return rice_scale(pb.data.y());
    case ScaleMode::TauRefit:
      break;
  }
  throw Error(ErrorCode::InvalidArgument, "tau-refit scale needs a preliminary fit");
}

SplineFit fit_spline(const PenalizedProblem& pb, const LossSpec& spec, double lambda,
                     const FitOptions& options) {
  options.validate();
  if (options.scale.mode != ScaleMode::TauRefit) {
    return fit_with_scale(pb, spec, lambda, resolve_simple_scale(pb, options.scale), options);
  }
  const SplineFit stage1 = fit_with_scale(pb, spec, lambda, rice_scale(pb.data.y()), options);
  return fit_with_scale(pb, spec, lambda, tau_scale(stage1.residuals), options);
}

SplineFit fit_spline(const DesignData& data, const LossSpec& spec, double lambda,
                     const FitOptions& options) {
  options.validate();
  const PenalizedProblem pb(data, options.m, options.max_knots);
  return fit_spline(pb, spec, lambda, options);
}

std::vector<double> predict(const SplineFit& fit, std::span<const double> x, int j) {
  return evaluation_matrix(*fit.basis, x, j).multiply(fit.coef);
}

double sobolev_norm_sq(const BasisSystem& basis, std::span<const double> coef, double lambda) {
  if (coef.size() != basis.n_basis) {
    throw Error(ErrorCode::InvalidArgument, "coefficient length does not match basis");
  }
  return gram_matrix(basis, 0).quadratic_form(coef) + lambda * penalty(basis, coef);
}

}  // namespace mspline
