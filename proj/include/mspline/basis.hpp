#pragma once

// B-spline basis of order 2m on knots at the design points, together with
// the exact Gram matrix of m-th derivatives (the roughness penalty).

#include <cstddef>
#include <span>
#include <vector>

#include "mspline/band.hpp"

namespace mspline {

/// Ordered design points t_i in [0, 1] (strictly increasing) with responses.
class DesignData {
 public:
  /// Validates and takes ownership. Throws Error(InvalidDesign) on unsorted,
  /// duplicated or out-of-[0,1] points and on length mismatch.
  DesignData(std::vector<double> t, std::vector<double> y);

  [[nodiscard]] std::size_t size() const noexcept { return t_.size(); }
  [[nodiscard]] std::span<const double> t() const noexcept { return t_; }
  [[nodiscard]] std::span<const double> y() const noexcept { return y_; }

 private:
  std::vector<double> t_;
  std::vector<double> y_;
};

struct BasisSystem {
  int m = 2;                        ///< penalty order
  std::vector<double> breakpoints;  ///< distinct knots, t_1 < ... < t_K
  std::vector<double> knots;        ///< full knot vector, ends replicated 2m times
  std::size_t n_basis = 0;          ///< K + 2m - 2
  SymBandMatrix omega;              ///< int (B_a^{(m)} B_b^{(m)}), bandwidth 2m - 1
  /// Rows sqrt(w_q) B^{(m)}(x_q) at m Gauss nodes per knot span, so that
  /// omega = penalty_root^T penalty_root and ||penalty_root c||^2 is the penalty.
  RowBandMatrix penalty_root;

  [[nodiscard]] int order() const noexcept { return 2 * m; }
  [[nodiscard]] int degree() const noexcept { return 2 * m - 1; }
  [[nodiscard]] double lower() const noexcept { return breakpoints.front(); }
  [[nodiscard]] double upper() const noexcept { return breakpoints.back(); }
};

/// Builds the basis with one interior knot per design point. A positive
/// `max_knots` thins the breakpoints to that many (always keeping both ends).
/// Throws InvalidDesign / InsufficientData / InvalidArgument.
BasisSystem build_basis(std::span<const double> t, int m, std::size_t max_knots = 0);

/// The 2m B-spline values (or j-th derivatives) that can be nonzero at x.
struct LocalBasis {
  std::size_t first = 0;
  std::vector<double> values;
};

/// Requires x in [lower, upper] and 0 <= j <= 2m - 1.
LocalBasis eval_local(const BasisSystem& basis, double x, int j);

/// Rows of B-spline values at x; throws OutOfRange outside the knot span.
RowBandMatrix design_matrix(const BasisSystem& basis, std::span<const double> x);

/// Rows of j-th derivatives; j = 0 reproduces design_matrix.
RowBandMatrix derivative_matrix(const BasisSystem& basis, std::span<const double> x, int j);

/// Like derivative_matrix but accepts any x in [0, 1]. Outside the knot span the
/// spline is continued by its degree-(m-1) Taylor polynomial at the nearest end,
/// i.e. the natural-spline continuation that carries no roughness penalty.
RowBandMatrix evaluation_matrix(const BasisSystem& basis, std::span<const double> x, int j);

/// Square root of the penalty as Gauss-node rows (see BasisSystem::penalty_root).
RowBandMatrix penalty_root_rows(const BasisSystem& basis);

/// Exact Gram matrix of j-th derivatives over [0, 1] (natural continuation
/// included). gram_matrix(basis, basis.m) equals basis.omega.
SymBandMatrix gram_matrix(const BasisSystem& basis, int j);

/// Coefficients reproducing the polynomial sum_k poly[k] x^k (degree < 2m)
/// exactly, via Marsden's identity.
std::vector<double> polynomial_coefficients(const BasisSystem& basis,
                                            std::span<const double> poly);

}  // namespace mspline
