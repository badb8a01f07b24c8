#pragma once

// Banded storage, the banded Cholesky factorization and a Givens-rotation
// least-squares accumulator producing the same factor.

#include <cstddef>
#include <span>
#include <vector>

namespace mspline {

/// Sparse matrix whose rows each hold a contiguous run of `width` entries
/// starting at `first_col(i)`. B-spline evaluation matrices have this shape.
class RowBandMatrix {
 public:
  RowBandMatrix() = default;
  RowBandMatrix(std::size_t rows, std::size_t cols, std::size_t width);

  [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
  [[nodiscard]] std::size_t cols() const noexcept { return cols_; }
  [[nodiscard]] std::size_t width() const noexcept { return width_; }

  [[nodiscard]] std::size_t first_col(std::size_t i) const { return first_[i]; }
  void set_first_col(std::size_t i, std::size_t c) { first_[i] = c; }

  [[nodiscard]] std::span<double> row(std::size_t i) {
    return {values_.data() + i * width_, width_};
  }
  [[nodiscard]] std::span<const double> row(std::size_t i) const {
    return {values_.data() + i * width_, width_};
  }

  /// Entry (i, j); zero outside the stored run.
  [[nodiscard]] double at(std::size_t i, std::size_t j) const;

  [[nodiscard]] std::vector<double> multiply(std::span<const double> x) const;
  [[nodiscard]] std::vector<double> transpose_multiply(std::span<const double> v) const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::size_t width_ = 0;
  std::vector<std::size_t> first_;
  std::vector<double> values_;
};

/// Symmetric band matrix, lower triangle stored row-wise:
/// element (i, j) with i - bandwidth <= j <= i.
class SymBandMatrix {
 public:
  SymBandMatrix() = default;
  SymBandMatrix(std::size_t n, std::size_t bandwidth);

  [[nodiscard]] std::size_t size() const noexcept { return n_; }
  [[nodiscard]] std::size_t bandwidth() const noexcept { return bw_; }

  /// Symmetric access; returns 0 outside the band.
  [[nodiscard]] double operator()(std::size_t i, std::size_t j) const;
  /// Mutable reference to (i, j); requires |i - j| <= bandwidth.
  double& ref(std::size_t i, std::size_t j);

  void add_scaled(const SymBandMatrix& other, double alpha);
  void scale(double alpha);

  [[nodiscard]] std::vector<double> multiply(std::span<const double> x) const;
  [[nodiscard]] double quadratic_form(std::span<const double> x) const;

  /// Accumulates alpha * sum_i w_i b_i b_i^T where b_i are the rows of `rows`.
  /// An empty `weights` span means unit weights.
  void add_gram(const RowBandMatrix& rows, std::span<const double> weights, double alpha);

 private:
  std::size_t n_ = 0;
  std::size_t bw_ = 0;
  std::vector<double> data_;  // n * (bw + 1), offset i * (bw + 1) + (bw - (i - j))
};

/// Lower Cholesky factor L of a symmetric positive-definite band matrix.
/// Throws Error(IllPosed) when a pivot is not safely positive.
class BandCholesky {
 public:
  explicit BandCholesky(const SymBandMatrix& a);

  [[nodiscard]] std::size_t size() const noexcept { return n_; }
  [[nodiscard]] std::size_t bandwidth() const noexcept { return bw_; }

  [[nodiscard]] std::vector<double> solve(std::span<const double> b) const;

  /// Entries of A^{-1} inside the band of A (Hutchinson-de Hoog recursion),
  /// returned with the same layout as A.
  [[nodiscard]] SymBandMatrix inverse_band() const;

  [[nodiscard]] double log_determinant() const;

 private:
  friend class BandQR;
  BandCholesky(std::size_t n, std::size_t bw) : n_(n), bw_(bw), data_(n * (bw + 1), 0.0) {}

  [[nodiscard]] double l(std::size_t i, std::size_t j) const {
    return data_[i * (bw_ + 1) + (bw_ - (i - j))];
  }
  double& l(std::size_t i, std::size_t j) { return data_[i * (bw_ + 1) + (bw_ - (i - j))]; }

  std::size_t n_ = 0;
  std::size_t bw_ = 0;
  std::vector<double> data_;
};

/// Least squares min ||M x - z||^2 for a tall matrix whose rows are fed one at
/// a time, each a contiguous run of at most bandwidth + 1 entries. The rows are
/// rotated into an upper band factor R with R^T R = M^T M, so the normal
/// equations are never formed.
class BandQR {
 public:
  BandQR(std::size_t n, std::size_t bandwidth);

  /// Adds the row scale * (values at columns first, first + 1, ...) with
  /// response scale * z.
  void add_row(std::size_t first, std::span<const double> values, double z, double scale = 1.0);

  /// Throws Error(IllPosed) when R is numerically rank deficient.
  [[nodiscard]] std::vector<double> solve() const;

  /// Cholesky factor L = R^T of M^T M (diagonal made positive).
  [[nodiscard]] BandCholesky factor() const;

 private:
  void check_rank() const;

  std::size_t n_ = 0;
  std::size_t bw_ = 0;
  std::vector<double> r_;    // row i holds R(i, i .. i + bw)
  std::vector<double> qtz_;  // Q^T z
  std::vector<double> buf_;
};

}  // namespace mspline
