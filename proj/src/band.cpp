#include "mspline/band.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <string>

#include "mspline/error.hpp"

namespace mspline {

RowBandMatrix::RowBandMatrix(std::size_t rows, std::size_t cols, std::size_t width)
    : rows_(rows), cols_(cols), width_(width), first_(rows, 0), values_(rows * width, 0.0) {}

double RowBandMatrix::at(std::size_t i, std::size_t j) const {
  const std::size_t f = first_[i];
  if (j < f || j >= f + width_) return 0.0;
  return values_[i * width_ + (j - f)];
}

std::vector<double> RowBandMatrix::multiply(std::span<const double> x) const {
  assert(x.size() == cols_);
  std::vector<double> out(rows_, 0.0);
  for (std::size_t i = 0; i < rows_; ++i) {
    const auto r = row(i);
    double s = 0.0;
    for (std::size_t k = 0; k < width_; ++k) s += r[k] * x[first_[i] + k];
    out[i] = s;
  }
  return out;
}

std::vector<double> RowBandMatrix::transpose_multiply(std::span<const double> v) const {
  assert(v.size() == rows_);
  std::vector<double> out(cols_, 0.0);
  for (std::size_t i = 0; i < rows_; ++i) {
    const auto r = row(i);
    for (std::size_t k = 0; k < width_; ++k) out[first_[i] + k] += r[k] * v[i];
  }
  return out;
}

SymBandMatrix::SymBandMatrix(std::size_t n, std::size_t bandwidth)
    : n_(n), bw_(bandwidth), data_(n * (bandwidth + 1), 0.0) {}

double SymBandMatrix::operator()(std::size_t i, std::size_t j) const {
  if (i < j) std::swap(i, j);
  if (i - j > bw_) return 0.0;
  return data_[i * (bw_ + 1) + (bw_ - (i - j))];
}

double& SymBandMatrix::ref(std::size_t i, std::size_t j) {
  if (i < j) std::swap(i, j);
  assert(i - j <= bw_);
  return data_[i * (bw_ + 1) + (bw_ - (i - j))];
}

void SymBandMatrix::add_scaled(const SymBandMatrix& other, double alpha) {
  assert(other.n_ == n_);
  if (other.bw_ == bw_) {
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += alpha * other.data_[k];
    return;
  }
  assert(other.bw_ <= bw_);
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t j = (i > other.bw_ ? i - other.bw_ : 0); j <= i; ++j) {
      ref(i, j) += alpha * other(i, j);
    }
  }
}

void SymBandMatrix::scale(double alpha) {
  for (double& v : data_) v *= alpha;
}

std::vector<double> SymBandMatrix::multiply(std::span<const double> x) const {
  assert(x.size() == n_);
  std::vector<double> out(n_, 0.0);
  for (std::size_t i = 0; i < n_; ++i) {
    const std::size_t j0 = i > bw_ ? i - bw_ : 0;
    for (std::size_t j = j0; j < i; ++j) {
      const double a = data_[i * (bw_ + 1) + (bw_ - (i - j))];
      out[i] += a * x[j];
      out[j] += a * x[i];
    }
    out[i] += data_[i * (bw_ + 1) + bw_] * x[i];
  }
  return out;
}

double SymBandMatrix::quadratic_form(std::span<const double> x) const {
  const auto ax = multiply(x);
  double s = 0.0;
  for (std::size_t i = 0; i < n_; ++i) s += x[i] * ax[i];
  return s;
}

void SymBandMatrix::add_gram(const RowBandMatrix& rows, std::span<const double> weights,
                             double alpha) {
  assert(rows.cols() == n_);
  assert(rows.width() <= bw_ + 1);
  assert(weights.empty() || weights.size() == rows.rows());
  const std::size_t w = rows.width();
  for (std::size_t i = 0; i < rows.rows(); ++i) {
    const double s = alpha * (weights.empty() ? 1.0 : weights[i]);
    if (s == 0.0) continue;
    const auto r = rows.row(i);
    const std::size_t f = rows.first_col(i);
    for (std::size_t a = 0; a < w; ++a) {
      if (r[a] == 0.0) continue;
      const double sa = s * r[a];
      for (std::size_t b = 0; b <= a; ++b) {
        data_[(f + a) * (bw_ + 1) + (bw_ - (a - b))] += sa * r[b];
      }
    }
  }
}

BandCholesky::BandCholesky(const SymBandMatrix& a)
    : n_(a.size()), bw_(a.bandwidth()), data_(n_ * (bw_ + 1), 0.0) {
  double max_diag = 0.0;
  for (std::size_t i = 0; i < n_; ++i) max_diag = std::max(max_diag, std::abs(a(i, i)));
  const double pivot_floor = 1e-14 * max_diag;

  for (std::size_t j = 0; j < n_; ++j) {
    const std::size_t k0 = j > bw_ ? j - bw_ : 0;
    double d = a(j, j);
    for (std::size_t k = k0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (!(d > pivot_floor)) {
      throw Error(ErrorCode::IllPosed,
                  "band matrix is not numerically positive definite (pivot " +
                      std::to_string(j) + ")");
    }
    const double ljj = std::sqrt(d);
    l(j, j) = ljj;
    const std::size_t i_end = std::min(n_, j + bw_ + 1);
    for (std::size_t i = j + 1; i < i_end; ++i) {
      double s = a(i, j);
      const std::size_t kk = i > bw_ ? i - bw_ : 0;
      for (std::size_t k = std::max(kk, k0); k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / ljj;
    }
  }
}

std::vector<double> BandCholesky::solve(std::span<const double> b) const {
  assert(b.size() == n_);
  std::vector<double> x(b.begin(), b.end());
  for (std::size_t i = 0; i < n_; ++i) {
    const std::size_t k0 = i > bw_ ? i - bw_ : 0;
    double s = x[i];
    for (std::size_t k = k0; k < i; ++k) s -= l(i, k) * x[k];
    x[i] = s / l(i, i);
  }
  for (std::size_t ii = n_; ii-- > 0;) {
    const std::size_t k_end = std::min(n_, ii + bw_ + 1);
    double s = x[ii];
    for (std::size_t k = ii + 1; k < k_end; ++k) s -= l(k, ii) * x[k];
    x[ii] = s / l(ii, ii);
  }
  return x;
}

SymBandMatrix BandCholesky::inverse_band() const {
  // From L^T S = L^{-1}: S_ij = (delta_ij / L_ii - sum_{k>i} L_ki S_kj) / L_ii
  // for j >= i, sweeping rows bottom-up and columns right-to-left.
  SymBandMatrix s(n_, bw_);
  for (std::size_t i = n_; i-- > 0;) {
    const std::size_t k_end = std::min(n_, i + bw_ + 1);
    const double lii = l(i, i);
    for (std::size_t j = k_end; j-- > i;) {
      double acc = (i == j) ? 1.0 / lii : 0.0;
      for (std::size_t k = i + 1; k < k_end; ++k) acc -= l(k, i) * s(k, j);
      s.ref(i, j) = acc / lii;
    }
  }
  return s;
}

double BandCholesky::log_determinant() const {
  double s = 0.0;
  for (std::size_t i = 0; i < n_; ++i) s += 2.0 * std::log(l(i, i));
  return s;
}

BandQR::BandQR(std::size_t n, std::size_t bandwidth)
    : n_(n), bw_(bandwidth), r_(n * (bandwidth + 1), 0.0), qtz_(n, 0.0), buf_(bandwidth + 1) {}

void BandQR::add_row(std::size_t first, std::span<const double> values, double z, double scale) {
  assert(values.size() <= bw_ + 1);
  assert(first + values.size() <= n_ + bw_);
  std::fill(buf_.begin(), buf_.end(), 0.0);
  bool any = false;
  for (std::size_t a = 0; a < values.size(); ++a) {
    buf_[a] = scale * values[a];
    any = any || buf_[a] != 0.0;
  }
  if (!any) return;
  z *= scale;
  for (std::size_t k = first; k < n_; ++k) {
    const double a = buf_[0];
    if (a != 0.0) {
      double* rk = r_.data() + k * (bw_ + 1);
      const double rho = std::sqrt(rk[0] * rk[0] + a * a);
      const double c = rk[0] / rho, s = a / rho;
      for (std::size_t j = 0; j <= bw_; ++j) {
        const double rv = rk[j], bv = buf_[j];
        rk[j] = c * rv + s * bv;
        buf_[j] = c * bv - s * rv;
      }
      const double qv = qtz_[k];
      qtz_[k] = c * qv + s * z;
      z = c * z - s * qv;
    }
    bool rest = false;
    for (std::size_t j = 1; j <= bw_; ++j) {
      buf_[j - 1] = buf_[j];
      rest = rest || buf_[j] != 0.0;
    }
    buf_[bw_] = 0.0;
    if (!rest) break;
  }
}

void BandQR::check_rank() const {
  double max_diag = 0.0;
  for (std::size_t i = 0; i < n_; ++i) max_diag = std::max(max_diag, std::abs(r_[i * (bw_ + 1)]));
  for (std::size_t i = 0; i < n_; ++i) {
    if (!(std::abs(r_[i * (bw_ + 1)]) > 1e-13 * max_diag)) {
      throw Error(ErrorCode::IllPosed,
                  "least-squares system is numerically rank deficient (column " +
                      std::to_string(i) + ")");
    }
  }
}

std::vector<double> BandQR::solve() const {
  check_rank();
  std::vector<double> x(n_);
  for (std::size_t i = n_; i-- > 0;) {
    const double* ri = r_.data() + i * (bw_ + 1);
    double s = qtz_[i];
    for (std::size_t j = 1; j <= bw_ && i + j < n_; ++j) s -= ri[j] * x[i + j];
    x[i] = s / ri[0];
  }
  return x;
}

BandCholesky BandQR::factor() const {
  check_rank();
  BandCholesky f(n_, bw_);
  for (std::size_t i = 0; i < n_; ++i) {
    const double* ri = r_.data() + i * (bw_ + 1);
    const double sign = ri[0] < 0.0 ? -1.0 : 1.0;
    for (std::size_t j = 0; j <= bw_ && i + j < n_; ++j) f.l(i + j, i) = sign * ri[j];
  }
  return f;
}

}  // namespace mspline
