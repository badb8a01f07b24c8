#include "mspline/basis.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mspline/error.hpp"
#include "mspline/quadrature.hpp"

namespace mspline {

namespace {

void check_sorted_unit(std::span<const double> t) {
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (!std::isfinite(t[i]) || t[i] < 0.0 || t[i] > 1.0) {
      std::ostringstream os;
      os << "design point " << i << " = " << t[i] << " outside [0, 1]";
      throw Error(ErrorCode::InvalidDesign, os.str());
    }
    if (i > 0 && !(t[i] > t[i - 1])) {
      std::ostringstream os;
      os << "design points must be strictly increasing (index " << i << ")";
      throw Error(ErrorCode::InvalidDesign, os.str());
    }
  }
}

std::size_t find_span(const BasisSystem& b, double x) {
  const auto p = static_cast<std::size_t>(b.degree());
  const auto& u = b.knots;
  if (x >= u[b.n_basis]) return b.n_basis - 1;
  const auto it = std::upper_bound(u.begin() + static_cast<std::ptrdiff_t>(p),
                                   u.begin() + static_cast<std::ptrdiff_t>(b.n_basis), x);
  return static_cast<std::size_t>(it - u.begin()) - 1;
}

// Nonzero basis functions and derivatives on knot span s (de Boor / Piegl-Tiller).
void basis_derivs(const BasisSystem& b, std::size_t s, double x, int nder,
                  std::vector<double>& out) {
  const int p = b.degree();
  const auto& u = b.knots;
  const int w = p + 1;
  std::vector<double> ndu(static_cast<std::size_t>(w * w));
  std::vector<double> left(static_cast<std::size_t>(w)), right(static_cast<std::size_t>(w));
  auto N = [&](int i, int j) -> double& { return ndu[static_cast<std::size_t>(i * w + j)]; };

  N(0, 0) = 1.0;
  for (int j = 1; j <= p; ++j) {
    left[j] = x - u[s + 1 - static_cast<std::size_t>(j)];
    right[j] = u[s + static_cast<std::size_t>(j)] - x;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      N(j, r) = right[r + 1] + left[j - r];
      const double tmp = N(r, j - 1) / N(j, r);
      N(r, j) = saved + right[r + 1] * tmp;
      saved = left[j - r] * tmp;
    }
    N(j, j) = saved;
  }

  out.assign(static_cast<std::size_t>(w), 0.0);
  if (nder == 0) {
    for (int r = 0; r <= p; ++r) out[r] = N(r, p);
    return;
  }

  std::vector<double> a(static_cast<std::size_t>(2 * w));
  auto A = [&](int row, int j) -> double& { return a[static_cast<std::size_t>(row * w + j)]; };
  for (int r = 0; r <= p; ++r) {
    int s1 = 0, s2 = 1;
    A(0, 0) = 1.0;
    double d = 0.0;
    for (int k = 1; k <= nder; ++k) {
      d = 0.0;
      const int rk = r - k;
      const int pk = p - k;
      if (r >= k) {
        A(s2, 0) = A(s1, 0) / N(pk + 1, rk);
        d = A(s2, 0) * N(rk, pk);
      }
      const int j1 = rk >= -1 ? 1 : -rk;
      const int j2 = (r - 1 <= pk) ? k - 1 : p - r;
      for (int j = j1; j <= j2; ++j) {
        A(s2, j) = (A(s1, j) - A(s1, j - 1)) / N(pk + 1, rk + j);
        d += A(s2, j) * N(rk + j, pk);
      }
      if (r <= pk) {
        A(s2, k) = -A(s1, k - 1) / N(pk + 1, r);
        d += A(s2, k) * N(r, pk);
      }
      std::swap(s1, s2);
    }
    out[r] = d;
  }
  double factor = 1.0;
  for (int k = 0; k < nder; ++k) factor *= static_cast<double>(p - k);
  for (double& v : out) v *= factor;
}

void check_order(const BasisSystem& b, int j) {
  if (j < 0 || j > b.degree()) {
    std::ostringstream os;
    os << "derivative order " << j << " outside [0, " << b.degree() << "]";
    throw Error(ErrorCode::InvalidArgument, os.str());
  }
}

}  // namespace

DesignData::DesignData(std::vector<double> t, std::vector<double> y)
    : t_(std::move(t)), y_(std::move(y)) {
  if (t_.size() != y_.size()) {
    throw Error(ErrorCode::InvalidDesign, "design points and responses differ in length");
  }
  check_sorted_unit(t_);
  for (double v : y_) {
    if (!std::isfinite(v)) throw Error(ErrorCode::InvalidDesign, "non-finite response");
  }
}

RowBandMatrix penalty_root_rows(const BasisSystem& b) {
  // (f^{(m)})^2 has degree 2m - 2 on each span: m nodes are exact.
  const GaussRule rule = gauss_legendre(static_cast<std::size_t>(b.m));
  std::vector<double> xs;
  std::vector<double> ws;
  for (std::size_t p = 0; p + 1 < b.breakpoints.size(); ++p) {
    const double lo = b.breakpoints[p], hi = b.breakpoints[p + 1];
    const double half = 0.5 * (hi - lo), mid = 0.5 * (lo + hi);
    for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
      xs.push_back(mid + half * rule.nodes[q]);
      ws.push_back(std::sqrt(half * rule.weights[q]));
    }
  }
  RowBandMatrix rows = derivative_matrix(b, xs, b.m);
  for (std::size_t i = 0; i < rows.rows(); ++i) {
    for (double& v : rows.row(i)) v *= ws[i];
  }
  return rows;
}

BasisSystem build_basis(std::span<const double> t, int m, std::size_t max_knots) {
  if (m < 1) throw Error(ErrorCode::InvalidArgument, "penalty order m must be >= 1");
  check_sorted_unit(t);
  if (t.size() < static_cast<std::size_t>(m) || t.size() < 2) {
    std::ostringstream os;
    os << "need at least max(m, 2) = " << std::max(m, 2) << " design points, got " << t.size();
    throw Error(ErrorCode::InsufficientData, os.str());
  }

  BasisSystem b;
  b.m = m;
  const std::size_t n = t.size();
  if (max_knots >= 2 && n > max_knots) {
    b.breakpoints.reserve(max_knots);
    for (std::size_t i = 0; i < max_knots; ++i) {
      const auto idx = static_cast<std::size_t>(
          std::llround(static_cast<double>(i) * static_cast<double>(n - 1) /
                       static_cast<double>(max_knots - 1)));
      b.breakpoints.push_back(t[idx]);
    }
  } else {
    b.breakpoints.assign(t.begin(), t.end());
  }

  const auto k = static_cast<std::size_t>(b.order());
  const std::size_t nk = b.breakpoints.size();
  b.knots.reserve(nk + 2 * (k - 1));
  b.knots.insert(b.knots.end(), k - 1, b.breakpoints.front());
  b.knots.insert(b.knots.end(), b.breakpoints.begin(), b.breakpoints.end());
  b.knots.insert(b.knots.end(), k - 1, b.breakpoints.back());
  b.n_basis = nk + k - 2;
  b.omega = gram_matrix(b, m);
  b.penalty_root = penalty_root_rows(b);
  return b;
}

LocalBasis eval_local(const BasisSystem& basis, double x, int j) {
  check_order(basis, j);
  if (!(x >= basis.lower() && x <= basis.upper())) {
    std::ostringstream os;
    os << "evaluation point " << x << " outside knot range [" << basis.lower() << ", "
       << basis.upper() << "]";
    throw Error(ErrorCode::OutOfRange, os.str());
  }
  const std::size_t s = find_span(basis, x);
  LocalBasis out;
  out.first = s - static_cast<std::size_t>(basis.degree());
  basis_derivs(basis, s, x, j, out.values);
  return out;
}

RowBandMatrix derivative_matrix(const BasisSystem& basis, std::span<const double> x, int j) {
  check_order(basis, j);
  RowBandMatrix out(x.size(), basis.n_basis, static_cast<std::size_t>(basis.order()));
  for (std::size_t i = 0; i < x.size(); ++i) {
    const LocalBasis lb = eval_local(basis, x[i], j);
    out.set_first_col(i, lb.first);
    std::copy(lb.values.begin(), lb.values.end(), out.row(i).begin());
  }
  return out;
}

RowBandMatrix design_matrix(const BasisSystem& basis, std::span<const double> x) {
  return derivative_matrix(basis, x, 0);
}

RowBandMatrix evaluation_matrix(const BasisSystem& basis, std::span<const double> x, int j) {
  check_order(basis, j);
  const auto w = static_cast<std::size_t>(basis.order());
  RowBandMatrix out(x.size(), basis.n_basis, w);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double xi = x[i];
    if (!(xi >= 0.0 && xi <= 1.0)) {
      std::ostringstream os;
      os << "evaluation point " << xi << " outside [0, 1]";
      throw Error(ErrorCode::OutOfRange, os.str());
    }
    if (xi >= basis.lower() && xi <= basis.upper()) {
      const LocalBasis lb = eval_local(basis, xi, j);
      out.set_first_col(i, lb.first);
      std::copy(lb.values.begin(), lb.values.end(), out.row(i).begin());
      continue;
    }
    // Taylor continuation of degree m - 1 from the nearest end of the knot span.
    const double anchor = xi < basis.lower() ? basis.lower() : basis.upper();
    const double h = xi - anchor;
    auto row = out.row(i);
    std::fill(row.begin(), row.end(), 0.0);
    out.set_first_col(i, eval_local(basis, anchor, 0).first);
    for (int l = j; l < basis.m; ++l) {
      const LocalBasis lb = eval_local(basis, anchor, l);
      double c = 1.0;
      for (int q = 1; q <= l - j; ++q) c *= h / static_cast<double>(q);
      for (std::size_t a = 0; a < w; ++a) row[a] += c * lb.values[a];
    }
  }
  return out;
}

SymBandMatrix gram_matrix(const BasisSystem& basis, int j) {
  check_order(basis, j);
  // Integrand is a piecewise polynomial of degree 2(2m - 1 - j).
  const int nodes = 2 * basis.m - j;
  const GaussRule rule = gauss_legendre(static_cast<std::size_t>(nodes));

  std::vector<double> panels;
  if (basis.lower() > 0.0 && j < basis.m) panels.push_back(0.0);
  panels.insert(panels.end(), basis.breakpoints.begin(), basis.breakpoints.end());
  if (basis.upper() < 1.0 && j < basis.m) panels.push_back(1.0);

  std::vector<double> xs;
  std::vector<double> ws;
  xs.reserve((panels.size() - 1) * rule.nodes.size());
  ws.reserve(xs.capacity());
  for (std::size_t p = 0; p + 1 < panels.size(); ++p) {
    const double a = panels[p], b = panels[p + 1];
    const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
    for (std::size_t q = 0; q < rule.nodes.size(); ++q) {
      xs.push_back(mid + half * rule.nodes[q]);
      ws.push_back(half * rule.weights[q]);
    }
  }
  const RowBandMatrix rows = evaluation_matrix(basis, xs, j);
  SymBandMatrix g(basis.n_basis, static_cast<std::size_t>(basis.degree()));
  g.add_gram(rows, ws, 1.0);
  return g;
}

std::vector<double> polynomial_coefficients(const BasisSystem& basis,
                                            std::span<const double> poly) {
  const int p = basis.degree();
  if (poly.size() > static_cast<std::size_t>(p + 1)) {
    throw Error(ErrorCode::InvalidArgument, "polynomial degree must be below 2m");
  }
  // x^k = sum_i [e_k(u_{i+1}, ..., u_{i+p}) / C(p, k)] B_i(x)
  std::vector<double> coef(basis.n_basis, 0.0);
  std::vector<double> e(static_cast<std::size_t>(p + 1));
  for (std::size_t i = 0; i < basis.n_basis; ++i) {
    std::fill(e.begin(), e.end(), 0.0);
    e[0] = 1.0;
    for (int q = 1; q <= p; ++q) {
      const double u = basis.knots[i + static_cast<std::size_t>(q)];
      for (int k = q; k >= 1; --k) e[k] += u * e[k - 1];
    }
    double binom = 1.0;
    double s = 0.0;
    for (std::size_t k = 0; k < poly.size(); ++k) {
      if (k > 0) binom = binom * static_cast<double>(p - static_cast<int>(k) + 1) / static_cast<double>(k);
      s += poly[k] * e[k] / binom;
    }
    coef[i] = s;
  }
  return coef;
}

}  // namespace mspline
