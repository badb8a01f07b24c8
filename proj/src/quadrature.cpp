#include "mspline/quadrature.hpp"

#include <cmath>
#include <numbers>

#include "mspline/error.hpp"

namespace mspline {

GaussRule gauss_legendre(std::size_t n) {
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "gauss_legendre: n must be positive");
  GaussRule rule{std::vector<double>(n), std::vector<double>(n)};
  const double nn = static_cast<double>(n);
  for (std::size_t i = 0; i < (n + 1) / 2; ++i) {
    // Newton on P_n starting from the Chebyshev-like guess for the i-th root.
    double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (nn + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (std::size_t k = 2; k <= n; ++k) {
        const double kk = static_cast<double>(k);
        const double p2 = ((2.0 * kk - 1.0) * x * p1 - (kk - 1.0) * p0) / kk;
        p0 = p1;
        p1 = p2;
      }
      dp = nn * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    // Recompute the derivative at the converged root for the weight.
    double p0 = 1.0, p1 = x;
    for (std::size_t k = 2; k <= n; ++k) {
      const double kk = static_cast<double>(k);
      const double p2 = ((2.0 * kk - 1.0) * x * p1 - (kk - 1.0) * p0) / kk;
      p0 = p1;
      p1 = p2;
    }
    dp = nn * (x * p1 - p0) / (x * x - 1.0);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    rule.nodes[i] = -x;
    rule.nodes[n - 1 - i] = x;
    rule.weights[i] = w;
    rule.weights[n - 1 - i] = w;
  }
  if (n % 2 == 1) rule.nodes[n / 2] = 0.0;
  return rule;
}

}  // namespace mspline
