#pragma once

#include <cstddef>
#include <vector>

namespace mspline {

struct GaussRule {
  std::vector<double> nodes;    // on [-1, 1], ascending
  std::vector<double> weights;
};

/// n-point Gauss-Legendre rule, exact for polynomials of degree 2n - 1.
GaussRule gauss_legendre(std::size_t n);

}  // namespace mspline
