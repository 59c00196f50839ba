#pragma once

#include <vector>

namespace reachkit {

// Gauss-Legendre rule on [0, 1].
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// Golub-Welsch: eigenvalues of the Jacobi matrix are the nodes, squared first
// eigenvector components the weights. Exact for polynomials of degree 2n - 1.
QuadratureRule gauss_legendre(int n);

}  // namespace reachkit
