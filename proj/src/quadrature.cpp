#include "reachkit/quadrature.hpp"

#include <Eigen/Dense>
#include <cmath>

#include "reachkit/errors.hpp"

namespace reachkit {

QuadratureRule gauss_legendre(int n) {
  if (n < 1) throw GeometryError(ErrorCode::kInvalidArgument, "quadrature order must be >= 1");
  Eigen::MatrixXd jacobi = Eigen::MatrixXd::Zero(n, n);
  for (int i = 1; i < n; ++i) {
    const double b = i / std::sqrt(4.0 * i * i - 1.0);
    jacobi(i, i - 1) = b;
    jacobi(i - 1, i) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(jacobi);
  QuadratureRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    // map [-1, 1] -> [0, 1]; the weights on [-1, 1] sum to 2
    rule.nodes[i] = 0.5 * (eig.eigenvalues()(i) + 1.0);
    const double v = eig.eigenvectors()(0, i);
    rule.weights[i] = v * v;
  }
  return rule;
}

}  // namespace reachkit
