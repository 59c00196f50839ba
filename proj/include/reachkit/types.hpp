#pragma once

#include <Eigen/Dense>

namespace reachkit {

// Largest model dimension supported. Bounded-size dynamic Eigen types keep
// every small vector on the stack.
inline constexpr int kMaxDim = 8;

template <typename Scalar>
using VectorX = Eigen::Matrix<Scalar, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxDim, 1>;

template <typename Scalar>
using MatrixX = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor, kMaxDim, kMaxDim>;

using Vector = VectorX<double>;
using Matrix = MatrixX<double>;

// Coordinates of a point in the model representation of an ambient space.
using Point = Vector;

// Tangent vector in model coordinates; the base point is passed alongside.
using Tangent = Vector;

// Point in the parameter domain of an immersion.
using ParamPoint = Vector;

}  // namespace reachkit
