// Copyright (c) 2026, The synthdistill authors
// SPDX-License-Identifier: Apache-2.0
//
// Dense row-major tensors and the value-level (untaped) primitives.
// Every quantity in the library is a rank-2 tensor: rows index the batch,
// columns index features. Vectors are 1×n or n×1 matrices.

#ifndef SYNTHDISTILL_TENSOR_HPP_
#define SYNTHDISTILL_TENSOR_HPP_

#include <Eigen/Dense>

#include <cmath>
#include <string>

#include "synthdistill/errors.hpp"

namespace synthdistill {

template <typename Scalar>
using Tensor = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename Scalar>
using RowVector = Eigen::Matrix<Scalar, 1, Eigen::Dynamic>;

template <typename Scalar>
using ColVector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using TensorD = Tensor<double>;

template <typename Derived>
std::string shape_str(const Eigen::EigenBase<Derived>& t) {
  return "[" + std::to_string(t.rows()) + "x" + std::to_string(t.cols()) + "]";
}

template <typename A, typename B>
void require_same_shape(const Eigen::EigenBase<A>& a, const Eigen::EigenBase<B>& b,
                        const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_str(a) + " vs " +
                         shape_str(b));
}

template <typename Derived>
bool all_finite(const Eigen::DenseBase<Derived>& t) {
  return t.derived().array().isFinite().all();
}

enum class ActivationKind { kIdentity, kRelu, kTanh, kLeakyRelu };

struct Activation {
  ActivationKind kind = ActivationKind::kIdentity;
  double slope = 0.2;  // leaky-relu negative slope

  static Activation identity() { return {ActivationKind::kIdentity, 0.0}; }
  static Activation relu() { return {ActivationKind::kRelu, 0.0}; }
  static Activation tanh() { return {ActivationKind::kTanh, 0.0}; }
  static Activation leaky_relu(double slope) { return {ActivationKind::kLeakyRelu, slope}; }

  bool operator==(const Activation&) const = default;
};

std::string to_string(const Activation& a);
// Parses "identity", "relu", "tanh", "leaky-relu" or "leaky-relu(0.1)".
Activation parse_activation(const std::string& text);

template <typename Scalar>
Tensor<Scalar> matmul(const Tensor<Scalar>& a, const Tensor<Scalar>& b) {
  if (a.cols() != b.rows())
    throw DimensionError("matmul: inner dimensions differ " + shape_str(a) + " x " +
                         shape_str(b));
  return a * b;
}

template <typename Scalar>
Tensor<Scalar> activate(const Tensor<Scalar>& x, const Activation& act) {
  switch (act.kind) {
    case ActivationKind::kIdentity:
      return x;
    case ActivationKind::kRelu:
      return x.cwiseMax(Scalar(0));
    case ActivationKind::kTanh:
      return x.array().tanh().matrix();
    case ActivationKind::kLeakyRelu: {
      const Scalar slope(act.slope);
      return x.unaryExpr([slope](Scalar v) { return v > Scalar(0) ? v : slope * v; });
    }
  }
  return x;
}

// Derivative of the activation, written in terms of the pre-activation input
// and the activation output (tanh uses the latter).
template <typename Scalar>
Tensor<Scalar> activation_derivative(const Tensor<Scalar>& input, const Tensor<Scalar>& output,
                                     const Activation& act) {
  switch (act.kind) {
    case ActivationKind::kIdentity:
      return Tensor<Scalar>::Ones(input.rows(), input.cols());
    case ActivationKind::kRelu:
      return input.unaryExpr([](Scalar v) { return v > Scalar(0) ? Scalar(1) : Scalar(0); });
    case ActivationKind::kTanh:
      return (Scalar(1) - output.array().square()).matrix();
    case ActivationKind::kLeakyRelu: {
      const Scalar slope(act.slope);
      return input.unaryExpr([slope](Scalar v) { return v > Scalar(0) ? Scalar(1) : slope; });
    }
  }
  return Tensor<Scalar>::Ones(input.rows(), input.cols());
}

// Mean over all entries of the squared difference.
template <typename Scalar>
Scalar mse(const Tensor<Scalar>& a, const Tensor<Scalar>& b) {
  require_same_shape(a, b, "mse");
  if (a.size() == 0) return Scalar(0);
  return (a - b).squaredNorm() / Scalar(a.size());
}

// Per-row sum of squared differences, ||a_i - b_i||^2.
template <typename Scalar>
ColVector<Scalar> row_squared_distance(const Tensor<Scalar>& a, const Tensor<Scalar>& b) {
  require_same_shape(a, b, "row_squared_distance");
  return (a - b).rowwise().squaredNorm();
}

}  // namespace synthdistill

#endif  // SYNTHDISTILL_TENSOR_HPP_
