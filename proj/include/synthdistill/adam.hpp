// Copyright (c) 2026, The synthdistill authors
// SPDX-License-Identifier: Apache-2.0

#ifndef SYNTHDISTILL_ADAM_HPP_
#define SYNTHDISTILL_ADAM_HPP_

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "synthdistill/tensor.hpp"

namespace synthdistill {

template <typename Scalar>
struct AdamState {
  std::vector<Tensor<Scalar>> first_moment;
  std::vector<Tensor<Scalar>> second_moment;
  std::uint64_t step = 0;
  Scalar beta1 = Scalar(0.9);
  Scalar beta2 = Scalar(0.999);
  Scalar epsilon = Scalar(1e-8);

  bool operator==(const AdamState&) const = default;
};

// One bias-corrected Adam update: p -= alpha * m_hat / (sqrt(v_hat) + eps).
// Moments are zero-initialized on the first call.
template <typename Scalar>
void adam_step(std::span<Tensor<Scalar>> params, std::span<const Tensor<Scalar>> grads,
               AdamState<Scalar>& state, Scalar alpha) {
  if (params.size() != grads.size())
    throw DimensionError("adam_step: " + std::to_string(params.size()) + " parameters but " +
                         std::to_string(grads.size()) + " gradients");
  if (state.first_moment.empty() && state.step == 0) {
    for (const auto& p : params) {
      state.first_moment.push_back(Tensor<Scalar>::Zero(p.rows(), p.cols()));
      state.second_moment.push_back(Tensor<Scalar>::Zero(p.rows(), p.cols()));
    }
  }
  if (state.first_moment.size() != params.size() || state.second_moment.size() != params.size())
    throw DimensionError("adam_step: optimizer state tracks " +
                         std::to_string(state.first_moment.size()) + " tensors, got " +
                         std::to_string(params.size()));
  for (std::size_t i = 0; i < params.size(); ++i) {
    require_same_shape(params[i], grads[i], "adam_step");
    require_same_shape(params[i], state.first_moment[i], "adam_step");
    require_same_shape(params[i], state.second_moment[i], "adam_step");
  }

  ++state.step;
  const auto t = static_cast<Scalar>(state.step);
  const Scalar bc1 = Scalar(1) - std::pow(state.beta1, t);
  const Scalar bc2 = Scalar(1) - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto m = state.first_moment[i].array();
    auto v = state.second_moment[i].array();
    const auto g = grads[i].array();
    m = state.beta1 * m + (Scalar(1) - state.beta1) * g;
    v = state.beta2 * v + (Scalar(1) - state.beta2) * g.square();
    params[i].array() -= alpha * (m / bc1) / ((v / bc2).sqrt() + state.epsilon);
  }
}

}  // namespace synthdistill

#endif  // SYNTHDISTILL_ADAM_HPP_
