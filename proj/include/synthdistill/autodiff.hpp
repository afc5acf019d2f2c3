// Copyright (c) 2026, The synthdistill authors
// SPDX-License-Identifier: Apache-2.0
//
// Reverse-mode automatic differentiation over a recorded tape.
//
// A Tape owns every intermediate value produced while it is active. Nodes
// are appended in execution order, so the node list is topologically sorted
// by construction and the backward pass is a single reverse sweep. Only
// scalar (1×1) outputs may be differentiated.
//
//   Tape<double> tape;
//   auto w = tape.parameter(weights);
//   auto x = tape.constant(inputs);
//   auto loss = mse(matmul(x, w), tape.constant(targets));
//   tape.backward(loss);
//   const auto& dw = tape.grad(w);

#ifndef SYNTHDISTILL_AUTODIFF_HPP_
#define SYNTHDISTILL_AUTODIFF_HPP_

#include <cstddef>
#include <functional>
#include <utility>
#include <vector>

#include "synthdistill/errors.hpp"
#include "synthdistill/tensor.hpp"

namespace synthdistill {

template <typename Scalar>
class Tape;

// Handle to a tape node. Cheap to copy; valid while its tape is alive.
template <typename Scalar>
struct Var {
  Tape<Scalar>* tape = nullptr;
  std::size_t id = 0;

  const Tensor<Scalar>& value() const { return tape->value(*this); }
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
};

template <typename Scalar>
class Tape {
 public:
  using Matrix = Tensor<Scalar>;
  // Reads the node's own gradient and accumulates into its inputs' slots.
  using BackwardFn = std::function<void(Tape&, std::size_t self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;
  Tape(Tape&&) = default;
  Tape& operator=(Tape&&) = default;

  Var<Scalar> parameter(Matrix value) { return push(std::move(value), {}, nullptr, true); }
  Var<Scalar> constant(Matrix value) { return push(std::move(value), {}, nullptr, false); }

  // Appends an interior node. It requires a gradient iff any input does.
  Var<Scalar> record(Matrix value, std::vector<std::size_t> inputs, BackwardFn backward) {
    bool needs = false;
    for (auto i : inputs) needs = needs || nodes_[i].requires_grad;
    return push(std::move(value), std::move(inputs), needs ? std::move(backward) : nullptr,
                needs);
  }

  const Matrix& value(Var<Scalar> v) const { return node(v).value; }
  const Matrix& value(std::size_t id) const { return nodes_[id].value; }

  // Gradient slot of a node. Zero for nodes that do not reach the loss.
  const Matrix& grad(Var<Scalar> v) const { return node(v).grad; }
  Matrix& grad_slot(std::size_t id) { return nodes_[id].grad; }
  const std::vector<std::size_t>& inputs(std::size_t id) const { return nodes_[id].inputs; }

  bool requires_grad(Var<Scalar> v) const { return node(v).requires_grad; }
  std::size_t size() const { return nodes_.size(); }

  // Populates gradient slots for every node with respect to `loss`.
  void backward(Var<Scalar> loss) {
    const Node& out = node(loss);
    if (out.value.rows() != 1 || out.value.cols() != 1)
      throw ContractError("backward: loss must be scalar, got " + shape_str(out.value));
    for (auto& n : nodes_) n.grad.setZero(n.value.rows(), n.value.cols());
    nodes_[loss.id].grad(0, 0) = Scalar(1);
    for (std::size_t i = loss.id + 1; i-- > 0;) {
      if (nodes_[i].backward) nodes_[i].backward(*this, i);
    }
  }

  void check_owner(Var<Scalar> v) const {
    if (v.tape != this || v.id >= nodes_.size())
      throw ContractError("autodiff: variable does not belong to this tape");
  }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    std::vector<std::size_t> inputs;
    BackwardFn backward;
    bool requires_grad = false;
  };

  const Node& node(Var<Scalar> v) const {
    check_owner(v);
    return nodes_[v.id];
  }

  Var<Scalar> push(Matrix value, std::vector<std::size_t> inputs, BackwardFn backward,
                   bool requires_grad) {
    nodes_.push_back(Node{std::move(value), Matrix(), std::move(inputs), std::move(backward),
                          requires_grad});
    return Var<Scalar>{this, nodes_.size() - 1};
  }

  std::vector<Node> nodes_;
};

namespace detail {

template <typename Scalar>
Tape<Scalar>& common_tape(Var<Scalar> a, Var<Scalar> b) {
  if (a.tape == nullptr || a.tape != b.tape)
    throw ContractError("autodiff: operands recorded on different tapes");
  a.tape->check_owner(a);
  a.tape->check_owner(b);
  return *a.tape;
}

}  // namespace detail

template <typename Scalar>
Var<Scalar> matmul(Var<Scalar> a, Var<Scalar> b) {
  auto& tape = detail::common_tape(a, b);
  Tensor<Scalar> out = matmul(a.value(), b.value());
  return tape.record(std::move(out), {a.id, b.id}, [](Tape<Scalar>& t, std::size_t self) {
    const auto& g = t.grad_slot(self);
    const auto ia = t.inputs(self)[0];
    const auto ib = t.inputs(self)[1];
    t.grad_slot(ia).noalias() += g * t.value(ib).transpose();
    t.grad_slot(ib).noalias() += t.value(ia).transpose() * g;
  });
}

// x + bias, where bias is a 1×n row broadcast over the rows of x.
template <typename Scalar>
Var<Scalar> add_bias(Var<Scalar> x, Var<Scalar> bias) {
  auto& tape = detail::common_tape(x, bias);
  if (bias.rows() != 1 || bias.cols() != x.cols())
    throw DimensionError("add_bias: bias " + shape_str(bias.value()) + " does not broadcast over " +
                         shape_str(x.value()));
  Tensor<Scalar> out = x.value().rowwise() + bias.value().row(0);
  return tape.record(std::move(out), {x.id, bias.id}, [](Tape<Scalar>& t, std::size_t self) {
    const auto& g = t.grad_slot(self);
    t.grad_slot(t.inputs(self)[0]) += g;
    t.grad_slot(t.inputs(self)[1]) += g.colwise().sum();
  });
}

template <typename Scalar>
Var<Scalar> activate(Var<Scalar> x, const Activation& act) {
  auto& tape = *x.tape;
  tape.check_owner(x);
  if (act.kind == ActivationKind::kIdentity) return x;
  Tensor<Scalar> out = activate(x.value(), act);
  return tape.record(std::move(out), {x.id}, [act](Tape<Scalar>& t, std::size_t self) {
    const auto in = t.inputs(self)[0];
    const Tensor<Scalar> d = activation_derivative(t.value(in), t.value(self), act);
    t.grad_slot(in).array() += t.grad_slot(self).array() * d.array();
  });
}

template <typename Scalar>
Var<Scalar> operator+(Var<Scalar> a, Var<Scalar> b) {
  auto& tape = detail::common_tape(a, b);
  require_same_shape(a.value(), b.value(), "add");
  Tensor<Scalar> out = a.value() + b.value();
  return tape.record(std::move(out), {a.id, b.id}, [](Tape<Scalar>& t, std::size_t self) {
    t.grad_slot(t.inputs(self)[0]) += t.grad_slot(self);
    t.grad_slot(t.inputs(self)[1]) += t.grad_slot(self);
  });
}

template <typename Scalar>
Var<Scalar> operator-(Var<Scalar> a, Var<Scalar> b) {
  auto& tape = detail::common_tape(a, b);
  require_same_shape(a.value(), b.value(), "sub");
  Tensor<Scalar> out = a.value() - b.value();
  return tape.record(std::move(out), {a.id, b.id}, [](Tape<Scalar>& t, std::size_t self) {
    t.grad_slot(t.inputs(self)[0]) += t.grad_slot(self);
    t.grad_slot(t.inputs(self)[1]) -= t.grad_slot(self);
  });
}

template <typename Scalar>
Var<Scalar> scale(Var<Scalar> x, Scalar factor) {
  auto& tape = *x.tape;
  tape.check_owner(x);
  Tensor<Scalar> out = x.value() * factor;
  return tape.record(std::move(out), {x.id}, [factor](Tape<Scalar>& t, std::size_t self) {
    t.grad_slot(t.inputs(self)[0]) += t.grad_slot(self) * factor;
  });
}

// Sum of squares of all entries, as a 1×1 node.
template <typename Scalar>
Var<Scalar> sum_squares(Var<Scalar> x) {
  auto& tape = *x.tape;
  tape.check_owner(x);
  Tensor<Scalar> out(1, 1);
  out(0, 0) = x.value().squaredNorm();
  return tape.record(std::move(out), {x.id}, [](Tape<Scalar>& t, std::size_t self) {
    const auto in = t.inputs(self)[0];
    t.grad_slot(in) += (Scalar(2) * t.grad_slot(self)(0, 0)) * t.value(in);
  });
}

// Mean over all entries of (a - b)^2.
template <typename Scalar>
Var<Scalar> mse(Var<Scalar> a, Var<Scalar> b) {
  require_same_shape(a.value(), b.value(), "mse");
  const auto n = a.value().size();
  return scale(sum_squares(a - b), n > 0 ? Scalar(1) / Scalar(n) : Scalar(0));
}

}  // namespace synthdistill

#endif  // SYNTHDISTILL_AUTODIFF_HPP_
