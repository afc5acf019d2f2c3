// Copyright (c) 2026, The synthdistill authors
// SPDX-License-Identifier: Apache-2.0
//
// Multilayer perceptrons standing in for the generator stack (mapping
// network Z→W and generator W→image), the frozen teacher embedder, and the
// trainable student with its projection head.

#ifndef SYNTHDISTILL_NETS_HPP_
#define SYNTHDISTILL_NETS_HPP_

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "synthdistill/autodiff.hpp"
#include "synthdistill/errors.hpp"
#include "synthdistill/rng.hpp"
#include "synthdistill/tensor.hpp"

namespace synthdistill {

// Gain that keeps activation variance roughly constant through `act`.
inline double variance_preserving_gain(const Activation& act) {
  switch (act.kind) {
    case ActivationKind::kRelu:
      return std::sqrt(2.0);
    case ActivationKind::kLeakyRelu:
      return std::sqrt(2.0 / (1.0 + act.slope * act.slope));
    case ActivationKind::kTanh:
    case ActivationKind::kIdentity:
      return 1.0;
  }
  return 1.0;
}

// Layer widths from input to output. A single width is the identity map.
struct NetSpec {
  std::vector<int> widths;
  Activation hidden = Activation::leaky_relu(0.2);
  Activation output = Activation::identity();
  // Init multiplier for layers fed by a hidden activation.
  double init_gain = 1.0;

  int input_dim() const { return widths.front(); }
  int output_dim() const { return widths.back(); }
  std::size_t layers() const { return widths.size() - 1; }
  const Activation& activation_after(std::size_t layer) const {
    return layer + 1 == layers() ? output : hidden;
  }

  void validate(const std::string& name) const {
    if (widths.empty()) throw ConfigError(name + ": network needs at least one width");
    for (int w : widths)
      if (w <= 0) throw ConfigError(name + ": layer widths must be positive");
  }

  static NetSpec mlp(int in, const std::vector<int>& hidden_widths, int out, Activation hidden,
                     Activation output = Activation::identity()) {
    NetSpec s;
    s.widths.push_back(in);
    s.widths.insert(s.widths.end(), hidden_widths.begin(), hidden_widths.end());
    s.widths.push_back(out);
    s.hidden = hidden;
    s.output = output;
    s.init_gain = variance_preserving_gain(hidden);
    return s;
  }

  bool operator==(const NetSpec&) const = default;
};

// Flat parameter list: [W0, b0, W1, b1, ...], W_l is (in × out), b_l is (1 × out).
template <typename Scalar>
struct MlpParams {
  std::vector<Tensor<Scalar>> tensors;
  bool frozen = false;

  Tensor<Scalar>& weight(std::size_t layer) { return tensors[2 * layer]; }
  Tensor<Scalar>& bias(std::size_t layer) { return tensors[2 * layer + 1]; }
  const Tensor<Scalar>& weight(std::size_t layer) const { return tensors[2 * layer]; }
  const Tensor<Scalar>& bias(std::size_t layer) const { return tensors[2 * layer + 1]; }
  std::size_t layers() const { return tensors.size() / 2; }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& t : tensors) n += static_cast<std::size_t>(t.size());
    return n;
  }

  bool operator==(const MlpParams&) const = default;
};

template <typename Scalar>
void check_conforms(const NetSpec& spec, const MlpParams<Scalar>& params) {
  if (params.tensors.size() != 2 * spec.layers())
    throw DimensionError("parameters hold " + std::to_string(params.tensors.size()) +
                         " tensors, network expects " + std::to_string(2 * spec.layers()));
  for (std::size_t l = 0; l < spec.layers(); ++l) {
    const auto& w = params.weight(l);
    const auto& b = params.bias(l);
    if (w.rows() != spec.widths[l] || w.cols() != spec.widths[l + 1] || b.rows() != 1 ||
        b.cols() != spec.widths[l + 1])
      throw DimensionError("layer " + std::to_string(l) + " parameters " + shape_str(w) + "/" +
                           shape_str(b) + " do not match widths " +
                           std::to_string(spec.widths[l]) + "->" +
                           std::to_string(spec.widths[l + 1]));
  }
}

// Weights and biases ~ N(0, 1/fan_in); layers after the first are further
// scaled by spec.init_gain.
template <typename Scalar = double>
MlpParams<Scalar> init_mlp(const NetSpec& spec, Rng& rng, bool frozen) {
  spec.validate("init_mlp");
  MlpParams<Scalar> p;
  p.frozen = frozen;
  for (std::size_t l = 0; l < spec.layers(); ++l) {
    const int in = spec.widths[l];
    const int out = spec.widths[l + 1];
    const Scalar scale =
        (l == 0 ? Scalar(1) : static_cast<Scalar>(spec.init_gain)) / std::sqrt(Scalar(in));
    p.tensors.push_back(sample_normal<Scalar>(rng, in, out) * scale);
    p.tensors.push_back(sample_normal<Scalar>(rng, 1, out) * scale);
  }
  return p;
}

template <typename Scalar>
Tensor<Scalar> forward(const NetSpec& spec, const MlpParams<Scalar>& params,
                       const Tensor<Scalar>& x) {
  if (x.cols() != spec.input_dim())
    throw DimensionError("forward: input " + shape_str(x) + " but network expects width " +
                         std::to_string(spec.input_dim()));
  check_conforms(spec, params);
  Tensor<Scalar> h = x;
  for (std::size_t l = 0; l < spec.layers(); ++l) {
    Tensor<Scalar> pre = h * params.weight(l);
    pre.rowwise() += params.bias(l).row(0);
    h = activate(pre, spec.activation_after(l));
  }
  return h;
}

template <typename Scalar>
struct TapedForward {
  Var<Scalar> output;
  std::vector<Var<Scalar>> params;  // parallel to MlpParams::tensors
};

template <typename Scalar>
TapedForward<Scalar> forward(Tape<Scalar>& tape, const NetSpec& spec,
                             const MlpParams<Scalar>& params, const Tensor<Scalar>& x) {
  if (x.cols() != spec.input_dim())
    throw DimensionError("forward: input " + shape_str(x) + " but network expects width " +
                         std::to_string(spec.input_dim()));
  check_conforms(spec, params);
  TapedForward<Scalar> out;
  for (const auto& t : params.tensors) out.params.push_back(tape.parameter(t));
  Var<Scalar> h = tape.constant(x);
  for (std::size_t l = 0; l < spec.layers(); ++l) {
    h = add_bias(matmul(h, out.params[2 * l]), out.params[2 * l + 1]);
    h = activate(h, spec.activation_after(l));
  }
  out.output = h;
  return out;
}

std::string sha256_hex(std::span<const unsigned char> bytes);

// Fingerprint over the exact bit patterns of every parameter.
template <typename Scalar>
std::string fingerprint(const MlpParams<Scalar>& params) {
  std::vector<unsigned char> bytes;
  for (const auto& t : params.tensors) {
    const auto* p = reinterpret_cast<const unsigned char*>(t.data());
    bytes.insert(bytes.end(), p, p + t.size() * sizeof(Scalar));
    const std::int64_t dims[2] = {t.rows(), t.cols()};
    const auto* d = reinterpret_cast<const unsigned char*>(dims);
    bytes.insert(bytes.end(), d, d + sizeof(dims));
  }
  return sha256_hex(bytes);
}

// A network whose parameters cannot change after construction.
template <typename Scalar>
class FrozenNet {
 public:
  FrozenNet() = default;
  FrozenNet(NetSpec spec, MlpParams<Scalar> params) : spec_(std::move(spec)), params_(std::move(params)) {
    spec_.validate("frozen net");
    check_conforms(spec_, params_);
    params_.frozen = true;
  }

  Tensor<Scalar> operator()(const Tensor<Scalar>& x) const { return forward(spec_, params_, x); }
  const NetSpec& spec() const { return spec_; }
  const MlpParams<Scalar>& params() const { return params_; }
  std::string fingerprint() const { return synthdistill::fingerprint(params_); }

 private:
  NetSpec spec_;
  MlpParams<Scalar> params_;
};

struct GeneratorDims {
  int d_z = 16;
  int d_w = 16;
  int d_img = 64;

  void validate() const {
    if (d_z <= 0 || d_w <= 0 || d_img <= 0)
      throw ConfigError("generator dims must be positive (d_z=" + std::to_string(d_z) +
                        ", d_w=" + std::to_string(d_w) + ", d_img=" + std::to_string(d_img) + ")");
  }
};

// Frozen mapping network M: Z -> W followed by generator G: W -> image.
template <typename Scalar>
class GeneratorStack {
 public:
  GeneratorStack() = default;
  GeneratorStack(FrozenNet<Scalar> mapping, FrozenNet<Scalar> generator)
      : mapping_(std::move(mapping)), generator_(std::move(generator)) {
    if (mapping_.spec().output_dim() != generator_.spec().input_dim())
      throw DimensionError("generator stack: mapping emits " +
                           std::to_string(mapping_.spec().output_dim()) +
                           " but generator consumes " +
                           std::to_string(generator_.spec().input_dim()));
  }

  int d_z() const { return mapping_.spec().input_dim(); }
  int d_w() const { return mapping_.spec().output_dim(); }
  int d_img() const { return generator_.spec().output_dim(); }

  Tensor<Scalar> map(const Tensor<Scalar>& z) const { return mapping_(z); }
  Tensor<Scalar> generate(const Tensor<Scalar>& w) const { return generator_(w); }

  const FrozenNet<Scalar>& mapping() const { return mapping_; }
  const FrozenNet<Scalar>& generator() const { return generator_; }

 private:
  FrozenNet<Scalar> mapping_;
  FrozenNet<Scalar> generator_;
};

// Builds M and G from one seed. Specs must agree with `dims`.
template <typename Scalar = double>
GeneratorStack<Scalar> init_frozen_stack(std::uint64_t seed, const GeneratorDims& dims,
                                         const NetSpec& mapping_spec,
                                         const NetSpec& generator_spec) {
  dims.validate();
  mapping_spec.validate("mapping");
  generator_spec.validate("generator");
  if (mapping_spec.input_dim() != dims.d_z || mapping_spec.output_dim() != dims.d_w)
    throw ConfigError("mapping widths must run d_z -> d_w");
  if (generator_spec.input_dim() != dims.d_w || generator_spec.output_dim() != dims.d_img)
    throw ConfigError("generator widths must run d_w -> d_img");
  Rng root(seed);
  Rng mapping_rng = root.split(1);
  Rng generator_rng = root.split(2);
  return GeneratorStack<Scalar>(
      FrozenNet<Scalar>(mapping_spec, init_mlp<Scalar>(mapping_spec, mapping_rng, true)),
      FrozenNet<Scalar>(generator_spec, init_mlp<Scalar>(generator_spec, generator_rng, true)));
}

template <typename Scalar>
Tensor<Scalar> mapping_forward(const GeneratorStack<Scalar>& stack, const Tensor<Scalar>& z) {
  if (z.cols() != stack.d_z())
    throw DimensionError("mapping_forward: latent " + shape_str(z) + " but d_z = " +
                         std::to_string(stack.d_z()));
  return stack.map(z);
}

template <typename Scalar>
Tensor<Scalar> generator_forward(const GeneratorStack<Scalar>& stack, const Tensor<Scalar>& w) {
  if (w.cols() != stack.d_w())
    throw DimensionError("generator_forward: latent " + shape_str(w) + " but d_w = " +
                         std::to_string(stack.d_w()));
  return stack.generate(w);
}

// Blackbox embedder. Exposes embedding values only; there is no taped path
// through the teacher, so no gradient can be requested from it.
template <typename Scalar>
class Teacher {
 public:
  Teacher() = default;
  explicit Teacher(FrozenNet<Scalar> net, bool l2_normalize = false)
      : net_(std::move(net)), l2_normalize_(l2_normalize) {}

  int input_dim() const { return net_.spec().input_dim(); }
  int embedding_dim() const { return net_.spec().output_dim(); }

  Tensor<Scalar> embed(const Tensor<Scalar>& images) const {
    if (images.cols() != input_dim())
      throw DimensionError("teacher_embed: images " + shape_str(images) +
                           " but teacher expects width " + std::to_string(input_dim()));
    Tensor<Scalar> e = net_(images);
    if (l2_normalize_) {
      for (Eigen::Index i = 0; i < e.rows(); ++i) {
        const Scalar n = e.row(i).norm();
        if (n > Scalar(0)) e.row(i) /= n;
      }
    }
    return e;
  }

  bool l2_normalize() const { return l2_normalize_; }
  const FrozenNet<Scalar>& net() const { return net_; }
  std::string fingerprint() const { return net_.fingerprint(); }

 private:
  FrozenNet<Scalar> net_;
  bool l2_normalize_ = false;
};

template <typename Scalar>
Tensor<Scalar> teacher_embed(const Teacher<Scalar>& teacher, const Tensor<Scalar>& images) {
  return teacher.embed(images);
}

// Trainable student. The last layer is the projection head onto d_emb.
template <typename Scalar>
struct Student {
  NetSpec spec;
  MlpParams<Scalar> params;

  int embedding_dim() const { return spec.output_dim(); }
  bool operator==(const Student&) const = default;
};

template <typename Scalar = double>
Student<Scalar> init_student(const NetSpec& spec, Rng& rng) {
  spec.validate("student");
  if (spec.layers() == 0) throw ConfigError("student needs at least the projection head layer");
  return Student<Scalar>{spec, init_mlp<Scalar>(spec, rng, false)};
}

template <typename Scalar>
TapedForward<Scalar> student_embed(Tape<Scalar>& tape, const Student<Scalar>& student,
                                   const Tensor<Scalar>& images) {
  if (student.params.frozen) throw ContractError("student_embed: student parameters are frozen");
  return forward(tape, student.spec, student.params, images);
}

template <typename Scalar>
Tensor<Scalar> student_embed_values(const Student<Scalar>& student, const Tensor<Scalar>& images) {
  return forward(student.spec, student.params, images);
}

// A frozen teacher with exactly the student's architecture, so zero
// distillation loss is attainable.
template <typename Scalar = double>
MlpParams<Scalar> make_realizable_teacher(const NetSpec& student_spec, std::uint64_t seed) {
  Rng rng = Rng(seed).split(7);
  return init_mlp<Scalar>(student_spec, rng, true);
}

}  // namespace synthdistill

#endif  // SYNTHDISTILL_NETS_HPP_
