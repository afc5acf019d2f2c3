// Copyright (c) 2026, The synthdistill authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <vector>

#include "synthdistill/adam.hpp"
#include "synthdistill/autodiff.hpp"
#include "synthdistill/nets.hpp"
#include "synthdistill/rng.hpp"
#include "synthdistill/tensor.hpp"

using namespace synthdistill;

namespace {

TensorD mat(std::initializer_list<std::initializer_list<double>> rows) {
  TensorD t(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
  Eigen::Index i = 0;
  for (const auto& r : rows) {
    Eigen::Index j = 0;
    for (double v : r) t(i, j++) = v;
    ++i;
  }
  return t;
}

// Triple-loop product, independent of Eigen's kernels.
TensorD loop_matmul(const TensorD& a, const TensorD& b) {
  TensorD out = TensorD::Zero(a.rows(), b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < b.cols(); ++j)
      for (Eigen::Index k = 0; k < a.cols(); ++k) out(i, j) += a(i, k) * b(k, j);
  return out;
}

}  // namespace

TEST_CASE("matmul") {
  const TensorD a = mat({{1, 2}, {3, 4}});
  CHECK(matmul(a, TensorD(TensorD::Identity(2, 2))) == a);
  CHECK(matmul(TensorD(TensorD::Identity(2, 2)), mat({{5}, {7}})) == mat({{5}, {7}}));
  CHECK(matmul(a, mat({{1}, {1}})) == mat({{3}, {7}}));

  Rng rng(5);
  const TensorD x = sample_normal(rng, 7, 5);
  const TensorD y = sample_normal(rng, 5, 3);
  CHECK((matmul(x, y) - loop_matmul(x, y)).cwiseAbs().maxCoeff() < 1e-12);

  try {
    matmul(a, TensorD(3, 1));
    FAIL("expected DimensionError");
  } catch (const DimensionError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("[2x2]") != std::string::npos);
    CHECK(msg.find("[3x1]") != std::string::npos);
  }
}

TEST_CASE("activations") {
  CHECK(activate(mat({{-1, 0, 2}}), Activation::relu()) == mat({{0, 0, 2}}));
  CHECK(activate(mat({{0}}), Activation::tanh()) == mat({{0}}));
  CHECK(activate(mat({{-5}}), Activation::leaky_relu(0.2))(0, 0) == doctest::Approx(-1.0));
  CHECK(activate(mat({{3}}), Activation::leaky_relu(0.2))(0, 0) == 3.0);

  CHECK(parse_activation("leaky-relu(0.1)") == Activation::leaky_relu(0.1));
  CHECK(parse_activation(to_string(Activation::leaky_relu(0.37))) == Activation::leaky_relu(0.37));
  CHECK_THROWS_AS(parse_activation("swish"), ConfigError);
}

TEST_CASE("mse") {
  Rng rng(1);
  const TensorD x = sample_normal(rng, 4, 3);
  CHECK(mse(x, x) == 0.0);
  CHECK(mse(mat({{1, 1}}), mat({{0, 0}})) == 1.0);
  CHECK(mse(mat({{3}}), mat({{1}})) == 4.0);
  CHECK(row_squared_distance(mat({{1, 0}, {1, 1}}), mat({{0, 0}, {0, 0}})) ==
        ColVector<double>((ColVector<double>(2) << 1, 2).finished()));
  CHECK_THROWS_AS(mse(mat({{1, 2}}), mat({{1}, {2}})), DimensionError);

  // symmetric, non-negative, zero only on equality
  for (int trial = 0; trial < 50; ++trial) {
    const TensorD a = sample_normal(rng, 3, 4);
    const TensorD b = sample_normal(rng, 3, 4);
    CHECK(mse(a, b) == mse(b, a));
    CHECK(mse(a, b) > 0.0);
  }
}

TEST_CASE("backward basics") {
  Tape<double> tape;
  auto x = tape.parameter(mat({{2}}));
  auto loss = mse(x, tape.constant(mat({{0}})));
  tape.backward(loss);
  CHECK(tape.grad(x)(0, 0) == doctest::Approx(4.0));

  Tape<double> t2;
  auto p = t2.parameter(mat({{1, 2}}));
  auto q = t2.parameter(mat({{3}}));
  auto l2 = sum_squares(q);
  t2.backward(l2);
  CHECK(t2.grad(p).isZero());
  CHECK(t2.grad(q)(0, 0) == doctest::Approx(6.0));

  Tape<double> t3;
  auto v = t3.parameter(mat({{1, 2}}));
  CHECK_THROWS_AS(t3.backward(v), ContractError);

  Tape<double> other;
  auto foreign = other.parameter(mat({{1}}));
  CHECK_THROWS_AS(matmul(v, foreign), ContractError);
}

TEST_CASE("tape nodes are topologically ordered") {
  Tape<double> tape;
  auto a = tape.parameter(mat({{1, 2}}));
  auto b = tape.parameter(mat({{3}, {4}}));
  auto c = matmul(a, b);
  auto d = sum_squares(c - tape.constant(mat({{1}})));
  for (std::size_t i = 0; i < tape.size(); ++i)
    for (auto in : tape.inputs(i)) CHECK(in < i);
  tape.backward(d);
  // d = (a.b - 1)^2 = 100; dd/da = 2 * 10 * b^T
  CHECK(tape.grad(a)(0, 0) == doctest::Approx(60.0));
  CHECK(tape.grad(a)(0, 1) == doctest::Approx(80.0));
}

// Central differences for an arbitrary scalar function of one tensor entry.
TEST_CASE("gradients of random networks match finite differences") {
  const std::vector<Activation> kinds = {Activation::relu(), Activation::tanh(),
                                         Activation::leaky_relu(0.2), Activation::identity()};
  for (std::size_t k = 0; k < kinds.size(); ++k) {
    CAPTURE(to_string(kinds[k]));
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
      Rng rng(100 + seed * 7 + k);
      const NetSpec spec = NetSpec::mlp(5, {6, 4}, 3, kinds[k]);
      MlpParams<double> params = init_mlp<double>(spec, rng, false);
      const TensorD x = sample_normal(rng, 4, 5);
      const TensorD y = sample_normal(rng, 4, 3);

      Tape<double> tape;
      auto pass = forward(tape, spec, params, x);
      auto loss = mse(pass.output, tape.constant(y));
      tape.backward(loss);

      const double h = 1e-6;
      for (std::size_t t = 0; t < params.tensors.size(); ++t) {
        for (Eigen::Index i = 0; i < params.tensors[t].size(); ++i) {
          double& entry = params.tensors[t].data()[i];
          const double saved = entry;
          entry = saved + h;
          const double up = mse(forward(spec, params, x), y);
          entry = saved - h;
          const double down = mse(forward(spec, params, x), y);
          entry = saved;
          const double numeric = (up - down) / (2 * h);
          const double analytic = tape.grad(pass.params[t]).data()[i];
          const double denom = std::max({std::abs(numeric), std::abs(analytic), 1e-3});
          CHECK(std::abs(numeric - analytic) / denom < 1e-5);
        }
      }
    }
  }
}

TEST_CASE("adam") {
  SUBCASE("zero gradient leaves parameters unchanged") {
    Rng rng(3);
    std::vector<TensorD> params = {sample_normal(rng, 3, 2), sample_normal(rng, 1, 2)};
    const auto before = params;
    const std::vector<TensorD> grads = {TensorD::Zero(3, 2), TensorD::Zero(1, 2)};
    AdamState<double> state;
    for (int i = 0; i < 5; ++i) adam_step<double>(params, grads, state, 0.1);
    CHECK(params == before);
    CHECK(state.step == 5);
    for (const auto& m : state.second_moment) CHECK(all_finite(m));
  }
  SUBCASE("first step moves by alpha * g / (|g| + eps)") {
    std::vector<TensorD> params = {mat({{0.0}})};
    const std::vector<TensorD> grads = {mat({{1.0}})};
    AdamState<double> state;
    adam_step<double>(params, grads, state, 0.1);
    CHECK(params[0](0, 0) == doctest::Approx(-0.1 * 1.0 / (1.0 + 1e-8)).epsilon(1e-12));
    CHECK(state.step == 1);
  }
  SUBCASE("identical calls on cloned state agree bitwise") {
    Rng rng(4);
    std::vector<TensorD> p1 = {sample_normal(rng, 2, 2)};
    const std::vector<TensorD> g = {sample_normal(rng, 2, 2)};
    AdamState<double> s1;
    adam_step<double>(p1, g, s1, 0.01);
    auto p2 = p1;
    auto s2 = s1;
    adam_step<double>(p1, g, s1, 0.01);
    adam_step<double>(p2, g, s2, 0.01);
    CHECK(p1 == p2);
    CHECK(s1 == s2);
  }
  SUBCASE("shape mismatch") {
    std::vector<TensorD> params = {TensorD::Zero(2, 2)};
    const std::vector<TensorD> grads = {TensorD::Zero(2, 3)};
    AdamState<double> state;
    CHECK_THROWS_AS(adam_step<double>(params, grads, state, 0.1), DimensionError);
    const std::vector<TensorD> none;
    CHECK_THROWS_AS(adam_step<double>(params, none, state, 0.1), DimensionError);
  }
}

TEST_CASE("sample_normal") {
  Rng a(42), b(42);
  CHECK(sample_normal(a, 5, 7) == sample_normal(b, 5, 7));
  CHECK(a == b);

  Rng e(1);
  CHECK(sample_normal(e, 0, 1).size() == 0);

  Rng big(7);
  const TensorD x = sample_normal(big, 1, 1000000);
  const double mean = x.mean();
  const double sd = std::sqrt((x.array() - mean).square().sum() / (x.size() - 1));
  CHECK(std::abs(mean) < 0.01);
  CHECK(sd > 0.99);
  CHECK(sd < 1.01);
  CHECK(all_finite(x));
}

TEST_CASE("rng state and streams") {
  Rng r(9);
  r.next_u64();
  r.next_u64();
  Rng copy = Rng::from_state(r.key(), r.counter());
  CHECK(copy.next_u64() == r.next_u64());

  // split does not advance the parent and children differ
  Rng parent(9);
  const auto before = parent;
  Rng c1 = parent.split(1);
  Rng c2 = parent.split(2);
  CHECK(parent == before);
  CHECK(c1.next_u64() != c2.next_u64());

  // uniform stays inside (0, 1]
  Rng u(3);
  for (int i = 0; i < 10000; ++i) {
    const double v = u.uniform();
    CHECK(v > 0.0);
    CHECK(v <= 1.0);
  }
}
