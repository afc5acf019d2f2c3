// Copyright (c) 2026, The synthdistill authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <cmath>
#include <type_traits>

#include "synthdistill/distill.hpp"
#include "synthdistill/nets.hpp"

using namespace synthdistill;

namespace {

// Applies fn to each row on its own and stacks the results.
template <typename Fn>
TensorD rowwise_oracle(const TensorD& x, Fn fn) {
  TensorD out;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const TensorD row = fn(TensorD(x.row(i)));
    if (i == 0) out.resize(x.rows(), row.cols());
    out.row(i) = row.row(0);
  }
  return out;
}

// Batched products may use a different summation order than single rows.
bool close(const TensorD& a, const TensorD& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         (a - b).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, b.cwiseAbs().maxCoeff());
}

FrozenNet<double> identity_net(int width) {
  NetSpec spec;
  spec.widths = {width};
  return FrozenNet<double>(spec, MlpParams<double>{});
}

template <typename T>
concept TapedMember = requires(Tape<double>& t, const T& f, const TensorD& x) { f.embed(t, x); };

template <typename T>
concept TapedFree = requires(Tape<double>& t, const T& f, const TensorD& x) { teacher_embed(t, f, x); };

}  // namespace

TEST_CASE("frozen stack is determined by its seed") {
  const NetworkConfig nets;
  const auto a = build_world(nets, 5);
  const auto b = build_world(nets, 5);
  const auto c = build_world(nets, 6);
  CHECK(a.fingerprints() == b.fingerprints());
  CHECK(a.fingerprints().mapping != c.fingerprints().mapping);
  CHECK(a.fingerprints().teacher != c.fingerprints().teacher);
  CHECK(a.stack.mapping().params().frozen);
  CHECK(a.stack.generator().params().frozen);
  CHECK(a.teacher.net().params().frozen);

  Rng rng(1);
  const TensorD z = sample_normal(rng, 3, nets.dims.d_z);
  CHECK(mapping_forward(a.stack, z) == mapping_forward(b.stack, z));
  CHECK(generator_forward(a.stack, mapping_forward(a.stack, z)) ==
        generator_forward(b.stack, mapping_forward(b.stack, z)));
}

TEST_CASE("tanh generator output stays in [-1, 1]") {
  NetworkConfig nets;
  nets.dims = {8, 8, 64};
  const auto world = build_world(nets, 3);
  Rng rng(2);
  const TensorD z = sample_normal(rng, 2000, 8) * 3.0;
  const TensorD img = generator_forward(world.stack, mapping_forward(world.stack, z));
  CHECK(img.cols() == 64);
  CHECK(img.maxCoeff() <= 1.0);
  CHECK(img.minCoeff() >= -1.0);
}

TEST_CASE("image statistics over 10^4 latents") {
  const NetworkConfig nets;
  for (std::uint64_t seed : {1, 2, 3}) {
    CAPTURE(seed);
    const auto world = build_world(nets, seed);
    Rng rng(seed + 100);
    const TensorD img =
        world.stack.generate(world.stack.map(sample_normal(rng, 10000, nets.dims.d_z)));
    const TensorD centered = img.rowwise() - img.colwise().mean();
    const RowVector<double> sd =
        (centered.array().square().colwise().sum() / double(img.rows() - 1)).sqrt();
    CHECK(sd.minCoeff() >= 0.05);
    CHECK(sd.maxCoeff() <= 1.0);
  }
}

TEST_CASE("identity-configured mapping, generator and teacher pass inputs through") {
  const GeneratorStack<double> stack(identity_net(6), identity_net(6));
  Rng rng(4);
  const TensorD v = sample_normal(rng, 3, 6);
  CHECK(mapping_forward(stack, v) == v);
  CHECK(generator_forward(stack, v) == v);

  const Teacher<double> teacher(identity_net(6));
  CHECK(teacher_embed(teacher, v) == v);
}

TEST_CASE("dimension mismatches are rejected") {
  const auto world = build_world(NetworkConfig{}, 1);
  CHECK_THROWS_AS(mapping_forward(world.stack, TensorD(TensorD::Zero(2, 5))), DimensionError);
  CHECK_THROWS_AS(generator_forward(world.stack, TensorD(TensorD::Zero(2, 5))), DimensionError);
  CHECK_THROWS_AS(teacher_embed(world.teacher, TensorD(TensorD::Zero(2, 5))), DimensionError);
  CHECK_THROWS_AS(GeneratorStack<double>(identity_net(4), identity_net(5)), DimensionError);

  Rng rng(1);
  const Student<double> student = init_student(NetworkConfig{}.student_spec(), rng);
  Tape<double> tape;
  CHECK_THROWS_AS(student_embed(tape, student, TensorD(TensorD::Zero(2, 5))), DimensionError);
}

TEST_CASE("zero dims are config errors") {
  NetworkConfig nets;
  nets.dims.d_w = 0;
  CHECK_THROWS_AS(build_world(nets, 1), ConfigError);
  CHECK_THROWS_AS(NetSpec::mlp(4, {0}, 2, Activation::relu()).validate("x"), ConfigError);
}

TEST_CASE("batch equivariance") {
  const NetworkConfig nets;
  const auto world = build_world(nets, 2);
  Rng rng(9);
  const Student<double> student = init_student(nets.student_spec(), rng);
  const TensorD z = sample_normal(rng, 5, nets.dims.d_z);
  const TensorD w = world.stack.map(z);
  const TensorD img = world.stack.generate(w);

  CHECK(close(w, rowwise_oracle(z, [&](const TensorD& r) { return world.stack.map(r); })));
  CHECK(close(img, rowwise_oracle(w, [&](const TensorD& r) { return world.stack.generate(r); })));
  CHECK(close(world.teacher.embed(img),
              rowwise_oracle(img, [&](const TensorD& r) { return world.teacher.embed(r); })));
  CHECK(close(student_embed_values(student, img),
              rowwise_oracle(img, [&](const TensorD& r) { return student_embed_values(student, r); })));

  // batch of 2 equals two batches of 1
  const TensorD two = world.stack.map(TensorD(z.topRows(2)));
  TensorD singles(2, two.cols());
  singles.row(0) = world.stack.map(TensorD(z.row(0))).row(0);
  singles.row(1) = world.stack.map(TensorD(z.row(1))).row(0);
  CHECK(close(two, singles));
}

TEST_CASE("teacher embeddings are rarely zero") {
  const NetworkConfig nets;
  const auto world = build_world(nets, 1);
  Rng rng(12);
  const TensorD img = world.stack.generate(world.stack.map(sample_normal(rng, 10000, nets.dims.d_z)));
  const TensorD e = world.teacher.embed(img);
  CHECK(e.cols() == nets.d_emb);
  CHECK(e == world.teacher.embed(img));
  Eigen::Index positive = 0;
  for (Eigen::Index i = 0; i < e.rows(); ++i) positive += e.row(i).norm() > 0.0;
  CHECK(double(positive) / double(e.rows()) >= 0.999);
}

TEST_CASE("teacher offers values only") {
  // No overload accepts a tape, so no gradient can be requested through the teacher.
  CHECK_FALSE(TapedMember<Teacher<double>>);
  CHECK_FALSE(TapedFree<Teacher<double>>);
  static_assert(std::is_same_v<decltype(teacher_embed(std::declval<const Teacher<double>&>(),
                                                      std::declval<const TensorD&>())),
                               TensorD>);
}

TEST_CASE("teacher-side normalization gives unit rows") {
  NetworkConfig nets;
  nets.teacher_normalize = true;
  const auto world = build_world(nets, 1);
  Rng rng(3);
  const TensorD e = world.teacher.embed(world.stack.generate(world.stack.map(sample_normal(rng, 20, 16))));
  for (Eigen::Index i = 0; i < e.rows(); ++i) CHECK(e.row(i).norm() == doctest::Approx(1.0));
}

TEST_CASE("student projection head maps backbone features to d_emb") {
  const NetworkConfig nets;
  const NetSpec spec = nets.student_spec();
  CHECK(spec.widths == std::vector<int>{64, 64, 48, 32});
  CHECK(spec.widths[spec.widths.size() - 2] != nets.d_emb);
  CHECK(spec.output == Activation::identity());

  Rng r1(5), r2(5);
  const Student<double> a = init_student(spec, r1);
  const Student<double> b = init_student(spec, r2);
  CHECK(a == b);
  Rng rng(6);
  const TensorD img = sample_normal(rng, 4, 64);
  const TensorD e = student_embed_values(a, img);
  CHECK(e.rows() == 4);
  CHECK(e.cols() == 32);
  CHECK(e == student_embed_values(b, img));

  Tape<double> tape;
  const auto pass = student_embed(tape, a, img);
  CHECK(tape.value(pass.output) == e);
  CHECK(pass.params.size() == a.params.tensors.size());
}

TEST_CASE("frozen parameters cannot enter a student tape") {
  Rng rng(1);
  Student<double> s = init_student(NetworkConfig{}.student_spec(), rng);
  s.params.frozen = true;
  Tape<double> tape;
  CHECK_THROWS_AS(student_embed(tape, s, TensorD(TensorD::Zero(1, 64))), ContractError);
}

TEST_CASE("student gradient of mse matches finite differences") {
  const NetSpec spec = NetSpec::mlp(10, {8, 6}, 4, Activation::leaky_relu(0.2));
  Rng rng(21);
  Student<double> student = init_student(spec, rng);
  const TensorD img = sample_normal(rng, 5, 10);
  const TensorD target = sample_normal(rng, 5, 4);

  Tape<double> tape;
  const auto pass = student_embed(tape, student, img);
  tape.backward(mse(pass.output, tape.constant(target)));

  const double h = 1e-6;
  for (std::size_t t = 0; t < student.params.tensors.size(); ++t) {
    for (Eigen::Index i = 0; i < student.params.tensors[t].size(); ++i) {
      double& entry = student.params.tensors[t].data()[i];
      const double saved = entry;
      entry = saved + h;
      const TensorD up = student_embed_values(student, img);
      entry = saved - h;
      const TensorD down = student_embed_values(student, img);
      entry = saved;
      const double numeric =
          ((up - down).array() * (up + down - 2 * target).array()).sum() / double(up.size()) / (2 * h);
      const double analytic = tape.grad(pass.params[t]).data()[i];
      CHECK(std::abs(numeric - analytic) / std::max({std::abs(numeric), std::abs(analytic), 1e-3}) <
            1e-5);
    }
  }
}

TEST_CASE("realizable teacher") {
  const NetSpec spec = NetworkConfig{}.student_spec();
  const MlpParams<double> t1 = make_realizable_teacher(spec, 1);
  const MlpParams<double> t2 = make_realizable_teacher(spec, 2);
  CHECK(t1.frozen);
  CHECK(fingerprint(t1) != fingerprint(t2));
  CHECK_NOTHROW(check_conforms(spec, t1));

  // student initialized at the teacher's parameters has zero loss on any batch
  Student<double> student{spec, t1};
  student.params.frozen = false;
  const Teacher<double> teacher(FrozenNet<double>(spec, t1));
  Rng rng(8);
  for (int trial = 0; trial < 5; ++trial) {
    const TensorD img = sample_normal(rng, 16, 64);
    CHECK(kd_loss(teacher.embed(img), student_embed_values(student, img)) == 0.0);
  }
}

TEST_CASE("fingerprints see every parameter and shape") {
  Rng rng(3);
  const NetSpec spec = NetSpec::mlp(3, {4}, 2, Activation::relu());
  MlpParams<double> p = init_mlp(spec, rng, true);
  const std::string base = fingerprint(p);
  CHECK(base.size() == 64);
  for (std::size_t t = 0; t < p.tensors.size(); ++t) {
    MlpParams<double> q = p;
    q.tensors[t](0, 0) = std::nextafter(q.tensors[t](0, 0), 1e9);
    CHECK(fingerprint(q) != base);
  }
  // known digest of the empty message
  CHECK(sha256_hex({}) == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST_CASE("init scale") {
  // First layer entries follow N(0, 1/fan_in); later layers carry the activation gain.
  const NetSpec spec = NetSpec::mlp(400, {300}, 200, Activation::relu());
  Rng rng(17);
  const MlpParams<double> p = init_mlp(spec, rng, false);
  const auto sd = [](const TensorD& t) { return std::sqrt(t.array().square().mean()); };
  CHECK(sd(p.weight(0)) == doctest::Approx(1.0 / std::sqrt(400.0)).epsilon(0.01));
  CHECK(sd(p.weight(1)) == doctest::Approx(std::sqrt(2.0) / std::sqrt(300.0)).epsilon(0.01));
  CHECK(variance_preserving_gain(Activation::tanh()) == 1.0);
  CHECK(variance_preserving_gain(Activation::leaky_relu(0.2)) ==
        doctest::Approx(std::sqrt(2.0 / 1.04)));
}
