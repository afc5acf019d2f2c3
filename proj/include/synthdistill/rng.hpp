// Copyright (c) 2026, The synthdistill authors
// SPDX-License-Identifier: Apache-2.0

#ifndef SYNTHDISTILL_RNG_HPP_
#define SYNTHDISTILL_RNG_HPP_

#include <cmath>
#include <cstdint>
#include <numbers>

#include "synthdistill/tensor.hpp"

namespace synthdistill {

// Counter-based generator: output i is a bijective 64-bit mix of (key, i).
// The full state is the (key, counter) pair, so streams can be saved,
// restored and split without any hidden buffering.
class Rng {
 public:
  Rng() = default;
  explicit Rng(std::uint64_t seed) : key_(mix(seed ^ 0x6a09e667f3bcc909ULL)) {}

  static Rng from_state(std::uint64_t key, std::uint64_t counter) {
    Rng r;
    r.key_ = key;
    r.counter_ = counter;
    return r;
  }

  // Independent child stream identified by `tag`. Does not advance this stream.
  Rng split(std::uint64_t tag) const {
    return from_state(mix(key_ ^ mix(tag + 0x3c6ef372fe94f82bULL)), 0);
  }

  std::uint64_t next_u64() { return mix(key_ + kGolden * ++counter_); }

  // Uniform in (0, 1].
  double uniform() { return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53; }

  // Box-Muller; consumes two uniforms and yields two independent normals.
  void normal_pair(double& a, double& b) {
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * std::numbers::pi * u2;
    a = r * std::cos(theta);
    b = r * std::sin(theta);
  }

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

  bool operator==(const Rng&) const = default;

 private:
  static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
};

// I.i.d. standard normal entries, filled in row-major order. An odd-sized
// tensor discards the final spare draw.
template <typename Scalar = double>
Tensor<Scalar> sample_normal(Rng& rng, Eigen::Index rows, Eigen::Index cols) {
  Tensor<Scalar> out(rows, cols);
  Scalar* data = out.data();
  const Eigen::Index n = out.size();
  for (Eigen::Index i = 0; i < n; i += 2) {
    double a, b;
    rng.normal_pair(a, b);
    data[i] = static_cast<Scalar>(a);
    if (i + 1 < n) data[i + 1] = static_cast<Scalar>(b);
  }
  return out;
}

}  // namespace synthdistill

#endif  // SYNTHDISTILL_RNG_HPP_
