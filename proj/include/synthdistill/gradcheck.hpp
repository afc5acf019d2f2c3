// Copyright (c) 2026, The synthdistill authors
// SPDX-License-Identifier: Apache-2.0

#ifndef SYNTHDISTILL_GRADCHECK_HPP_
#define SYNTHDISTILL_GRADCHECK_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "synthdistill/nets.hpp"

namespace synthdistill {

struct GradcheckOptions {
  std::uint64_t seed = 0;
  // Full student widths, input first, embedding dimension last.
  std::vector<int> widths{64, 64, 48, 32};
  Activation activation = Activation::leaky_relu(0.2);
  int batch = 8;
  double step = 1e-6;
  double tolerance = 1e-5;
  // Denominator floor of the relative error; keeps near-zero gradients from
  // turning finite-difference rounding noise into a failure.
  double floor = 1e-3;
  // Corrupts one analytic gradient entry (exercises the failure path).
  bool inject_fault = false;
};

struct GradcheckEntry {
  std::string name;  // e.g. "layer1.weight"
  double max_rel_error = 0.0;
  bool pass = true;
};

struct GradcheckReport {
  std::vector<GradcheckEntry> entries;
  bool pass = true;
};

// |a - n| / max(|a|, |n|, floor)
double gradient_relative_error(double analytic, double numeric, double floor);

// Central differences of the distillation loss against the taped gradient,
// for every parameter of a seeded student distilling a random target.
GradcheckReport gradcheck_student(const GradcheckOptions& options);

}  // namespace synthdistill

#endif  // SYNTHDISTILL_GRADCHECK_HPP_
