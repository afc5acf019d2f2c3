// Copyright (c) 2026, The synthdistill authors
// SPDX-License-Identifier: Apache-2.0

#include "synthdistill/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "synthdistill/distill.hpp"

namespace synthdistill {

double gradient_relative_error(double analytic, double numeric, double floor) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

GradcheckReport gradcheck_student(const GradcheckOptions& opt) {
  if (opt.widths.size() < 2) throw ConfigError("gradcheck: student needs at least one layer");
  NetSpec spec;
  spec.widths = opt.widths;
  spec.hidden = opt.activation;
  spec.validate("gradcheck student");

  Rng root(opt.seed);
  Rng init_rng = root.split(1);
  Rng data_rng = root.split(2);
  Student<double> student = init_student<double>(spec, init_rng);
  const ImageBatch images = sample_normal(data_rng, opt.batch, spec.input_dim());
  const Embedding target = sample_normal(data_rng, opt.batch, spec.output_dim());

  Tape<double> tape;
  const auto pass = student_embed(tape, student, images);
  const auto loss = kd_loss(target, pass.output);
  tape.backward(loss);
  std::vector<TensorD> grads;
  for (const auto& p : pass.params) grads.push_back(tape.grad(p));
  if (opt.inject_fault && !grads.empty() && grads[0].size() > 0)
    grads[0](0, 0) += 1e-2 * std::max(1.0, std::abs(grads[0](0, 0)));

  GradcheckReport report;
  MlpParams<double> probe = student.params;
  for (std::size_t t = 0; t < probe.tensors.size(); ++t) {
    GradcheckEntry entry;
    entry.name = "layer" + std::to_string(t / 2) + (t % 2 == 0 ? ".weight" : ".bias");
    TensorD& param = probe.tensors[t];
    for (Eigen::Index i = 0; i < param.size(); ++i) {
      const double saved = param.data()[i];
      param.data()[i] = saved + opt.step;
      const TensorD up = forward(spec, probe, images);
      param.data()[i] = saved - opt.step;
      const TensorD down = forward(spec, probe, images);
      param.data()[i] = saved;
      // (L+ - L-) / 2h with the squared terms factored, so the subtraction
      // happens on embeddings rather than on two large loss values.
      const double diff =
          ((up - down).array() * (up + down - 2.0 * target).array()).sum() / opt.batch;
      const double numeric = diff / (2.0 * opt.step);
      const double err = gradient_relative_error(grads[t].data()[i], numeric, opt.floor);
      entry.max_rel_error = std::max(entry.max_rel_error, err);
    }
    entry.pass = entry.max_rel_error < opt.tolerance;
    report.pass = report.pass && entry.pass;
    report.entries.push_back(entry);
  }
  return report;
}

}  // namespace synthdistill
