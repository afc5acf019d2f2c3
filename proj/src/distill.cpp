// Copyright (c) 2026, The synthdistill authors
// SPDX-License-Identifier: Apache-2.0

#include "synthdistill/distill.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include "synthdistill/log.hpp"

namespace synthdistill {

std::string to_string(ResampleSpace space) {
  switch (space) {
    case ResampleSpace::kW:
      return "w";
    case ResampleSpace::kZ:
      return "z";
    case ResampleSpace::kNone:
      return "none";
  }
  return "none";
}

std::string to_string(SimSource source) {
  return source == SimSource::kPreUpdate ? "pre-update" : "post-update";
}

ResampleSpace parse_resample_space(const std::string& text) {
  if (text == "w" || text == "W") return ResampleSpace::kW;
  if (text == "z" || text == "Z") return ResampleSpace::kZ;
  if (text == "none") return ResampleSpace::kNone;
  throw ConfigError("resample_space must be one of w, z, none (got '" + text + "')");
}

SimSource parse_sim_source(const std::string& text) {
  if (text == "pre-update") return SimSource::kPreUpdate;
  if (text == "post-update") return SimSource::kPostUpdate;
  throw ConfigError("sim_source must be pre-update or post-update (got '" + text + "')");
}

NetSpec NetworkConfig::mapping_spec() const {
  return NetSpec::mlp(dims.d_z, mapping_hidden, dims.d_w, mapping_activation);
}

NetSpec NetworkConfig::generator_spec() const {
  return NetSpec::mlp(dims.d_w, generator_hidden, dims.d_img, generator_activation,
                      generator_tanh_output ? Activation::tanh() : Activation::identity());
}

NetSpec NetworkConfig::teacher_spec() const {
  if (realizable_teacher) return student_spec();
  return NetSpec::mlp(dims.d_img, teacher_hidden, d_emb, teacher_activation);
}

NetSpec NetworkConfig::student_spec() const {
  return NetSpec::mlp(dims.d_img, student_hidden, d_emb, student_activation);
}

void NetworkConfig::validate() const {
  dims.validate();
  if (d_emb <= 0) throw ConfigError("d_emb must be positive");
  for (const auto* widths : {&mapping_hidden, &generator_hidden, &teacher_hidden, &student_hidden})
    for (int w : *widths)
      if (w <= 0) throw ConfigError("hidden widths must be positive");
}

void TrainConfig::validate() const {
  if (n_epoch <= 0) throw ConfigError("n_epoch must be positive");
  if (n_iteration <= 0) throw ConfigError("n_iteration must be positive");
  if (batch_size <= 0) throw ConfigError("batch_size must be positive");
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ConfigError("alpha must be positive");
  if (!(c >= 0.0) || !std::isfinite(c)) throw ConfigError("c must be non-negative");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0)) throw ConfigError("adam_beta1 must be in [0, 1)");
  if (!(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) throw ConfigError("adam_beta2 must be in [0, 1)");
  if (!(adam_epsilon > 0.0)) throw ConfigError("adam_epsilon must be positive");
  nets.validate();
}

double kd_loss(const Embedding& teacher, const Embedding& student) {
  require_same_shape(teacher, student, "kd_loss");
  if (teacher.rows() == 0) return 0.0;
  return row_squared_distance(teacher, student).mean();
}

Var<double> kd_loss(const Embedding& teacher, Var<double> student) {
  require_same_shape(teacher, student.value(), "kd_loss");
  const auto rows = teacher.rows();
  Var<double> target = student.tape->constant(teacher);
  return scale(sum_squares(student - target), rows > 0 ? 1.0 / static_cast<double>(rows) : 0.0);
}

SimScore sim(const Embedding& teacher, const Embedding& student, int* fallbacks) {
  require_same_shape(teacher, student, "sim");
  SimScore s(teacher.rows());
  int zero_rows = 0;
  for (Eigen::Index i = 0; i < teacher.rows(); ++i) {
    const double nt = teacher.row(i).norm();
    const double ns = student.row(i).norm();
    if (!(nt > 0.0) || !(ns > 0.0)) {
      s(i) = 0.5;
      ++zero_rows;
      continue;
    }
    const double cosine = student.row(i).dot(teacher.row(i)) / (ns * nt);
    s(i) = std::clamp(0.5 * (1.0 + cosine), 0.0, 1.0);
  }
  if (zero_rows > 0)
    log_warning("sim: " + std::to_string(zero_rows) +
                " zero-norm embedding row(s), similarity set to 0.5");
  if (fallbacks) *fallbacks = zero_rows;
  return s;
}

LatentBatch resample(const LatentBatch& latent, const SimScore& s, double c, Rng& rng) {
  if (s.size() != latent.rows())
    throw DimensionError("resample: " + std::to_string(s.size()) + " scores for " +
                         std::to_string(latent.rows()) + " latents");
  const TensorD noise = sample_normal(rng, latent.rows(), latent.cols());
  LatentBatch out = latent;
  for (Eigen::Index i = 0; i < latent.rows(); ++i) {
    const double scale = c * s(i);
    if (scale != 0.0) out.row(i) += scale * noise.row(i);
  }
  return out;
}

FrozenWorld build_world(const NetworkConfig& nets, std::uint64_t net_seed) {
  nets.validate();
  FrozenWorld world;
  world.stack = init_frozen_stack<double>(net_seed, nets.dims, nets.mapping_spec(),
                                          nets.generator_spec());
  const NetSpec teacher_spec = nets.teacher_spec();
  MlpParams<double> teacher_params;
  if (nets.realizable_teacher) {
    teacher_params = make_realizable_teacher<double>(teacher_spec, net_seed);
  } else {
    Rng rng = Rng(net_seed).split(3);
    teacher_params = init_mlp<double>(teacher_spec, rng, true);
  }
  world.teacher = Teacher<double>(FrozenNet<double>(teacher_spec, std::move(teacher_params)),
                                  nets.teacher_normalize);
  return world;
}

Trainer::Trainer(TrainConfig config) : Trainer(config, build_world(config.nets, config.net_seed)) {}

Trainer::Trainer(TrainConfig config, FrozenWorld world)
    : config_(std::move(config)), world_(std::move(world)) {
  config_.validate();
  if (world_.teacher.input_dim() != world_.stack.d_img())
    throw DimensionError("teacher expects images of width " +
                         std::to_string(world_.teacher.input_dim()) + ", generator emits " +
                         std::to_string(world_.stack.d_img()));
  Rng data(config_.data_seed);
  Rng init_rng = data.split(kStudentInitStream);
  state_.student = init_student<double>(config_.nets.student_spec(), init_rng);
  if (state_.student.embedding_dim() != world_.teacher.embedding_dim())
    throw DimensionError("student projection head emits " +
                         std::to_string(state_.student.embedding_dim()) +
                         " but teacher embeddings have " +
                         std::to_string(world_.teacher.embedding_dim()));
  state_.adam.beta1 = config_.adam_beta1;
  state_.adam.beta2 = config_.adam_beta2;
  state_.adam.epsilon = config_.adam_epsilon;
  state_.train_rng = data.split(kTrainStream);
}

void Trainer::restore(TrainerState state) {
  check_conforms(config_.nets.student_spec(), state.student.params);
  if (state.student.spec != config_.nets.student_spec())
    throw ConfigError("restored student architecture differs from the configured one");
  state_ = std::move(state);
}

double Trainer::update(const ImageBatch& images, const Embedding& teacher_embedding,
                       Embedding* student_embedding) {
  Tape<double> tape;
  const auto pass = student_embed(tape, state_.student, images);
  const Var<double> loss = kd_loss(teacher_embedding, pass.output);
  const double value = loss.value()(0, 0);
  if (!std::isfinite(value)) {
    std::ostringstream msg;
    msg << "non-finite distillation loss at iteration " << state_.step + 1 << " (epoch "
        << state_.step / config_.n_iteration + 1 << ", iteration "
        << state_.step % config_.n_iteration + 1 << ")";
    throw NumericalError(msg.str());
  }
  if (student_embedding) *student_embedding = pass.output.value();
  tape.backward(loss);
  std::vector<TensorD> grads;
  grads.reserve(pass.params.size());
  for (const auto& p : pass.params) grads.push_back(tape.grad(p));
  adam_step<double>(state_.student.params.tensors, grads, state_.adam, config_.alpha);
  return value;
}

IterationResult Trainer::train_iteration(IterationTrace* trace) {
  const auto started = std::chrono::steady_clock::now();
  const std::uint64_t step = state_.step + 1;
  Rng iteration_rng = state_.train_rng.split(step);
  Rng z_rng = iteration_rng.split(1);
  Rng n_rng = iteration_rng.split(2);
  const auto& stack = world_.stack;

  IterationResult result;
  result.step = step;
  result.epoch = static_cast<int>((step - 1) / config_.n_iteration) + 1;
  result.iteration = static_cast<int>((step - 1) % config_.n_iteration) + 1;

  // Step 1: fresh samples.
  const LatentBatch z = sample_normal(z_rng, config_.batch_size, stack.d_z());
  const LatentBatch w = mapping_forward(stack, z);
  const ImageBatch images = generator_forward(stack, w);
  const Embedding teacher1 = teacher_embed(world_.teacher, images);
  Embedding student1;
  result.step1_loss = update(images, teacher1, &student1);
  result.updates = 1;
  if (config_.sim_source == SimSource::kPostUpdate)
    student1 = student_embed_values(state_.student, images);

  const SimScore s = sim(teacher1, student1, &result.sim_fallbacks);
  result.sim_mean = s.mean();
  result.sim_min = s.minCoeff();
  result.sim_max = s.maxCoeff();

  if (trace) {
    trace->z = z;
    trace->w = w;
    trace->images1 = images;
    trace->teacher1 = teacher1;
    trace->student1 = student1;
    trace->sims = s;
  }

  // Step 2: similarity-scaled re-sampling around the step-1 latents.
  if (config_.resample_space != ResampleSpace::kNone) {
    LatentBatch resampled;
    ImageBatch images2;
    if (config_.resample_space == ResampleSpace::kW) {
      resampled = resample_w(w, s, config_.c, n_rng);
      images2 = generator_forward(stack, resampled);
    } else {
      resampled = resample_z(z, s, config_.c, n_rng);
      images2 = generator_forward(stack, mapping_forward(stack, resampled));
    }
    const Embedding teacher2 = teacher_embed(world_.teacher, images2);
    result.step2_loss = update(images2, teacher2, nullptr);
    result.updates = 2;
    if (trace) {
      trace->resampled = std::move(resampled);
      trace->images2 = std::move(images2);
    }
  }

  state_.step = step;
  result.wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
  return result;
}

void train_run(Trainer& trainer, const MetricsSink& sink, std::optional<std::uint64_t> stop_after) {
  while (!trainer.done()) {
    if (stop_after && trainer.step() >= *stop_after) break;
    const IterationResult r = trainer.train_iteration();
    if (sink) sink(r);
  }
}

Student<double> train_run(const TrainConfig& config, const MetricsSink& sink) {
  Trainer trainer(config);
  train_run(trainer, sink);
  return trainer.student();
}

}  // namespace synthdistill
