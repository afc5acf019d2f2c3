// Copyright (c) 2026, The synthdistill authors
// SPDX-License-Identifier: Apache-2.0
//
// Knowledge distillation from a frozen teacher through synthetic inputs.
//
// Each training iteration has two steps:
//   1. Draw z ~ N(0, I), generate images through M and G, and take one Adam
//      step on the squared-L2 distance between teacher and student embeddings.
//   2. Score every sample by SIM = 0.5 * (1 + cos(e_T, e_S)), perturb its
//      latent by c * SIM * n with n ~ N(0, I), regenerate, and take a second
//      Adam step on the perturbed batch.
// Well-matched samples are thus re-sampled far from their origin while poorly
// matched ones are revisited nearby.

#ifndef SYNTHDISTILL_DISTILL_HPP_
#define SYNTHDISTILL_DISTILL_HPP_

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "synthdistill/adam.hpp"
#include "synthdistill/autodiff.hpp"
#include "synthdistill/nets.hpp"
#include "synthdistill/rng.hpp"
#include "synthdistill/tensor.hpp"

namespace synthdistill {

using LatentBatch = TensorD;
using ImageBatch = TensorD;
using Embedding = TensorD;
using SimScore = ColVector<double>;

enum class ResampleSpace { kW, kZ, kNone };
enum class SimSource { kPreUpdate, kPostUpdate };

std::string to_string(ResampleSpace space);
std::string to_string(SimSource source);
ResampleSpace parse_resample_space(const std::string& text);
SimSource parse_sim_source(const std::string& text);

// Architecture of the four networks. Hidden widths exclude input and output.
struct NetworkConfig {
  GeneratorDims dims;
  int d_emb = 32;
  std::vector<int> mapping_hidden{32, 32};
  std::vector<int> generator_hidden{64};
  std::vector<int> teacher_hidden{128, 128};
  std::vector<int> student_hidden{64, 48};
  Activation mapping_activation = Activation::leaky_relu(0.2);
  Activation generator_activation = Activation::leaky_relu(0.2);
  Activation teacher_activation = Activation::leaky_relu(0.2);
  Activation student_activation = Activation::leaky_relu(0.2);
  bool generator_tanh_output = true;
  bool teacher_normalize = false;
  // Teacher copies the student architecture (zero loss attainable).
  bool realizable_teacher = false;

  NetSpec mapping_spec() const;
  NetSpec generator_spec() const;
  NetSpec teacher_spec() const;
  NetSpec student_spec() const;
  void validate() const;
};

struct TrainConfig {
  int n_epoch = 1;
  int n_iteration = 1000;
  int batch_size = 64;
  double alpha = 1e-3;
  double c = 1.0;
  ResampleSpace resample_space = ResampleSpace::kW;
  SimSource sim_source = SimSource::kPreUpdate;
  std::uint64_t net_seed = 1;
  std::uint64_t data_seed = 2;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  NetworkConfig nets;

  std::uint64_t total_iterations() const {
    return static_cast<std::uint64_t>(n_epoch) * static_cast<std::uint64_t>(n_iteration);
  }
  void validate() const;
};

// Squared L2 distance per sample, averaged over the batch.
double kd_loss(const Embedding& teacher, const Embedding& student);
// Taped variant. The teacher side enters as a constant, so gradients reach
// only the student embedding.
Var<double> kd_loss(const Embedding& teacher, Var<double> student);

// 0.5 * (1 + cosine similarity) per row, clamped to [0, 1]. Rows where either
// side has zero norm score 0.5 and are counted in `fallbacks`.
SimScore sim(const Embedding& teacher, const Embedding& student, int* fallbacks = nullptr);

// latent_i + c * s_i * n_i with n_i ~ N(0, I) drawn per sample and coordinate.
LatentBatch resample(const LatentBatch& latent, const SimScore& s, double c, Rng& rng);
inline LatentBatch resample_w(const LatentBatch& w, const SimScore& s, double c, Rng& rng) {
  return resample(w, s, c, rng);
}
inline LatentBatch resample_z(const LatentBatch& z, const SimScore& s, double c, Rng& rng) {
  return resample(z, s, c, rng);
}

// Frozen side of the pipeline: M, G and F_T.
struct FrozenWorld {
  GeneratorStack<double> stack;
  Teacher<double> teacher;

  struct Fingerprints {
    std::string mapping, generator, teacher;
    bool operator==(const Fingerprints&) const = default;
  };
  Fingerprints fingerprints() const {
    return {stack.mapping().fingerprint(), stack.generator().fingerprint(), teacher.fingerprint()};
  }
};

FrozenWorld build_world(const NetworkConfig& nets, std::uint64_t net_seed);

struct IterationResult {
  int epoch = 0;      // 1-based
  int iteration = 0;  // 1-based within the epoch
  std::uint64_t step = 0;  // 1-based global iteration index
  double step1_loss = 0.0;
  std::optional<double> step2_loss;
  double sim_mean = 0.0;
  double sim_min = 0.0;
  double sim_max = 0.0;
  int sim_fallbacks = 0;
  int updates = 0;
  double wall_ms = 0.0;
};

// Intermediate batches of one iteration, captured on request for inspection.
struct IterationTrace {
  LatentBatch z, w;
  ImageBatch images1;
  Embedding teacher1, student1;
  SimScore sims;
  LatentBatch resampled;  // in the configured space
  ImageBatch images2;
};

// Stream tags for Rng::split on the data seed.
inline constexpr std::uint64_t kStudentInitStream = 11;
inline constexpr std::uint64_t kTrainStream = 12;
inline constexpr std::uint64_t kEvalStream = 13;

// Mutable training state. Everything needed to continue a run bitwise.
struct TrainerState {
  Student<double> student;
  AdamState<double> adam;
  std::uint64_t step = 0;  // completed iterations
  Rng train_rng;           // base stream; iteration k uses train_rng.split(k)
};

class Trainer {
 public:
  explicit Trainer(TrainConfig config);
  Trainer(TrainConfig config, FrozenWorld world);

  // Runs one iteration of both steps. Throws NumericalError on NaN/Inf loss.
  IterationResult train_iteration(IterationTrace* trace = nullptr);

  bool done() const { return state_.step >= config_.total_iterations(); }
  std::uint64_t step() const { return state_.step; }

  const TrainConfig& config() const { return config_; }
  const FrozenWorld& world() const { return world_; }
  const Student<double>& student() const { return state_.student; }
  const TrainerState& state() const { return state_; }

  // Replaces the training state (checkpoint resume).
  void restore(TrainerState state);
  void set_student(Student<double> student) { state_.student = std::move(student); }

 private:
  double update(const ImageBatch& images, const Embedding& teacher_embedding,
                Embedding* student_embedding);

  TrainConfig config_;
  FrozenWorld world_;
  TrainerState state_;
};

using MetricsSink = std::function<void(const IterationResult&)>;

// Runs until the configured epoch/iteration budget is spent, or until
// `stop_after` completed iterations when given.
void train_run(Trainer& trainer, const MetricsSink& sink,
               std::optional<std::uint64_t> stop_after = std::nullopt);

Student<double> train_run(const TrainConfig& config, const MetricsSink& sink);

}  // namespace synthdistill

#endif  // SYNTHDISTILL_DISTILL_HPP_
