// Copyright (c) 2026, The synthdistill authors
// SPDX-License-Identifier: Apache-2.0
//
// Synthetic verification protocol and the ablation harness.
//
// "Same identity" means "same base latent w": a genuine pair is G(w) and
// G(w + sigma * n); an impostor pair comes from two independent z draws.
// Accuracy is measured at the single best cosine-similarity threshold.

#ifndef SYNTHDISTILL_EVAL_HPP_
#define SYNTHDISTILL_EVAL_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "synthdistill/distill.hpp"

namespace synthdistill {

struct EvalConfig {
  int n_pairs = 2000;
  double genuine_sigma = 0.3;
  std::uint64_t eval_seed = 3;
  int agreement_samples = 2000;

  void validate() const;
};

// Stream tags for Rng::split on the eval seed.
inline constexpr std::uint64_t kPairStream = 21;
inline constexpr std::uint64_t kAgreementStream = 22;

// Row i of `a` and `b` form pair i.
struct VerificationPairs {
  ImageBatch a;
  ImageBatch b;
  std::vector<bool> genuine;

  std::size_t size() const { return genuine.size(); }
};

// First half genuine, second half impostor. `n_pairs` must be even.
VerificationPairs gen_pairs(const GeneratorStack<double>& stack, Rng& rng, int n_pairs,
                            double genuine_sigma);

struct ThresholdResult {
  double accuracy = 0.0;
  double threshold = 0.0;  // predict genuine iff score >= threshold
  std::size_t pair_count = 0;
};

// Exhaustive sweep over every observed score plus one threshold above them
// all. Among equally accurate thresholds the lowest wins.
ThresholdResult best_threshold(std::span<const double> scores, const std::vector<bool>& genuine);

using Embedder = std::function<Embedding(const ImageBatch&)>;

// Per-pair cosine similarity. Zero-norm rows score 0.
std::vector<double> pair_scores(const Embedder& embedder, const VerificationPairs& pairs);
ThresholdResult verification_accuracy(const Embedder& embedder, const VerificationPairs& pairs);

struct Agreement {
  double mean_sim = 0.0;  // mean of 0.5 * (1 + cos)
  double mean_mse = 0.0;  // mean per-sample squared L2 distance
};

// Statistics over `n_samples` fresh images drawn from `rng`.
Agreement agreement(const Student<double>& student, const Teacher<double>& teacher,
                    const GeneratorStack<double>& stack, Rng& rng, int n_samples);

struct EvalReport {
  double accuracy = 0.0;
  double threshold = 0.0;
  double mean_sim = 0.0;
  double mean_mse = 0.0;
  std::size_t pair_count = 0;
  double teacher_accuracy = 0.0;
};

// Student accuracy on `pairs` plus agreement on samples from the eval stream.
EvalReport evaluate_student(const FrozenWorld& world, const Student<double>& student,
                            const VerificationPairs& pairs, const EvalConfig& eval);

// Pair set shared by every evaluation under `eval`.
VerificationPairs eval_pairs(const FrozenWorld& world, const EvalConfig& eval);

enum class AblationAxis { kSamplingMode, kSamplesPerEpoch, kCoefficient };

std::string to_string(AblationAxis axis);
AblationAxis parse_ablation_axis(const std::string& text);

// Sampling-mode values: static-N, static-2N, dynamic-Z, dynamic-W.
// Samples-per-epoch values count step-1 samples (rounded up to whole batches).
// Coefficient values set c.
TrainConfig apply_axis_value(const TrainConfig& base, AblationAxis axis, const std::string& value);

struct Summary {
  double mean = 0.0;
  double std = 0.0;  // sample standard deviation (n - 1)
};
Summary summarize(std::span<const double> values);

// mean(a) - mean(b) > pooled_std / sqrt(n), pooled_std = sqrt((var_a + var_b) / 2).
bool directionally_greater(std::span<const double> a, std::span<const double> b);

struct AblationCell {
  std::string value;
  TrainConfig config;
  std::vector<std::uint64_t> data_seeds;
  std::vector<EvalReport> reports;  // one per seed
  std::vector<FrozenWorld::Fingerprints> fingerprints_after;

  std::vector<double> accuracies() const;
  Summary accuracy() const;
  Summary sim() const;
  Summary mse() const;
};

struct AblationGrid {
  AblationAxis axis = AblationAxis::kSamplingMode;
  int n_seeds = 1;
  double teacher_accuracy = 0.0;
  FrozenWorld::Fingerprints fingerprints_before;
  std::vector<AblationCell> cells;

  const AblationCell& cell(const std::string& value) const;
};

struct AblationOptions {
  // When set, each (cell, seed) writes metrics and its eval report below it.
  std::optional<std::filesystem::path> output_dir;
  std::function<void(const std::string&)> progress;
};

// One run per (value, seed). Seed i trains with data_seed = base.data_seed + i;
// frozen networks and the pair set are shared by every run.
AblationGrid run_ablation(const TrainConfig& base, const EvalConfig& eval, AblationAxis axis,
                          const std::vector<std::string>& values, int n_seeds,
                          const AblationOptions& options = {});

// table3: the four sampling modes. table4: half, equal and double the base
// step-1 samples per epoch. table5: coefficients 0.8 through 1.5.
std::vector<std::string> ablation_preset(const std::string& name, const TrainConfig& base,
                                         AblationAxis* axis);

}  // namespace synthdistill

#endif  // SYNTHDISTILL_EVAL_HPP_
