// Copyright (c) 2026, The synthdistill authors
// SPDX-License-Identifier: Apache-2.0

#include "synthdistill/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "synthdistill/io.hpp"

namespace synthdistill {

void EvalConfig::validate() const {
  if (n_pairs < 2 || n_pairs % 2 != 0) throw ConfigError("n_pairs must be a positive even number");
  if (!(genuine_sigma > 0.0) || !std::isfinite(genuine_sigma))
    throw ConfigError("genuine_sigma must be positive");
  if (agreement_samples <= 0) throw ConfigError("agreement_samples must be positive");
}

VerificationPairs gen_pairs(const GeneratorStack<double>& stack, Rng& rng, int n_pairs,
                            double genuine_sigma) {
  if (n_pairs < 0 || n_pairs % 2 != 0)
    throw ContractError("gen_pairs: n_pairs must be even, got " + std::to_string(n_pairs));
  const int half = n_pairs / 2;
  const TensorD z_genuine = sample_normal(rng, half, stack.d_z());
  const TensorD w = mapping_forward(stack, z_genuine);
  const TensorD noise = sample_normal(rng, half, stack.d_w());
  const TensorD w_perturbed = w + genuine_sigma * noise;
  const TensorD z1 = sample_normal(rng, half, stack.d_z());
  const TensorD z2 = sample_normal(rng, half, stack.d_z());

  VerificationPairs pairs;
  pairs.a.resize(n_pairs, stack.d_img());
  pairs.b.resize(n_pairs, stack.d_img());
  if (half > 0) {
    pairs.a.topRows(half) = generator_forward(stack, w);
    pairs.b.topRows(half) = generator_forward(stack, w_perturbed);
    pairs.a.bottomRows(half) = generator_forward(stack, mapping_forward(stack, z1));
    pairs.b.bottomRows(half) = generator_forward(stack, mapping_forward(stack, z2));
  }
  pairs.genuine.assign(n_pairs, false);
  std::fill(pairs.genuine.begin(), pairs.genuine.begin() + half, true);
  return pairs;
}

ThresholdResult best_threshold(std::span<const double> scores, const std::vector<bool>& genuine) {
  if (scores.size() != genuine.size())
    throw ProtocolError("best_threshold: " + std::to_string(scores.size()) + " scores for " +
                        std::to_string(genuine.size()) + " labels");
  if (scores.empty()) throw ProtocolError("verification: empty pair set");
  const auto n_genuine = static_cast<std::size_t>(std::count(genuine.begin(), genuine.end(), true));
  if (n_genuine == 0 || n_genuine == genuine.size())
    throw ProtocolError("verification: pair set needs both genuine and impostor labels");

  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] < scores[b];
  });

  // Threshold at the i-th smallest distinct score: everything below is called
  // impostor, everything at or above genuine.
  const double n = static_cast<double>(scores.size());
  std::size_t correct = n_genuine;  // threshold at the minimum: all genuine
  ThresholdResult best{static_cast<double>(correct) / n, scores[order.front()], scores.size()};
  std::size_t i = 0;
  while (i < order.size()) {
    const double value = scores[order[i]];
    while (i < order.size() && scores[order[i]] == value) {
      correct += genuine[order[i]] ? std::size_t{0} : std::size_t{1};
      correct -= genuine[order[i]] ? std::size_t{1} : std::size_t{0};
      ++i;
    }
    const double threshold = i < order.size()
                                 ? scores[order[i]]
                                 : std::nextafter(value, std::numeric_limits<double>::infinity());
    const double acc = static_cast<double>(correct) / n;
    if (acc > best.accuracy) best = {acc, threshold, scores.size()};
  }
  return best;
}

std::vector<double> pair_scores(const Embedder& embedder, const VerificationPairs& pairs) {
  const Embedding ea = embedder(pairs.a);
  const Embedding eb = embedder(pairs.b);
  require_same_shape(ea, eb, "pair_scores");
  if (static_cast<std::size_t>(ea.rows()) != pairs.size())
    throw DimensionError("pair_scores: embedder returned " + std::to_string(ea.rows()) +
                         " rows for " + std::to_string(pairs.size()) + " pairs");
  std::vector<double> scores(pairs.size());
  for (Eigen::Index i = 0; i < ea.rows(); ++i) {
    const double na = ea.row(i).norm();
    const double nb = eb.row(i).norm();
    scores[i] = (na > 0.0 && nb > 0.0) ? ea.row(i).dot(eb.row(i)) / (na * nb) : 0.0;
  }
  return scores;
}

ThresholdResult verification_accuracy(const Embedder& embedder, const VerificationPairs& pairs) {
  if (pairs.size() == 0) throw ProtocolError("verification: empty pair set");
  const auto scores = pair_scores(embedder, pairs);
  return best_threshold(scores, pairs.genuine);
}

Agreement agreement(const Student<double>& student, const Teacher<double>& teacher,
                    const GeneratorStack<double>& stack, Rng& rng, int n_samples) {
  if (n_samples <= 0) throw ContractError("agreement: n_samples must be positive");
  const TensorD z = sample_normal(rng, n_samples, stack.d_z());
  const ImageBatch images = generator_forward(stack, mapping_forward(stack, z));
  const Embedding et = teacher.embed(images);
  const Embedding es = student_embed_values(student, images);
  Agreement a;
  a.mean_sim = sim(et, es).mean();
  a.mean_mse = kd_loss(et, es);
  return a;
}

VerificationPairs eval_pairs(const FrozenWorld& world, const EvalConfig& eval) {
  eval.validate();
  Rng rng = Rng(eval.eval_seed).split(kPairStream);
  return gen_pairs(world.stack, rng, eval.n_pairs, eval.genuine_sigma);
}

EvalReport evaluate_student(const FrozenWorld& world, const Student<double>& student,
                            const VerificationPairs& pairs, const EvalConfig& eval) {
  const auto student_result = verification_accuracy(
      [&](const ImageBatch& x) { return student_embed_values(student, x); }, pairs);
  const auto teacher_result = verification_accuracy(
      [&](const ImageBatch& x) { return world.teacher.embed(x); }, pairs);
  Rng rng = Rng(eval.eval_seed).split(kAgreementStream);
  const Agreement agree =
      agreement(student, world.teacher, world.stack, rng, eval.agreement_samples);
  EvalReport r;
  r.accuracy = student_result.accuracy;
  r.threshold = student_result.threshold;
  r.pair_count = student_result.pair_count;
  r.mean_sim = agree.mean_sim;
  r.mean_mse = agree.mean_mse;
  r.teacher_accuracy = teacher_result.accuracy;
  return r;
}

std::string to_string(AblationAxis axis) {
  switch (axis) {
    case AblationAxis::kSamplingMode:
      return "sampling-mode";
    case AblationAxis::kSamplesPerEpoch:
      return "samples-per-epoch";
    case AblationAxis::kCoefficient:
      return "coefficient";
  }
  return "sampling-mode";
}

AblationAxis parse_ablation_axis(const std::string& text) {
  if (text == "sampling-mode") return AblationAxis::kSamplingMode;
  if (text == "samples-per-epoch") return AblationAxis::kSamplesPerEpoch;
  if (text == "coefficient") return AblationAxis::kCoefficient;
  throw ConfigError("unknown ablation axis '" + text +
                    "' (expected sampling-mode, samples-per-epoch or coefficient)");
}

namespace {

double parse_number(const std::string& text, const char* what) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != text.size() || text.empty() || !std::isfinite(v))
    throw ConfigError(std::string("invalid ") + what + " '" + text + "'");
  return v;
}

std::string format_number(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

TrainConfig apply_axis_value(const TrainConfig& base, AblationAxis axis, const std::string& value) {
  TrainConfig cfg = base;
  switch (axis) {
    case AblationAxis::kSamplingMode:
      if (value == "static-N") {
        cfg.resample_space = ResampleSpace::kNone;
      } else if (value == "static-2N") {
        cfg.resample_space = ResampleSpace::kNone;
        cfg.n_iteration = 2 * base.n_iteration;
      } else if (value == "dynamic-Z") {
        cfg.resample_space = ResampleSpace::kZ;
      } else if (value == "dynamic-W") {
        cfg.resample_space = ResampleSpace::kW;
      } else {
        throw ConfigError("unknown sampling mode '" + value +
                          "' (expected static-N, static-2N, dynamic-Z or dynamic-W)");
      }
      break;
    case AblationAxis::kSamplesPerEpoch: {
      const double samples = parse_number(value, "samples-per-epoch value");
      if (samples <= 0.0) throw ConfigError("samples-per-epoch must be positive");
      cfg.n_iteration = static_cast<int>(std::ceil(samples / cfg.batch_size));
      break;
    }
    case AblationAxis::kCoefficient: {
      const double c = parse_number(value, "coefficient");
      if (c < 0.0) throw ConfigError("coefficient must be non-negative");
      cfg.c = c;
      break;
    }
  }
  cfg.validate();
  return cfg;
}

Summary summarize(std::span<const double> values) {
  Summary s;
  if (values.empty()) return s;
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return s;
}

bool directionally_greater(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) return false;
  const Summary sa = summarize(a);
  const Summary sb = summarize(b);
  const double pooled = std::sqrt(0.5 * (sa.std * sa.std + sb.std * sb.std));
  const double n = static_cast<double>(std::min(a.size(), b.size()));
  return sa.mean - sb.mean > pooled / std::sqrt(n);
}

std::vector<double> AblationCell::accuracies() const {
  std::vector<double> v;
  for (const auto& r : reports) v.push_back(r.accuracy);
  return v;
}

Summary AblationCell::accuracy() const { return summarize(accuracies()); }

Summary AblationCell::sim() const {
  std::vector<double> v;
  for (const auto& r : reports) v.push_back(r.mean_sim);
  return summarize(v);
}

Summary AblationCell::mse() const {
  std::vector<double> v;
  for (const auto& r : reports) v.push_back(r.mean_mse);
  return summarize(v);
}

const AblationCell& AblationGrid::cell(const std::string& value) const {
  for (const auto& c : cells)
    if (c.value == value) return c;
  throw std::out_of_range("ablation grid has no cell '" + value + "'");
}

AblationGrid run_ablation(const TrainConfig& base, const EvalConfig& eval, AblationAxis axis,
                          const std::vector<std::string>& values, int n_seeds,
                          const AblationOptions& options) {
  if (values.empty()) throw ConfigError("ablation needs at least one value");
  if (n_seeds < 1) throw ConfigError("ablation needs at least one seed");
  base.validate();

  const FrozenWorld world = build_world(base.nets, base.net_seed);
  const VerificationPairs pairs = eval_pairs(world, eval);

  AblationGrid grid;
  grid.axis = axis;
  grid.n_seeds = n_seeds;
  grid.fingerprints_before = world.fingerprints();
  grid.teacher_accuracy =
      verification_accuracy([&](const ImageBatch& x) { return world.teacher.embed(x); }, pairs)
          .accuracy;

  for (std::size_t ci = 0; ci < values.size(); ++ci) {
    AblationCell cell;
    cell.value = values[ci];
    cell.config = apply_axis_value(base, axis, values[ci]);
    for (int s = 0; s < n_seeds; ++s) {
      TrainConfig cfg = cell.config;
      cfg.data_seed = base.data_seed + static_cast<std::uint64_t>(s);
      const std::string label = "cell '" + cell.value + "' seed " + std::to_string(cfg.data_seed);
      if (options.progress) options.progress("training " + label);
      try {
        Trainer trainer(cfg, world);
        if (options.output_dir) {
          char dir[64];
          std::snprintf(dir, sizeof dir, "cell-%02zu/seed-%02d", ci, s);
          const auto run_dir = *options.output_dir / dir;
          std::filesystem::create_directories(run_dir);
          MetricsWriter writer(run_dir / "metrics.jsonl", run_dir / "timing.jsonl", 256, false);
          train_run(trainer, [&](const IterationResult& r) { writer.write(r); });
          const EvalReport report = evaluate_student(trainer.world(), trainer.student(), pairs, eval);
          write_text_file(run_dir / "eval.json", eval_report_json(report) + "\n");
          cell.reports.push_back(report);
        } else {
          train_run(trainer, nullptr);
          cell.reports.push_back(evaluate_student(trainer.world(), trainer.student(), pairs, eval));
        }
        cell.fingerprints_after.push_back(trainer.world().fingerprints());
        cell.data_seeds.push_back(cfg.data_seed);
      } catch (const NumericalError& e) {
        throw NumericalError(label + ": " + e.what());
      } catch (const IoError& e) {
        throw IoError(label + ": " + e.what());
      }
    }
    grid.cells.push_back(std::move(cell));
  }
  return grid;
}

std::vector<std::string> ablation_preset(const std::string& name, const TrainConfig& base,
                                         AblationAxis* axis) {
  if (name == "table3") {
    if (axis) *axis = AblationAxis::kSamplingMode;
    return {"static-N", "static-2N", "dynamic-Z", "dynamic-W"};
  }
  if (name == "table4") {
    if (axis) *axis = AblationAxis::kSamplesPerEpoch;
    const double n = static_cast<double>(base.n_iteration) * base.batch_size;
    return {format_number(n / 2), format_number(n), format_number(2 * n)};
  }
  if (name == "table5") {
    if (axis) *axis = AblationAxis::kCoefficient;
    return {"0.8", "0.9", "1", "1.1", "1.2", "1.3", "1.4", "1.5"};
  }
  throw ConfigError("unknown preset '" + name + "' (expected table3, table4 or table5)");
}

}  // namespace synthdistill
