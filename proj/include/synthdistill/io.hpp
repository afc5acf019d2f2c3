// Copyright (c) 2026, The synthdistill authors
// SPDX-License-Identifier: Apache-2.0
//
// Persisted artifacts: run configuration files, metrics streams, checkpoints
// and ablation summaries.

#ifndef SYNTHDISTILL_IO_HPP_
#define SYNTHDISTILL_IO_HPP_

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>

#include "synthdistill/distill.hpp"
#include "synthdistill/eval.hpp"

namespace synthdistill {

// ---------------------------------------------------------------------------
// Run configuration
//
// Plain text, one `key = value` per line, `#` starts a comment. Unknown keys,
// duplicates and malformed values are rejected with the offending line.
// ---------------------------------------------------------------------------

struct RunConfig {
  TrainConfig train;
  EvalConfig eval;
  std::string output_dir = "runs/default";
  int metrics_flush_interval = 1;  // records between flushes
  int checkpoint_interval = 0;     // iterations between checkpoints; 0 = final only

  void validate() const;
};

RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::filesystem::path& path);

// Fully-defaulted file with one comment per key.
std::string default_config_text();
// Canonical `key = value` rendering of every field, in schema order.
std::string canonical_config_text(const RunConfig& config);

// SHA-256 over the canonical rendering of the training fields.
std::string config_hash(const TrainConfig& config);

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

// Deterministic record: epoch, iteration, losses and similarity stats.
std::string metrics_json_line(const IterationResult& r);
// Wall-clock sidecar record.
std::string timing_json_line(const IterationResult& r);

class MetricsWriter {
 public:
  // `append` keeps existing content, otherwise files are truncated.
  MetricsWriter(const std::filesystem::path& metrics_path,
                const std::filesystem::path& timing_path, int flush_interval, bool append);
  ~MetricsWriter();
  MetricsWriter(const MetricsWriter&) = delete;
  MetricsWriter& operator=(const MetricsWriter&) = delete;

  void write(const IterationResult& r);
  void flush();

 private:
  std::filesystem::path metrics_path_;
  std::ofstream metrics_;
  std::ofstream timing_;
  int flush_interval_;
  int pending_ = 0;
};

// Keeps the first `records` lines of a metrics stream. Missing file is a no-op.
void truncate_metrics(const std::filesystem::path& path, std::uint64_t records);

// ---------------------------------------------------------------------------
// Checkpoints
//
// First line is the header "synthdistill-checkpoint v<N>"; the remainder is a
// JSON document. The header is validated before the body is parsed.
// ---------------------------------------------------------------------------

inline constexpr int kCheckpointVersion = 1;
inline constexpr const char* kCheckpointMagic = "synthdistill-checkpoint";

struct Checkpoint {
  int version = kCheckpointVersion;
  std::string config_hash;
  std::uint64_t net_seed = 0;
  std::uint64_t data_seed = 0;
  int epoch = 0;      // last completed iteration's epoch (0 before training)
  int iteration = 0;  // last completed iteration within that epoch
  TrainerState state;
  Rng eval_rng;
  FrozenWorld::Fingerprints frozen;
};

Checkpoint make_checkpoint(const Trainer& trainer, const EvalConfig& eval);
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);
std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint parse_checkpoint(const std::string& text);

// Restores `trainer` from `ckpt`. A config-hash mismatch throws ConfigError
// unless `allow_config_mismatch` is set; frozen fingerprints must always match.
void resume_from(Trainer& trainer, const Checkpoint& ckpt, bool allow_config_mismatch);

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

std::string eval_report_json(const EvalReport& report);
// One row per cell: axis, value, seeds, accuracy/sim/mse mean and std.
std::string ablation_csv(const AblationGrid& grid);
// One JSON object per (cell, seed).
std::string ablation_jsonl(const AblationGrid& grid);

void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace synthdistill

#endif  // SYNTHDISTILL_IO_HPP_
