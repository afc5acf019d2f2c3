// Copyright (c) 2026, The synthdistill authors
// SPDX-License-Identifier: Apache-2.0
//
// Command implementations behind the synthdistill executable. Each returns a
// process exit code: 0 success, 1 usage/config error, 2 numerical abort,
// 3 I/O error.

#ifndef SYNTHDISTILL_COMMANDS_HPP_
#define SYNTHDISTILL_COMMANDS_HPP_

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "synthdistill/gradcheck.hpp"

namespace synthdistill {

enum ExitCode : int { kExitOk = 0, kExitConfig = 1, kExitNumerical = 2, kExitIo = 3 };

struct TrainOptions {
  std::filesystem::path config;
  std::optional<std::filesystem::path> resume;
  // Stop once this many iterations have completed (writes a checkpoint).
  std::optional<std::uint64_t> stop_at;
  bool allow_config_mismatch = false;
};

struct EvalOptions {
  std::filesystem::path checkpoint;
  std::filesystem::path config;
  bool allow_config_mismatch = false;
};

struct AblateOptions {
  std::filesystem::path config;
  std::string axis;
  std::vector<std::string> values;
  int seeds = 1;
  std::optional<std::string> preset;
};

int cmd_train(const TrainOptions& options, std::ostream& out, std::ostream& err);
int cmd_eval(const EvalOptions& options, std::ostream& out, std::ostream& err);
int cmd_ablate(const AblateOptions& options, std::ostream& out, std::ostream& err);
int cmd_gradcheck(const GradcheckOptions& options, std::ostream& out, std::ostream& err);
int cmd_gen_config(const std::filesystem::path& path, std::ostream& out, std::ostream& err);

// Files written by cmd_train inside the output directory.
inline constexpr const char* kMetricsFile = "metrics.jsonl";
inline constexpr const char* kTimingFile = "timing.jsonl";
inline constexpr const char* kLatestCheckpoint = "checkpoint.ckpt";
inline constexpr const char* kEvalReportFile = "eval.json";

}  // namespace synthdistill

#endif  // SYNTHDISTILL_COMMANDS_HPP_
