// Copyright (c) 2026, The synthdistill authors
// SPDX-License-Identifier: Apache-2.0

#include <CLI11.hpp>

#include <iostream>
#include <sstream>
#include <string>

#include "synthdistill/commands.hpp"

namespace sd = synthdistill;

namespace {

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Distill a frozen teacher embedder into a student using synthetic latents"};
  app.require_subcommand(1);

  sd::TrainOptions train;
  std::string resume;
  std::uint64_t stop_at = 0;
  auto* train_cmd = app.add_subcommand("train", "run two-step distillation training");
  train_cmd->add_option("--config", train.config, "run configuration file")->required();
  train_cmd->add_option("--resume", resume, "checkpoint to continue from");
  train_cmd->add_option("--stop-at", stop_at, "stop after this many completed iterations");
  train_cmd->add_flag("--allow-config-mismatch", train.allow_config_mismatch,
                      "resume even if the configuration hash differs");

  sd::EvalOptions eval;
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a checkpointed student");
  eval_cmd->add_option("--ckpt", eval.checkpoint, "checkpoint file")->required();
  eval_cmd->add_option("--config", eval.config, "run configuration file")->required();
  eval_cmd->add_flag("--allow-config-mismatch", eval.allow_config_mismatch,
                     "evaluate even if the configuration hash differs");

  sd::AblateOptions ablate;
  std::string values;
  std::string preset;
  auto* ablate_cmd = app.add_subcommand("ablate", "train and evaluate an ablation grid");
  ablate_cmd->add_option("--config", ablate.config, "base run configuration")->required();
  ablate_cmd->add_option("--axis", ablate.axis, "sampling-mode, samples-per-epoch or coefficient");
  ablate_cmd->add_option("--values", values, "comma-separated axis values");
  ablate_cmd->add_option("--seeds", ablate.seeds, "seeds per cell")->check(CLI::PositiveNumber);
  ablate_cmd->add_option("--preset", preset, "table3, table4 or table5");

  sd::GradcheckOptions grad;
  std::string dims;
  std::string activation = "leaky-relu(0.2)";
  auto* grad_cmd = app.add_subcommand("gradcheck", "compare taped gradients with finite differences");
  grad_cmd->add_option("--seed", grad.seed, "student seed");
  grad_cmd->add_option("--dims", dims, "student widths, input first (e.g. 64,48,32)");
  grad_cmd->add_option("--activation", activation, "student hidden activation");
  grad_cmd->add_flag("--inject-fault", grad.inject_fault, "corrupt one gradient entry");

  std::string gen_out;
  auto* gen_cmd = app.add_subcommand("gen-config", "write a fully-defaulted configuration");
  gen_cmd->add_option("--out", gen_out, "destination path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? sd::kExitOk : sd::kExitConfig;
  }

  if (*train_cmd) {
    if (!resume.empty()) train.resume = resume;
    if (stop_at > 0) train.stop_at = stop_at;
    return sd::cmd_train(train, std::cout, std::cerr);
  }
  if (*eval_cmd) return sd::cmd_eval(eval, std::cout, std::cerr);
  if (*ablate_cmd) {
    ablate.values = split_list(values);
    if (!preset.empty()) ablate.preset = preset;
    return sd::cmd_ablate(ablate, std::cout, std::cerr);
  }
  if (*grad_cmd) {
    try {
      if (!dims.empty()) {
        grad.widths.clear();
        for (const auto& d : split_list(dims)) grad.widths.push_back(std::stoi(d));
      }
      grad.activation = sd::parse_activation(activation);
    } catch (const std::exception& e) {
      std::cerr << "usage error: " << e.what() << '\n';
      return sd::kExitConfig;
    }
    return sd::cmd_gradcheck(grad, std::cout, std::cerr);
  }
  if (*gen_cmd) return sd::cmd_gen_config(gen_out, std::cout, std::cerr);
  return sd::kExitConfig;
}
