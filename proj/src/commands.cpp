// Copyright (c) 2026, The synthdistill authors
// SPDX-License-Identifier: Apache-2.0

#include "synthdistill/commands.hpp"

#include <cstdio>
#include <iostream>

#include "synthdistill/io.hpp"

namespace synthdistill {
namespace {

std::filesystem::path interval_checkpoint(const std::filesystem::path& dir, std::uint64_t step) {
  char name[64];
  std::snprintf(name, sizeof name, "checkpoint-%08llu.ckpt", static_cast<unsigned long long>(step));
  return dir / name;
}

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
}

}  // namespace

int cmd_train(const TrainOptions& opt, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  try {
    cfg = load_run_config(opt.config);
  } catch (const ConfigError& e) {
    err << "config error: " << opt.config.string() << ": " << e.what() << '\n';
    return kExitConfig;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << '\n';
    return kExitIo;
  }

  std::optional<MetricsWriter> writer;
  try {
    const std::filesystem::path dir = cfg.output_dir;
    ensure_dir(dir);
    Trainer trainer(cfg.train);
    bool append = false;
    if (opt.resume) {
      const Checkpoint ckpt = load_checkpoint(*opt.resume);
      resume_from(trainer, ckpt, opt.allow_config_mismatch);
      truncate_metrics(dir / kMetricsFile, ckpt.state.step);
      truncate_metrics(dir / kTimingFile, ckpt.state.step);
      append = true;
      out << "resumed from " << opt.resume->string() << " at iteration " << ckpt.state.step << '\n';
    }
    writer.emplace(dir / kMetricsFile, dir / kTimingFile, cfg.metrics_flush_interval, append);

    while (!trainer.done() && !(opt.stop_at && trainer.step() >= *opt.stop_at)) {
      const IterationResult r = trainer.train_iteration();
      writer->write(r);
      if (cfg.checkpoint_interval > 0 && r.step % cfg.checkpoint_interval == 0)
        save_checkpoint(make_checkpoint(trainer, cfg.eval), interval_checkpoint(dir, r.step));
    }
    writer->flush();
    save_checkpoint(make_checkpoint(trainer, cfg.eval), dir / kLatestCheckpoint);
    out << "trained " << trainer.step() << " of " << cfg.train.total_iterations()
        << " iterations; checkpoint at " << (dir / kLatestCheckpoint).string() << '\n';
    return kExitOk;
  } catch (const NumericalError& e) {
    if (writer) writer->flush();
    err << "numerical abort: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }
}

int cmd_eval(const EvalOptions& opt, std::ostream& out, std::ostream& err) {
  try {
    const RunConfig cfg = load_run_config(opt.config);
    const Checkpoint ckpt = load_checkpoint(opt.checkpoint);
    Trainer trainer(cfg.train);
    resume_from(trainer, ckpt, opt.allow_config_mismatch);
    const VerificationPairs pairs = eval_pairs(trainer.world(), cfg.eval);
    const EvalReport report = evaluate_student(trainer.world(), trainer.student(), pairs, cfg.eval);
    const std::string json = eval_report_json(report);
    const std::filesystem::path dir = cfg.output_dir;
    ensure_dir(dir);
    write_text_file(dir / kEvalReportFile, json + "\n");
    out << json << '\n';
    return kExitOk;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }
}

int cmd_ablate(const AblateOptions& opt, std::ostream& out, std::ostream& err) {
  try {
    const RunConfig cfg = load_run_config(opt.config);
    AblationAxis axis{};
    std::vector<std::string> values = opt.values;
    if (opt.preset) {
      values = ablation_preset(*opt.preset, cfg.train, &axis);
    } else {
      if (opt.axis.empty()) throw ConfigError("ablate: --axis or --preset is required");
      axis = parse_ablation_axis(opt.axis);
    }
    if (values.empty()) throw ConfigError("ablate: no values given");
    const std::filesystem::path dir = std::filesystem::path(cfg.output_dir) / ("ablation-" + to_string(axis));
    ensure_dir(dir);
    AblationOptions ao;
    ao.output_dir = dir;
    ao.progress = [&](const std::string& msg) { err << msg << '\n'; };
    const AblationGrid grid = run_ablation(cfg.train, cfg.eval, axis, values, opt.seeds, ao);
    const std::string csv = ablation_csv(grid);
    write_text_file(dir / "ablation.csv", csv);
    write_text_file(dir / "ablation.jsonl", ablation_jsonl(grid));
    out << csv;
    return kExitOk;
  } catch (const NumericalError& e) {
    err << "numerical abort: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }
}

int cmd_gradcheck(const GradcheckOptions& opt, std::ostream& out, std::ostream& err) {
  try {
    const GradcheckReport report = gradcheck_student(opt);
    for (const auto& e : report.entries) {
      char line[160];
      std::snprintf(line, sizeof line, "%-14s max_rel_error=%.3e %s", e.name.c_str(),
                    e.max_rel_error, e.pass ? "PASS" : "FAIL");
      out << line << '\n';
    }
    if (!report.pass) {
      err << "gradient check failed for:";
      for (const auto& e : report.entries)
        if (!e.pass) err << ' ' << e.name;
      err << '\n';
      return kExitNumerical;
    }
    out << "all " << report.entries.size() << " parameter tensors within " << opt.tolerance << '\n';
    return kExitOk;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  }
}

int cmd_gen_config(const std::filesystem::path& path, std::ostream& out, std::ostream& err) {
  try {
    write_text_file(path, default_config_text());
    out << "wrote " << path.string() << '\n';
    return kExitOk;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << '\n';
    return kExitIo;
  }
}

}  // namespace synthdistill
