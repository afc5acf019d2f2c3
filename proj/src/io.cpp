// Copyright (c) 2026, The synthdistill authors
// SPDX-License-Identifier: Apache-2.0

#include "synthdistill/io.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <sstream>
#include <vector>

namespace synthdistill {
namespace {

using nlohmann::json;
using ordered_json = nlohmann::ordered_json;

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

// Shortest text that parses back to the same double.
std::string fmt_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

template <typename Int>
Int parse_int(const std::string& text, const std::string& key) {
  Int v{};
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (text.empty() || ec != std::errc() || ptr != end)
    throw ConfigError(key + ": expected an integer, got '" + text + "'");
  return v;
}

double parse_double(const std::string& text, const std::string& key) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (text.empty() || used != text.size() || !std::isfinite(v))
    throw ConfigError(key + ": expected a finite number, got '" + text + "'");
  return v;
}

bool parse_bool(const std::string& text, const std::string& key) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ConfigError(key + ": expected true or false, got '" + text + "'");
}

std::vector<int> parse_widths(const std::string& text, const std::string& key) {
  std::vector<int> out;
  if (text == "none" || text.empty()) return out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const int w = parse_int<int>(trim(item), key);
    if (w <= 0) throw ConfigError(key + ": widths must be positive");
    out.push_back(w);
  }
  return out;
}

std::string fmt_widths(const std::vector<int>& widths) {
  if (widths.empty()) return "none";
  std::string out;
  for (std::size_t i = 0; i < widths.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(widths[i]);
  }
  return out;
}

struct Field {
  const char* key;
  const char* doc;
  bool training;  // participates in the checkpoint config hash
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

#define SD_INT_FIELD(KEY, EXPR, TRAINING, DOC)                                                 \
  Field {                                                                                      \
    KEY, DOC, TRAINING, [](const RunConfig& c) { return std::to_string(c.EXPR); },            \
        [](RunConfig& c, const std::string& v) { c.EXPR = parse_int<decltype(c.EXPR)>(v, KEY); } \
  }
#define SD_DOUBLE_FIELD(KEY, EXPR, TRAINING, DOC)                                   \
  Field {                                                                           \
    KEY, DOC, TRAINING, [](const RunConfig& c) { return fmt_double(c.EXPR); },     \
        [](RunConfig& c, const std::string& v) { c.EXPR = parse_double(v, KEY); } \
  }
#define SD_BOOL_FIELD(KEY, EXPR, TRAINING, DOC)                                         \
  Field {                                                                               \
    KEY, DOC, TRAINING, [](const RunConfig& c) { return std::string(c.EXPR ? "true" : "false"); }, \
        [](RunConfig& c, const std::string& v) { c.EXPR = parse_bool(v, KEY); }         \
  }
#define SD_WIDTHS_FIELD(KEY, EXPR, DOC)                                            \
  Field {                                                                          \
    KEY, DOC, true, [](const RunConfig& c) { return fmt_widths(c.EXPR); },        \
        [](RunConfig& c, const std::string& v) { c.EXPR = parse_widths(v, KEY); } \
  }
#define SD_ACTIVATION_FIELD(KEY, EXPR, DOC)                                          \
  Field {                                                                            \
    KEY, DOC, true, [](const RunConfig& c) { return to_string(c.EXPR); },           \
        [](RunConfig& c, const std::string& v) { c.EXPR = parse_activation(v); }    \
  }

const std::vector<Field>& schema() {
  static const std::vector<Field> fields = {
      SD_INT_FIELD("n_epoch", train.n_epoch, true, "number of epochs"),
      SD_INT_FIELD("n_iteration", train.n_iteration, true, "iterations per epoch"),
      SD_INT_FIELD("batch_size", train.batch_size, true, "latents per batch"),
      SD_DOUBLE_FIELD("alpha", train.alpha, true, "Adam learning rate"),
      SD_DOUBLE_FIELD("c", train.c, true, "re-sampling coefficient (>= 0)"),
      Field{"resample_space", "step-2 re-sampling space: w, z or none", true,
            [](const RunConfig& c) { return to_string(c.train.resample_space); },
            [](RunConfig& c, const std::string& v) {
              c.train.resample_space = parse_resample_space(v);
            }},
      Field{"sim_source",
            "student embeddings used for similarity: pre-update or post-update", true,
            [](const RunConfig& c) { return to_string(c.train.sim_source); },
            [](RunConfig& c, const std::string& v) { c.train.sim_source = parse_sim_source(v); }},
      SD_INT_FIELD("net_seed", train.net_seed, true, "seed of the frozen networks"),
      SD_INT_FIELD("data_seed", train.data_seed, true, "seed of student init and training data"),
      SD_DOUBLE_FIELD("adam_beta1", train.adam_beta1, true, "Adam first-moment decay"),
      SD_DOUBLE_FIELD("adam_beta2", train.adam_beta2, true, "Adam second-moment decay"),
      SD_DOUBLE_FIELD("adam_epsilon", train.adam_epsilon, true, "Adam denominator epsilon"),
      SD_INT_FIELD("d_z", train.nets.dims.d_z, true, "input latent dimension"),
      SD_INT_FIELD("d_w", train.nets.dims.d_w, true, "intermediate latent dimension"),
      SD_INT_FIELD("d_img", train.nets.dims.d_img, true, "flattened image dimension"),
      SD_INT_FIELD("d_emb", train.nets.d_emb, true, "embedding dimension"),
      SD_WIDTHS_FIELD("mapping_hidden", train.nets.mapping_hidden,
                      "mapping network hidden widths (comma list or none)"),
      SD_WIDTHS_FIELD("generator_hidden", train.nets.generator_hidden,
                      "generator hidden widths (comma list or none)"),
      SD_WIDTHS_FIELD("teacher_hidden", train.nets.teacher_hidden,
                      "teacher hidden widths (comma list or none)"),
      SD_WIDTHS_FIELD("student_hidden", train.nets.student_hidden,
                      "student backbone widths; the projection head maps the last onto d_emb"),
      SD_ACTIVATION_FIELD("mapping_activation", train.nets.mapping_activation,
                          "relu, tanh, leaky-relu(<slope>) or identity"),
      SD_ACTIVATION_FIELD("generator_activation", train.nets.generator_activation,
                          "generator hidden activation"),
      SD_ACTIVATION_FIELD("teacher_activation", train.nets.teacher_activation,
                          "teacher hidden activation"),
      SD_ACTIVATION_FIELD("student_activation", train.nets.student_activation,
                          "student hidden activation"),
      SD_BOOL_FIELD("generator_tanh_output", train.nets.generator_tanh_output, true,
                    "bound generator output to [-1, 1]"),
      SD_BOOL_FIELD("teacher_normalize", train.nets.teacher_normalize, true,
                    "L2-normalize teacher embeddings"),
      SD_BOOL_FIELD("realizable_teacher", train.nets.realizable_teacher, true,
                    "teacher copies the student architecture"),
      SD_INT_FIELD("n_pairs", eval.n_pairs, false, "verification pairs (even)"),
      SD_DOUBLE_FIELD("genuine_sigma", eval.genuine_sigma, false,
                      "W-space perturbation defining a genuine pair"),
      SD_INT_FIELD("eval_seed", eval.eval_seed, false, "seed of the evaluation streams"),
      SD_INT_FIELD("agreement_samples", eval.agreement_samples, false,
                   "held-out samples for teacher-student agreement"),
      Field{"output_dir", "directory for metrics, checkpoints and reports", false,
            [](const RunConfig& c) { return c.output_dir; },
            [](RunConfig& c, const std::string& v) {
              if (v.empty()) throw ConfigError("output_dir: must not be empty");
              c.output_dir = v;
            }},
      SD_INT_FIELD("metrics_flush_interval", metrics_flush_interval, false,
                   "metrics records between flushes"),
      SD_INT_FIELD("checkpoint_interval", checkpoint_interval, false,
                   "iterations between checkpoints (0 = final only)"),
  };
  return fields;
}

#undef SD_INT_FIELD
#undef SD_DOUBLE_FIELD
#undef SD_BOOL_FIELD
#undef SD_WIDTHS_FIELD
#undef SD_ACTIVATION_FIELD

}  // namespace

void RunConfig::validate() const {
  train.validate();
  eval.validate();
  if (metrics_flush_interval <= 0) throw ConfigError("metrics_flush_interval must be positive");
  if (checkpoint_interval < 0) throw ConfigError("checkpoint_interval must be >= 0");
}

RunConfig parse_run_config(const std::string& text) {
  RunConfig cfg;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("expected 'key = value'", line_no);
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    const Field* field = nullptr;
    for (const auto& f : schema())
      if (key == f.key) field = &f;
    if (!field) throw ConfigError("unknown key '" + key + "'", line_no);
    if (!seen.insert(key).second) throw ConfigError("duplicate key '" + key + "'", line_no);
    try {
      field->set(cfg, value);
    } catch (const ConfigError& e) {
      throw ConfigError(e.what(), line_no);
    }
  }
  cfg.validate();
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  return parse_run_config(read_text_file(path));
}

std::string default_config_text() {
  const RunConfig defaults;
  std::string out = "# synthdistill run configuration. Every key is optional.\n";
  for (const auto& f : schema()) {
    out += "\n# ";
    out += f.doc;
    out += "\n";
    out += f.key;
    out += " = " + f.get(defaults) + "\n";
  }
  return out;
}

std::string canonical_config_text(const RunConfig& config) {
  std::string out;
  for (const auto& f : schema()) out += std::string(f.key) + " = " + f.get(config) + "\n";
  return out;
}

std::string config_hash(const TrainConfig& config) {
  RunConfig rc;
  rc.train = config;
  std::string text;
  for (const auto& f : schema())
    if (f.training) text += std::string(f.key) + "=" + f.get(rc) + "\n";
  return sha256_hex({reinterpret_cast<const unsigned char*>(text.data()), text.size()});
}

// ---------------------------------------------------------------------------

std::string metrics_json_line(const IterationResult& r) {
  ordered_json j;
  j["epoch"] = r.epoch;
  j["iteration"] = r.iteration;
  j["step1_loss"] = r.step1_loss;
  if (r.step2_loss) j["step2_loss"] = *r.step2_loss;
  j["sim_mean"] = r.sim_mean;
  j["sim_min"] = r.sim_min;
  j["sim_max"] = r.sim_max;
  return j.dump();
}

std::string timing_json_line(const IterationResult& r) {
  ordered_json j;
  j["epoch"] = r.epoch;
  j["iteration"] = r.iteration;
  j["wall_ms"] = r.wall_ms;
  return j.dump();
}

MetricsWriter::MetricsWriter(const std::filesystem::path& metrics_path,
                             const std::filesystem::path& timing_path, int flush_interval,
                             bool append)
    : metrics_path_(metrics_path), flush_interval_(std::max(1, flush_interval)) {
  const auto mode = append ? std::ios::app : std::ios::trunc;
  metrics_.open(metrics_path, std::ios::out | mode);
  if (!metrics_) throw IoError("cannot open metrics file " + metrics_path.string());
  timing_.open(timing_path, std::ios::out | mode);
  if (!timing_) throw IoError("cannot open timing file " + timing_path.string());
}

MetricsWriter::~MetricsWriter() {
  metrics_.flush();
  timing_.flush();
}

void MetricsWriter::write(const IterationResult& r) {
  metrics_ << metrics_json_line(r) << '\n';
  timing_ << timing_json_line(r) << '\n';
  if (++pending_ >= flush_interval_) flush();
}

void MetricsWriter::flush() {
  metrics_.flush();
  timing_.flush();
  pending_ = 0;
  if (!metrics_) throw IoError("failed writing metrics file " + metrics_path_.string());
}

void truncate_metrics(const std::filesystem::path& path, std::uint64_t records) {
  if (!std::filesystem::exists(path)) return;
  std::istringstream in(read_text_file(path));
  std::string kept, line;
  std::uint64_t n = 0;
  while (n < records && std::getline(in, line)) {
    kept += line + "\n";
    ++n;
  }
  write_text_file(path, kept);
}

// ---------------------------------------------------------------------------

namespace {

json tensor_to_json(const TensorD& t) {
  json j;
  j["rows"] = t.rows();
  j["cols"] = t.cols();
  j["data"] = std::vector<double>(t.data(), t.data() + t.size());
  return j;
}

TensorD tensor_from_json(const json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (rows < 0 || cols < 0 || static_cast<std::size_t>(rows * cols) != data.size())
    throw FormatError("checkpoint tensor data does not match its shape");
  TensorD t(rows, cols);
  std::copy(data.begin(), data.end(), t.data());
  return t;
}

json tensors_to_json(const std::vector<TensorD>& ts) {
  json arr = json::array();
  for (const auto& t : ts) arr.push_back(tensor_to_json(t));
  return arr;
}

std::vector<TensorD> tensors_from_json(const json& j) {
  std::vector<TensorD> out;
  for (const auto& t : j) out.push_back(tensor_from_json(t));
  return out;
}

json rng_to_json(const Rng& r) { return json{{"key", r.key()}, {"counter", r.counter()}}; }

Rng rng_from_json(const json& j) {
  return Rng::from_state(j.at("key").get<std::uint64_t>(), j.at("counter").get<std::uint64_t>());
}

}  // namespace

Checkpoint make_checkpoint(const Trainer& trainer, const EvalConfig& eval) {
  Checkpoint c;
  const auto& cfg = trainer.config();
  c.config_hash = config_hash(cfg);
  c.net_seed = cfg.net_seed;
  c.data_seed = cfg.data_seed;
  c.state = trainer.state();
  const auto step = trainer.step();
  if (step > 0) {
    c.epoch = static_cast<int>((step - 1) / cfg.n_iteration) + 1;
    c.iteration = static_cast<int>((step - 1) % cfg.n_iteration) + 1;
  }
  c.eval_rng = Rng(eval.eval_seed);
  c.frozen = trainer.world().fingerprints();
  return c;
}

std::string serialize_checkpoint(const Checkpoint& c) {
  ordered_json j;
  j["config_hash"] = c.config_hash;
  j["net_seed"] = c.net_seed;
  j["data_seed"] = c.data_seed;
  j["epoch"] = c.epoch;
  j["iteration"] = c.iteration;
  j["step"] = c.state.step;
  const auto& spec = c.state.student.spec;
  j["student"] = {{"widths", spec.widths},
                  {"hidden_activation", to_string(spec.hidden)},
                  {"output_activation", to_string(spec.output)},
                  {"init_gain", spec.init_gain},
                  {"params", tensors_to_json(c.state.student.params.tensors)}};
  const auto& a = c.state.adam;
  j["adam"] = {{"step", a.step},
               {"beta1", a.beta1},
               {"beta2", a.beta2},
               {"epsilon", a.epsilon},
               {"first_moment", tensors_to_json(a.first_moment)},
               {"second_moment", tensors_to_json(a.second_moment)}};
  j["rng"] = {{"train", rng_to_json(c.state.train_rng)}, {"eval", rng_to_json(c.eval_rng)}};
  j["frozen"] = {{"mapping", c.frozen.mapping},
                 {"generator", c.frozen.generator},
                 {"teacher", c.frozen.teacher}};
  return std::string(kCheckpointMagic) + " v" + std::to_string(kCheckpointVersion) + "\n" +
         j.dump() + "\n";
}

Checkpoint parse_checkpoint(const std::string& text) {
  const auto newline = text.find('\n');
  const std::string header = text.substr(0, newline);
  const std::string magic = std::string(kCheckpointMagic) + " v";
  if (header.rfind(magic, 0) != 0) throw FormatError("not a synthdistill checkpoint (bad header)");
  int version = 0;
  try {
    version = parse_int<int>(header.substr(magic.size()), "checkpoint version");
  } catch (const ConfigError&) {
    throw FormatError("checkpoint header has a malformed version tag");
  }
  if (version != kCheckpointVersion)
    throw FormatError("unsupported checkpoint format version " + std::to_string(version) +
                      " (this build reads version " + std::to_string(kCheckpointVersion) + ")");
  if (newline == std::string::npos) throw FormatError("checkpoint body is missing");

  Checkpoint c;
  try {
    const json j = json::parse(text.substr(newline + 1));
    c.version = version;
    c.config_hash = j.at("config_hash").get<std::string>();
    c.net_seed = j.at("net_seed").get<std::uint64_t>();
    c.data_seed = j.at("data_seed").get<std::uint64_t>();
    c.epoch = j.at("epoch").get<int>();
    c.iteration = j.at("iteration").get<int>();
    c.state.step = j.at("step").get<std::uint64_t>();
    const auto& s = j.at("student");
    c.state.student.spec.widths = s.at("widths").get<std::vector<int>>();
    c.state.student.spec.hidden = parse_activation(s.at("hidden_activation").get<std::string>());
    c.state.student.spec.output = parse_activation(s.at("output_activation").get<std::string>());
    c.state.student.spec.init_gain = s.at("init_gain").get<double>();
    c.state.student.params.tensors = tensors_from_json(s.at("params"));
    c.state.student.spec.validate("checkpoint student");
    check_conforms(c.state.student.spec, c.state.student.params);
    const auto& a = j.at("adam");
    c.state.adam.step = a.at("step").get<std::uint64_t>();
    c.state.adam.beta1 = a.at("beta1").get<double>();
    c.state.adam.beta2 = a.at("beta2").get<double>();
    c.state.adam.epsilon = a.at("epsilon").get<double>();
    c.state.adam.first_moment = tensors_from_json(a.at("first_moment"));
    c.state.adam.second_moment = tensors_from_json(a.at("second_moment"));
    c.state.train_rng = rng_from_json(j.at("rng").at("train"));
    c.eval_rng = rng_from_json(j.at("rng").at("eval"));
    const auto& f = j.at("frozen");
    c.frozen = {f.at("mapping").get<std::string>(), f.at("generator").get<std::string>(),
                f.at("teacher").get<std::string>()};
  } catch (const json::exception& e) {
    throw FormatError(std::string("malformed checkpoint body: ") + e.what());
  } catch (const DimensionError& e) {
    throw FormatError(std::string("inconsistent checkpoint: ") + e.what());
  } catch (const ConfigError& e) {
    throw FormatError(std::string("inconsistent checkpoint: ") + e.what());
  }
  return c;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  const auto tmp = path.string() + ".tmp";
  write_text_file(tmp, serialize_checkpoint(ckpt));
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move checkpoint into place at " + path.string() + ": " + ec.message());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  try {
    return parse_checkpoint(read_text_file(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void resume_from(Trainer& trainer, const Checkpoint& ckpt, bool allow_config_mismatch) {
  const auto& cfg = trainer.config();
  if (!allow_config_mismatch && ckpt.config_hash != config_hash(cfg))
    throw ConfigError("checkpoint was written under a different configuration (hash " +
                      ckpt.config_hash.substr(0, 12) + " vs " + config_hash(cfg).substr(0, 12) +
                      ")");
  if (ckpt.frozen != trainer.world().fingerprints())
    throw ConfigError("checkpoint frozen networks do not match the configured ones");
  trainer.restore(ckpt.state);
}

// ---------------------------------------------------------------------------

std::string eval_report_json(const EvalReport& r) {
  ordered_json j;
  j["accuracy"] = r.accuracy;
  j["threshold"] = r.threshold;
  j["mean_sim"] = r.mean_sim;
  j["mean_mse"] = r.mean_mse;
  j["pair_count"] = r.pair_count;
  j["teacher_accuracy"] = r.teacher_accuracy;
  return j.dump();
}

std::string ablation_csv(const AblationGrid& grid) {
  std::string out =
      "axis,value,n_seeds,accuracy_mean,accuracy_std,sim_mean,sim_std,mse_mean,mse_std,"
      "teacher_accuracy\n";
  for (const auto& cell : grid.cells) {
    const auto acc = cell.accuracy();
    const auto s = cell.sim();
    const auto m = cell.mse();
    out += to_string(grid.axis) + "," + cell.value + "," + std::to_string(cell.reports.size()) +
           "," + fmt_double(acc.mean) + "," + fmt_double(acc.std) + "," + fmt_double(s.mean) +
           "," + fmt_double(s.std) + "," + fmt_double(m.mean) + "," + fmt_double(m.std) + "," +
           fmt_double(grid.teacher_accuracy) + "\n";
  }
  return out;
}

std::string ablation_jsonl(const AblationGrid& grid) {
  std::string out;
  for (const auto& cell : grid.cells) {
    for (std::size_t i = 0; i < cell.reports.size(); ++i) {
      ordered_json j;
      j["axis"] = to_string(grid.axis);
      j["value"] = cell.value;
      j["data_seed"] = cell.data_seeds[i];
      j["report"] = ordered_json::parse(eval_report_json(cell.reports[i]));
      out += j.dump() + "\n";
    }
  }
  return out;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  out.flush();
  if (!out) throw IoError("failed writing " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("failed reading " + path.string());
  return ss.str();
}

}  // namespace synthdistill
