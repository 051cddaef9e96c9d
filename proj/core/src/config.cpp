#include "vtag/config.hpp"

#include <fstream>

namespace vtag {

namespace {

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

ConfigFile ConfigFile::parse_file(const std::string& path) {
  std::ifstream f(path);
  check(f.good(), "cannot open config: ", path);
  std::string text((std::istreambuf_iterator<char>(f)),
                   std::istreambuf_iterator<char>());
  return parse_string(text, path);
}

ConfigFile ConfigFile::parse_string(const std::string& text,
                                    const std::string& origin) {
  ConfigFile cfg;
  cfg.origin_ = origin;
  std::string section;
  size_t line_no = 0;
  size_t pos = 0;
  while (pos <= text.size()) {
    size_t eol = text.find('\n', pos);
    std::string line = trim(text.substr(
        pos, eol == std::string::npos ? std::string::npos : eol - pos));
    ++line_no;
    pos = eol == std::string::npos ? text.size() + 1 : eol + 1;
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[') {
      check(line.back() == ']', origin, ":", line_no, ": unterminated section");
      section = trim(line.substr(1, line.size() - 2));
      check(!section.empty(), origin, ":", line_no, ": empty section name");
      cfg.sections_[section];
      continue;
    }
    size_t eq = line.find('=');
    check(eq != std::string::npos, origin, ":", line_no,
          ": expected key = value, got \"", line, "\"");
    check(!section.empty(), origin, ":", line_no,
          ": key outside of any [section]");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    check(!key.empty(), origin, ":", line_no, ": empty key");
    check(!cfg.sections_[section].count(key), origin, ":", line_no,
          ": duplicate key [", section, "] ", key);
    cfg.sections_[section][key] = value;
  }
  return cfg;
}

bool ConfigFile::has(const std::string& section, const std::string& key) const {
  auto it = sections_.find(section);
  return it != sections_.end() && it->second.count(key) > 0;
}

std::string ConfigFile::get(const std::string& section,
                            const std::string& key) const {
  check(has(section, key), origin_, ": missing required key [", section, "] ",
        key);
  return sections_.at(section).at(key);
}

std::string ConfigFile::get_or(const std::string& section,
                               const std::string& key,
                               const std::string& fallback) const {
  return has(section, key) ? sections_.at(section).at(key) : fallback;
}

int64_t ConfigFile::get_int(const std::string& section, const std::string& key,
                            int64_t fallback) const {
  if (!has(section, key)) return fallback;
  const std::string& v = sections_.at(section).at(key);
  try {
    size_t used = 0;
    int64_t out = std::stoll(v, &used);
    check(used == v.size(), "");
    return out;
  } catch (...) {
    fail(origin_, ": [", section, "] ", key, ": not an integer: \"", v, "\"");
  }
}

double ConfigFile::get_double(const std::string& section,
                              const std::string& key, double fallback) const {
  if (!has(section, key)) return fallback;
  const std::string& v = sections_.at(section).at(key);
  try {
    size_t used = 0;
    double out = std::stod(v, &used);
    check(used == v.size(), "");
    return out;
  } catch (...) {
    fail(origin_, ": [", section, "] ", key, ": not a number: \"", v, "\"");
  }
}

bool ConfigFile::get_bool(const std::string& section, const std::string& key,
                          bool fallback) const {
  if (!has(section, key)) return fallback;
  const std::string& v = sections_.at(section).at(key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  fail(origin_, ": [", section, "] ", key, ": not a boolean: \"", v, "\"");
}

std::vector<std::string> ConfigFile::get_list(const std::string& section,
                                              const std::string& key) const {
  std::vector<std::string> out;
  if (!has(section, key)) return out;
  const std::string& v = sections_.at(section).at(key);
  size_t pos = 0;
  while (pos < v.size()) {
    size_t comma = v.find(',', pos);
    std::string item = trim(
        v.substr(pos, comma == std::string::npos ? std::string::npos
                                                 : comma - pos));
    if (!item.empty()) out.push_back(item);
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return out;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  ExperimentConfig cfg;
  cfg.file_ = ConfigFile::parse_file(path);
  return cfg;
}

ExperimentConfig ExperimentConfig::from_string(const std::string& text) {
  ExperimentConfig cfg;
  cfg.file_ = ConfigFile::parse_string(text);
  return cfg;
}

ModelConfig ExperimentConfig::model() const {
  const ConfigFile& f = file_;
  ModelConfig m;
  m.architecture = f.get_or("model", "architecture", m.architecture);
  m.num_labels = f.get_int("dataset", "labels", m.num_labels);
  m.rgb_dim = f.get_int("dataset", "rgb_dim", m.rgb_dim);
  m.audio_dim = f.get_int("dataset", "audio_dim", m.audio_dim);
  m.max_frames = f.get_int("dataset", "max_frames", m.max_frames);
  m.moe_mixtures = f.get_int("model", "mixtures", m.moe_mixtures);
  m.lstm_kind = f.get_or("model", "lstm_kind", m.lstm_kind);
  m.lstm_cells = f.get_int("model", "cells", m.lstm_cells);
  m.lstm_layers = f.get_int("model", "layers", m.lstm_layers);
  m.audio_cells = f.get_int("model", "audio_cells", m.audio_cells);
  m.representation = f.get_or("model", "representation", m.representation);
  m.chain_stages = f.get_int("model", "stages", m.chain_stages);
  m.chain_projection = f.get_int("model", "projection", m.chain_projection);
  m.attention_groups = f.get_int("model", "attention_groups", m.attention_groups);
  m.positional_dim = f.get_int("model", "positional_dim", m.positional_dim);
  m.cnn_filters = f.get_or("model", "filters", m.cnn_filters);
  m.cnn_layers = f.get_int("model", "cnn_layers", m.cnn_layers);
  m.clip_frames = f.get_int("model", "clip_frames", m.clip_frames);
  m.resolutions = f.get_int("model", "resolutions", m.resolutions);
  m.consensus = f.get_or("model", "consensus", m.consensus);
  m.cascade = f.get_bool("model", "cascade", m.cascade);
  m.cascade_dim = f.get_int("model", "cascade_dim", m.cascade_dim);
  return m;
}

SynthSpec ExperimentConfig::synth_spec() const {
  const ConfigFile& f = file_;
  SynthSpec s;
  s.seed = static_cast<uint64_t>(f.get_int("dataset", "seed", 1));
  s.num_labels = f.get_int("dataset", "labels", s.num_labels);
  s.rgb_dim = f.get_int("dataset", "rgb_dim", s.rgb_dim);
  s.audio_dim = f.get_int("dataset", "audio_dim", s.audio_dim);
  s.max_frames = f.get_int("dataset", "max_frames", s.max_frames);
  s.mean_labels_per_example =
      f.get_double("dataset", "mean_labels", s.mean_labels_per_example);
  s.prototype_scale = f.get_double("dataset", "prototype_scale", s.prototype_scale);
  s.window_min_frames = f.get_int("dataset", "window_min", s.window_min_frames);
  s.window_max_frames = f.get_int("dataset", "window_max", s.window_max_frames);
  s.noise_level = f.get_double("dataset", "noise", s.noise_level);
  double pair_r = f.get_double("dataset", "correlation_pairs", 0.0);
  if (pair_r != 0.0) s.correlation = pairwise_correlation(s.num_labels, pair_r);
  // num_examples is the sum of the export plan below
  return s;
}

SynthExportPlan ExperimentConfig::synth_plan() const {
  const ConfigFile& f = file_;
  SynthExportPlan plan;
  plan.counts[static_cast<size_t>(DatasetPart::kTrain1)] =
      f.get_int("dataset", "train1_examples", 4096);
  plan.counts[static_cast<size_t>(DatasetPart::kValidate1)] =
      f.get_int("dataset", "validate1_examples", 1024);
  plan.counts[static_cast<size_t>(DatasetPart::kTrain2)] =
      f.get_int("dataset", "train2_examples", 1024);
  plan.counts[static_cast<size_t>(DatasetPart::kValidate2)] =
      f.get_int("dataset", "validate2_examples", 1024);
  plan.counts[static_cast<size_t>(DatasetPart::kTest)] =
      f.get_int("dataset", "test_examples", 1024);
  plan.examples_per_shard = f.get_int("dataset", "examples_per_shard", 1024);
  return plan;
}

TrainOptions ExperimentConfig::training() const {
  const ConfigFile& f = file_;
  TrainOptions t;
  t.learning_rate = f.get_double("training", "learning_rate", t.learning_rate);
  t.batch_size = f.get_int("training", "batch_size", t.batch_size);
  t.max_steps = f.get_int("training", "max_steps", t.max_steps);
  t.eval_interval = f.get_int("training", "eval_interval", t.eval_interval);
  t.patience = f.get_int("training", "patience", t.patience);
  t.seed = static_cast<uint64_t>(f.get_int("training", "seed", 1));
  t.lambda = f.get_double("training", "lambda", t.lambda);
  t.aux_share = f.get_double("training", "aux_share", t.aux_share);
  t.self_target_threshold =
      f.get_double("training", "self_target_threshold", t.self_target_threshold);
  t.self_target_lambda =
      f.get_double("training", "self_target_lambda", t.self_target_lambda);
  return t;
}

DatasetOptions ExperimentConfig::dataset_options(DecodeMode mode) const {
  DatasetOptions o;
  o.mode = mode;
  o.num_labels = file_.get_int("dataset", "labels", 25);
  o.max_frames = file_.get_int("dataset", "max_frames", 30);
  o.dequant_lo = file_.get_double("dataset", "dequant_lo", -2.0);
  o.dequant_hi = file_.get_double("dataset", "dequant_hi", 2.0);
  return o;
}

std::string ExperimentConfig::dataset_dir() const {
  return file_.get("dataset", "dir");
}

std::string ExperimentConfig::output_dir() const {
  return file_.get_or("output", "dir", "out");
}

std::string ExperimentConfig::checkpoint_path() const {
  return file_.get_or("output", "checkpoint",
                      output_dir() + "/model.cstk");
}

}  // namespace vtag
