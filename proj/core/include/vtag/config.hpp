#pragma once

#include <map>
#include <string>

#include "vtag/dataset.hpp"
#include "vtag/model.hpp"

namespace vtag {

// Flat sectioned key-value text:
//   # comment
//   [section]
//   key = value
// Keys are unique within a section; values are trimmed verbatim strings.
class ConfigFile {
 public:
  static ConfigFile parse_file(const std::string& path);
  static ConfigFile parse_string(const std::string& text,
                                 const std::string& origin = "<string>");

  bool has(const std::string& section, const std::string& key) const;
  std::string get(const std::string& section, const std::string& key) const;
  std::string get_or(const std::string& section, const std::string& key,
                     const std::string& fallback) const;
  int64_t get_int(const std::string& section, const std::string& key,
                  int64_t fallback) const;
  double get_double(const std::string& section, const std::string& key,
                    double fallback) const;
  bool get_bool(const std::string& section, const std::string& key,
                bool fallback) const;
  // "a,b,c" -> {"a","b","c"}; missing key -> {}
  std::vector<std::string> get_list(const std::string& section,
                                    const std::string& key) const;

  const std::map<std::string, std::map<std::string, std::string>>& sections()
      const {
    return sections_;
  }

 private:
  std::string origin_;
  std::map<std::string, std::map<std::string, std::string>> sections_;
};

struct TrainOptions {
  double learning_rate = 0.01;
  int64_t batch_size = 128;
  int64_t max_steps = 1000;
  int64_t eval_interval = 100;
  int64_t patience = 5;
  uint64_t seed = 1;
  double lambda = 0.0;      // distillation weight on the soft target
  double aux_share = 0.15;  // weight share of intermediate-stage losses
  // When > 0: once a batch's mean loss drops below the threshold, mix in the
  // batch's own most confident tags as a soft target.
  double self_target_threshold = 0.0;
  double self_target_lambda = 0.5;
};

// Typed views over an experiment config file.
class ExperimentConfig {
 public:
  static ExperimentConfig load(const std::string& path);
  static ExperimentConfig from_string(const std::string& text);

  ModelConfig model() const;
  SynthSpec synth_spec() const;
  SynthExportPlan synth_plan() const;
  TrainOptions training() const;
  DatasetOptions dataset_options(DecodeMode mode) const;

  std::string dataset_dir() const;
  std::string output_dir() const;
  std::string checkpoint_path() const;  // output/<model>.cstk by default

  const ConfigFile& raw() const { return file_; }

 private:
  ConfigFile file_;
};

}  // namespace vtag
