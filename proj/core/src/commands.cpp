#include "vtag/commands.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>

#include "vtag/checkpoint.hpp"
#include "vtag/ensemble.hpp"
#include "vtag/stacking.hpp"
#include "vtag/submission.hpp"
#include "vtag/trainer.hpp"

namespace vtag {

namespace fs = std::filesystem;

namespace {

DecodeMode decode_mode_for(const ExperimentConfig& cfg,
                           const std::string& architecture) {
  std::string mode = cfg.raw().get_or("dataset", "feature_mode", "");
  if (mode == "video") return DecodeMode::kVideo;
  if (mode == "frame") return DecodeMode::kFrame;
  check(mode.empty(), "[dataset] feature_mode must be video or frame, got \"",
        mode, "\"");
  return is_frame_level(architecture) ? DecodeMode::kFrame : DecodeMode::kVideo;
}

std::vector<Example> load_for(const ExperimentConfig& cfg, DatasetPart part,
                              DecodeMode mode) {
  return load_part(cfg.dataset_dir(), part, cfg.dataset_options(mode));
}

void ensure_output_dir(const ExperimentConfig& cfg) {
  fs::create_directories(cfg.output_dir());
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::trunc);
  check(f.good(), "cannot write ", path);
  f << text;
}

void append_log(const std::string& path, const std::vector<std::string>& lines) {
  std::ofstream f(path, std::ios::app);
  check(f.good(), "cannot write ", path);
  for (const auto& line : lines) f << line << "\n";
}

std::vector<PredictionMatrix> load_matrices(const std::vector<std::string>& paths) {
  std::vector<PredictionMatrix> out;
  out.reserve(paths.size());
  for (const auto& p : paths) out.push_back(load_prediction_matrix(p));
  return out;
}

std::vector<const PredictionMatrix*> matrix_ptrs(
    const std::vector<PredictionMatrix>& ms) {
  std::vector<const PredictionMatrix*> out;
  for (const auto& m : ms) out.push_back(&m);
  return out;
}

double safe_gap(const PredictionMatrix& preds, const LabelSets& labels) {
  for (const auto& l : labels)
    if (!l.empty()) return global_average_precision(preds, labels);
  return 0.0;
}

struct TrainedArtifacts {
  TrainResult result;
  std::unique_ptr<Model> model;
};

// Shared train -> checkpoint -> log flow used by train, cascade-train,
// distill-train and the per-member ensemble loops.
TrainedArtifacts train_and_save(const ExperimentConfig& cfg,
                                const std::vector<Example>& train,
                                const std::vector<Example>& valid,
                                const TrainInputs& extra_inputs,
                                const TrainOptions& options,
                                const std::string& checkpoint_path,
                                const std::string& log_path,
                                std::ostream& out) {
  ModelConfig model_config = cfg.model();
  Rng init_rng = Rng(options.seed).fork(0x1417);
  TrainedArtifacts artifacts;
  artifacts.model = build_model(model_config, init_rng);

  TrainInputs inputs = extra_inputs;
  inputs.train = &train;
  inputs.valid = &valid;
  artifacts.result = train_model(*artifacts.model, inputs, options);

  save_checkpoint(checkpoint_path, artifacts.model->params());
  if (!log_path.empty()) append_log(log_path, artifacts.result.log);
  out << "trained " << model_config.architecture << ": best validation gap "
      << artifacts.result.best_gap << " at step " << artifacts.result.best_step
      << ", checkpoint " << checkpoint_path << "\n";
  return artifacts;
}

// Member prediction outputs for an ensemble run: one matrix per configured
// part, plus running sums for the simple-average combination.
struct PartPredictions {
  std::vector<DatasetPart> parts;
  std::vector<std::vector<Example>> examples;
  std::vector<LabelSets> labels;
  std::vector<PredictionMatrix> sums;

  void load(const ExperimentConfig& cfg, DecodeMode mode) {
    std::vector<std::string> names =
        cfg.raw().get_list("ensemble", "predict_parts");
    if (names.empty()) names = {"train2", "validate2", "test"};
    for (const auto& name : names) {
      auto part = parse_part_name(name);
      check(part.has_value(), "[ensemble] predict_parts: unknown part \"",
            name, "\"");
      parts.push_back(*part);
      examples.push_back(load_for(cfg, *part, mode));
      labels.push_back(label_sets(examples.back()));
    }
  }

  void accumulate(Model& model, const ExperimentConfig& cfg, int64_t member,
                  std::ostream& out) {
    for (size_t i = 0; i < parts.size(); ++i) {
      PredictionMatrix preds = predict_all(model, examples[i]);
      if (sums.size() <= i)
        sums.push_back(PredictionMatrix(preds.num_examples, preds.num_labels));
      for (size_t j = 0; j < preds.values.size(); ++j)
        sums[i].values[j] += preds.values[j];
      std::string path = strcat_msg(cfg.output_dir(), "/member", member, ".",
                                    part_name(parts[i]), ".pred");
      save_prediction_matrix(path, preds);
      PredictionManifest manifest{cfg.model().architecture,
                                  strcat_msg("member", member),
                                  part_name(parts[i]),
                                  safe_gap(preds, labels[i])};
      save_manifest(path, manifest);
      out << "  member " << member << " " << part_name(parts[i])
          << " gap=" << manifest.gap << "\n";
    }
  }

  void write_combined(const ExperimentConfig& cfg, int64_t members,
                      const std::string& stem, std::ostream& out) {
    for (size_t i = 0; i < parts.size(); ++i) {
      PredictionMatrix avg = sums[i];
      for (float& v : avg.values) v /= static_cast<float>(members);
      std::string path = strcat_msg(cfg.output_dir(), "/", stem, ".",
                                    part_name(parts[i]), ".pred");
      save_prediction_matrix(path, avg);
      PredictionManifest manifest{stem + " (simple average)", "",
                                  part_name(parts[i]),
                                  safe_gap(avg, labels[i])};
      save_manifest(path, manifest);
      out << stem << " " << part_name(parts[i]) << " combined gap="
          << manifest.gap << "\n";
    }
  }
};

}  // namespace

void cmd_synth(const ExperimentConfig& cfg, std::ostream& out) {
  SynthSpec spec = cfg.synth_spec();
  SynthExportPlan plan = cfg.synth_plan();
  spec.num_examples = plan.total();
  SynthDataset dataset = synth_generate(spec);
  export_shards(dataset, cfg.dataset_dir(), plan);
  out << "generated " << spec.num_examples << " examples into "
      << cfg.dataset_dir() << " (labels=" << spec.num_labels
      << ", rgb_dim=" << spec.rgb_dim << ", audio_dim=" << spec.audio_dim
      << ", frames=" << spec.max_frames << ")\n";
}

void cmd_split(const ExperimentConfig& cfg, std::ostream& out) {
  std::string dir = cfg.raw().get_or("split", "dir", cfg.dataset_dir());
  SplitResult split = split_files(list_shard_files(dir));
  std::ostringstream report;
  for (DatasetPart part : kAllParts)
    for (const auto& f : split.part(part))
      report << part_name(part) << "\t" << f << "\n";
  for (const auto& f : split.rejects) report << "reject\t" << f << "\n";
  out << report.str();
  std::string report_path = cfg.raw().get_or("split", "report", "");
  if (!report_path.empty()) write_text(report_path, report.str());
  check(split.rejects.empty(), split.rejects.size(),
        " files matched no split rule (see report)");
}

void cmd_train(const ExperimentConfig& cfg, std::ostream& out) {
  ensure_output_dir(cfg);
  DecodeMode mode = decode_mode_for(cfg, cfg.model().architecture);
  std::vector<Example> train = load_for(cfg, DatasetPart::kTrain1, mode);
  std::vector<Example> valid = load_for(cfg, DatasetPart::kValidate1, mode);
  auto artifacts = train_and_save(cfg, train, valid, {}, cfg.training(),
                                  cfg.checkpoint_path(),
                                  cfg.output_dir() + "/train.log", out);
  PredictionMatrix preds = predict_all(*artifacts.model, valid);
  EvalReport report = evaluate(preds, label_sets(valid));
  write_text(cfg.output_dir() + "/validate1.report", format_report(report));
  out << format_report(report);
}

void cmd_predict(const ExperimentConfig& cfg, std::ostream& out) {
  ensure_output_dir(cfg);
  ModelConfig model_config = cfg.model();
  auto part = parse_part_name(cfg.raw().get_or("predict", "part", "test"));
  check(part.has_value(), "[predict] part: unknown dataset part");
  DecodeMode mode = decode_mode_for(cfg, model_config.architecture);
  std::vector<Example> examples = load_for(cfg, *part, mode);

  Rng dummy_rng(1);
  auto model = build_model(model_config, dummy_rng);
  std::string checkpoint =
      cfg.raw().get_or("predict", "checkpoint", cfg.checkpoint_path());
  restore_checkpoint(checkpoint, model->params());

  auto donor_matrices = load_matrices(cfg.raw().get_list("predict", "donors"));
  PredictionMatrix preds =
      predict_all(*model, examples, matrix_ptrs(donor_matrices));

  std::string path = cfg.raw().get_or(
      "predict", "output",
      strcat_msg(cfg.output_dir(), "/", part_name(*part), ".pred"));
  save_prediction_matrix(path, preds);
  PredictionManifest manifest{model_config.architecture, checkpoint,
                              part_name(*part),
                              safe_gap(preds, label_sets(examples))};
  save_manifest(path, manifest);
  out << "wrote " << path << " (" << preds.num_examples << " x "
      << preds.num_labels << ", gap=" << manifest.gap << ")\n";
}

void cmd_eval(const ExperimentConfig& cfg, std::ostream& out) {
  auto part = parse_part_name(cfg.raw().get_or("eval", "part", "validate1"));
  check(part.has_value(), "[eval] part: unknown dataset part");
  PredictionMatrix preds =
      load_prediction_matrix(cfg.raw().get("eval", "predictions"));
  std::vector<Example> examples = load_for(cfg, *part, DecodeMode::kVideo);
  EvalReport report = evaluate(preds, label_sets(examples),
                               cfg.raw().get_int("eval", "top_k", 20));
  out << format_report(report);
  std::string report_path = cfg.raw().get_or("eval", "report", "");
  if (!report_path.empty()) write_text(report_path, format_report(report));
}

void cmd_bag(const ExperimentConfig& cfg, std::ostream& out) {
  ensure_output_dir(cfg);
  TrainOptions options = cfg.training();
  int64_t members = cfg.raw().get_int("ensemble", "members", 8);
  DecodeMode mode = decode_mode_for(cfg, cfg.model().architecture);
  std::vector<Example> train = load_for(cfg, DatasetPart::kTrain1, mode);
  std::vector<Example> valid = load_for(cfg, DatasetPart::kValidate1, mode);

  PartPredictions outputs;
  outputs.load(cfg, mode);
  for (int64_t member = 0; member < members; ++member) {
    // fresh bootstrap resample and seed per member
    std::vector<int64_t> sample = bootstrap_sample(
        static_cast<int64_t>(train.size()), options.seed + 7919 * (member + 1));
    std::vector<Example> resampled;
    resampled.reserve(sample.size());
    for (int64_t idx : sample) resampled.push_back(train[idx]);

    TrainOptions member_options = options;
    member_options.seed = options.seed + 131 * (member + 1);
    auto artifacts = train_and_save(
        cfg, resampled, valid, {}, member_options,
        strcat_msg(cfg.output_dir(), "/member", member, ".cstk"),
        cfg.output_dir() + "/bag.log", out);
    outputs.accumulate(*artifacts.model, cfg, member, out);
  }
  outputs.write_combined(cfg, members, "bag", out);
}

void cmd_boost(const ExperimentConfig& cfg, std::ostream& out) {
  ensure_output_dir(cfg);
  TrainOptions options = cfg.training();
  int64_t rounds = cfg.raw().get_int("ensemble", "members", 8);
  double alpha = cfg.raw().get_double("ensemble", "alpha", 1.0);
  double clip = cfg.raw().get_double("ensemble", "clip", 5.0);
  bool drop_clipped = cfg.raw().get_bool("ensemble", "drop_clipped", false);

  DecodeMode mode = decode_mode_for(cfg, cfg.model().architecture);
  std::vector<Example> train = load_for(cfg, DatasetPart::kTrain1, mode);
  std::vector<Example> valid = load_for(cfg, DatasetPart::kValidate1, mode);
  LabelSets train_labels = label_sets(train);

  PartPredictions outputs;
  outputs.load(cfg, mode);
  SampleWeights weights = SampleWeights::initial(static_cast<int64_t>(train.size()));
  std::vector<std::string> weight_log;

  for (int64_t round = 0; round < rounds; ++round) {
    std::vector<bool> excluded(train.size(), false);
    if (drop_clipped && round > 0) {
      for (size_t i = 0; i < train.size(); ++i)
        excluded[i] = weights.w[i] >= clip;
    }
    TrainInputs inputs;
    inputs.example_weights = &weights.w;
    if (drop_clipped && round > 0) inputs.excluded = &excluded;

    TrainOptions member_options = options;
    member_options.seed = options.seed + 131 * (round + 1);
    auto artifacts = train_and_save(
        cfg, train, valid, inputs, member_options,
        strcat_msg(cfg.output_dir(), "/member", round, ".cstk"),
        cfg.output_dir() + "/boost.log", out);
    outputs.accumulate(*artifacts.model, cfg, round, out);

    if (round + 1 < rounds) {
      PredictionMatrix train_preds = predict_all(*artifacts.model, train);
      std::vector<double> errs = per_example_errors(train_preds, train_labels);
      weights = boosting_update(weights, errs, alpha, clip);
      double mean_err = 0.0;
      for (double e : errs) mean_err += e;
      mean_err /= static_cast<double>(errs.size());
      double max_w = 0.0;
      for (double w : weights.w) max_w = std::max(max_w, w);
      weight_log.push_back(strcat_msg("round=", round, " mean_err=", mean_err,
                                      " max_weight=", max_w));
    }
  }
  append_log(cfg.output_dir() + "/boost_weights.log", weight_log);
  outputs.write_combined(cfg, rounds, "boost", out);
}

void cmd_cascade_train(const ExperimentConfig& cfg, std::ostream& out) {
  ensure_output_dir(cfg);
  ModelConfig model_config = cfg.model();
  check(model_config.cascade,
        "[model] cascade must be true for cascade-train");
  DecodeMode mode = decode_mode_for(cfg, model_config.architecture);
  std::vector<Example> train = load_for(cfg, DatasetPart::kTrain1, mode);
  std::vector<Example> valid = load_for(cfg, DatasetPart::kValidate1, mode);

  auto donors_train = load_matrices(cfg.raw().get_list("cascade", "donors_train1"));
  auto donors_valid = load_matrices(cfg.raw().get_list("cascade", "donors_validate1"));
  check(!donors_train.empty(), "[cascade] donors_train1: need at least one matrix");
  check(!donors_valid.empty(), "[cascade] donors_validate1: need at least one matrix");

  TrainInputs inputs;
  inputs.cascade_train = matrix_ptrs(donors_train);
  inputs.cascade_valid = matrix_ptrs(donors_valid);
  train_and_save(cfg, train, valid, inputs, cfg.training(),
                 cfg.checkpoint_path(), cfg.output_dir() + "/train.log", out);
}

void cmd_distill_train(const ExperimentConfig& cfg, std::ostream& out) {
  ensure_output_dir(cfg);
  DecodeMode mode = decode_mode_for(cfg, cfg.model().architecture);
  std::vector<Example> train = load_for(cfg, DatasetPart::kTrain1, mode);
  std::vector<Example> valid = load_for(cfg, DatasetPart::kValidate1, mode);

  PredictionMatrix soft =
      load_prediction_matrix(cfg.raw().get("distill", "soft_targets"));
  TrainOptions options = cfg.training();
  if (!cfg.raw().has("training", "lambda")) options.lambda = 0.5;

  TrainInputs inputs;
  inputs.soft_targets = &soft;
  train_and_save(cfg, train, valid, inputs, options, cfg.checkpoint_path(),
                 cfg.output_dir() + "/train.log", out);
}

void cmd_stack(const ExperimentConfig& cfg, std::ostream& out) {
  ensure_output_dir(cfg);
  StackMode mode = parse_stack_mode(cfg.raw().get_or("stack", "mode", "classwise"));

  auto train_matrices = load_matrices(cfg.raw().get_list("stack", "members"));
  auto valid_matrices = load_matrices(cfg.raw().get_list("stack", "members_valid"));
  check(!train_matrices.empty(), "[stack] members: need at least one matrix");
  check(valid_matrices.size() == train_matrices.size(),
        "[stack] members_valid must list one matrix per member");

  DecodeMode decode = cfg.raw().get_or("dataset", "feature_mode", "video") ==
                              "frame"
                          ? DecodeMode::kFrame
                          : DecodeMode::kVideo;
  std::vector<Example> train2 = load_for(cfg, DatasetPart::kTrain2, decode);
  std::vector<Example> validate2 = load_for(cfg, DatasetPart::kValidate2, decode);

  auto train_features = mean_feature_rows(train2);
  auto valid_features = mean_feature_rows(validate2);
  int64_t feature_dim =
      train_features.empty() ? 0 : static_cast<int64_t>(train_features[0].size());

  StackerTrainOptions options;
  options.learning_rate = cfg.raw().get_double("stack", "learning_rate", 0.02);
  options.batch_size = cfg.raw().get_int("stack", "batch_size", 256);
  options.max_steps = cfg.raw().get_int("stack", "max_steps", 600);
  options.eval_interval = cfg.raw().get_int("stack", "eval_interval", 50);
  options.patience = cfg.raw().get_int("stack", "patience", 4);
  options.seed = static_cast<uint64_t>(cfg.raw().get_int("stack", "seed", 1));
  options.warm_start = cfg.raw().get_bool("stack", "warm_start", true);

  Rng rng = Rng(options.seed).fork(0x57cc);
  StackerParams params = StackerParams::create(
      mode, static_cast<int64_t>(train_matrices.size()),
      train_matrices[0].num_labels, feature_dim,
      cfg.raw().get_int("stack", "groups", 16),
      cfg.raw().get_int("stack", "rank", 4), rng);

  StackerTrainResult result = train_stacker(
      params, matrix_ptrs(train_matrices), label_sets(train2), train_features,
      matrix_ptrs(valid_matrices), label_sets(validate2), valid_features,
      options);
  append_log(cfg.output_dir() + "/stack.log", result.log);
  out << "stacker " << stack_mode_name(mode) << ": validate2 gap "
      << result.best_gap << " at step " << result.best_step << "\n";

  std::string params_path = cfg.raw().get_or(
      "stack", "params_out", cfg.output_dir() + "/stacker.cstk");
  ParamList trainable = params.trainable();
  if (!trainable.empty()) save_checkpoint(params_path, trainable);

  auto target_paths = cfg.raw().get_list("stack", "members_target");
  if (!target_paths.empty()) {
    check(target_paths.size() == train_matrices.size(),
          "[stack] members_target must list one matrix per member");
    auto target_part_name = cfg.raw().get_or("stack", "target_part", "test");
    auto target_part = parse_part_name(target_part_name);
    check(target_part.has_value(), "[stack] target_part: unknown part");
    std::vector<Example> target = load_for(cfg, *target_part, decode);
    auto target_matrices = load_matrices(target_paths);
    PredictionMatrix stacked = stacker_apply(params, matrix_ptrs(target_matrices),
                                             mean_feature_rows(target));
    std::string path = cfg.raw().get_or(
        "stack", "output",
        strcat_msg(cfg.output_dir(), "/stacked.", target_part_name, ".pred"));
    save_prediction_matrix(path, stacked);
    PredictionManifest manifest{
        strcat_msg("stacker-", stack_mode_name(mode)), params_path,
        target_part_name, safe_gap(stacked, label_sets(target))};
    save_manifest(path, manifest);
    out << "stacked " << target_part_name << " gap=" << manifest.gap
        << " -> " << path << "\n";
  }
}

void cmd_submit(const ExperimentConfig& cfg, std::ostream& out) {
  ensure_output_dir(cfg);
  auto part = parse_part_name(cfg.raw().get_or("submit", "part", "test"));
  check(part.has_value(), "[submit] part: unknown dataset part");
  PredictionMatrix preds =
      load_prediction_matrix(cfg.raw().get("submit", "predictions"));
  std::vector<Example> examples = load_for(cfg, *part, DecodeMode::kVideo);
  std::string path = cfg.raw().get_or("submit", "output",
                                      cfg.output_dir() + "/submission.csv");
  write_submission(path, preds, video_ids(examples),
                   cfg.raw().get_int("submit", "top_k", 20));
  out << "wrote " << path << " (" << preds.num_examples << " videos)\n";
}

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = {
      "synth", "split", "train", "predict", "eval", "bag",
      "boost", "cascade-train", "distill-train", "stack", "submit"};
  return names;
}

int run_command(const std::string& command, const std::string& config_path,
                std::ostream& out, std::ostream& err) {
  try {
    ExperimentConfig cfg = ExperimentConfig::load(config_path);
    if (command == "synth") cmd_synth(cfg, out);
    else if (command == "split") cmd_split(cfg, out);
    else if (command == "train") cmd_train(cfg, out);
    else if (command == "predict") cmd_predict(cfg, out);
    else if (command == "eval") cmd_eval(cfg, out);
    else if (command == "bag") cmd_bag(cfg, out);
    else if (command == "boost") cmd_boost(cfg, out);
    else if (command == "cascade-train") cmd_cascade_train(cfg, out);
    else if (command == "distill-train") cmd_distill_train(cfg, out);
    else if (command == "stack") cmd_stack(cfg, out);
    else if (command == "submit") cmd_submit(cfg, out);
    else {
      err << "unknown command \"" << command << "\"\n";
      return 2;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

}  // namespace vtag
