#include "vtag/dataset.hpp"

#include <algorithm>
#include <filesystem>

#include "vtag/record_stream.hpp"

namespace vtag {

namespace fs = std::filesystem;

std::vector<std::string> list_shard_files(const std::string& dir) {
  check(fs::is_directory(dir), "not a directory: ", dir);
  std::vector<std::string> names;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file()) names.push_back(entry.path().string());
  std::sort(names.begin(), names.end());
  return names;
}

namespace {

void truncate_frames(Example& ex, int64_t max_frames) {
  if (!ex.frame_level || ex.frame_level->frames <= max_frames) return;
  FrameLevel& fl = *ex.frame_level;
  fl.frames = max_frames;
  fl.rgb.resize(static_cast<size_t>(max_frames * fl.rgb_dim));
  fl.audio.resize(static_cast<size_t>(max_frames * fl.audio_dim));
}

void validate_labels(const Example& ex, int64_t num_labels) {
  if (num_labels <= 0) return;
  for (int64_t l : ex.labels)
    check(l < num_labels, "example ", ex.video_id, ": label ", l,
          " outside vocabulary of ", num_labels);
}

}  // namespace

std::vector<Example> load_part(const std::string& dir, DatasetPart part,
                               const DatasetOptions& options) {
  SplitResult split = split_files(list_shard_files(dir));
  std::vector<Example> examples;
  for (const std::string& path : split.part(part)) {
    auto payloads = parse_record_stream(read_file_bytes(path));
    for (const auto& payload : payloads) {
      Example ex = decode_example(payload, options.mode, options.dequant_lo,
                                  options.dequant_hi);
      truncate_frames(ex, options.max_frames);
      validate_labels(ex, options.num_labels);
      examples.push_back(std::move(ex));
    }
  }
  return examples;
}

LabelSets label_sets(const std::vector<Example>& examples) {
  LabelSets out;
  out.reserve(examples.size());
  for (const auto& ex : examples) out.push_back(ex.labels);
  return out;
}

std::vector<std::string> video_ids(const std::vector<Example>& examples) {
  std::vector<std::string> out;
  out.reserve(examples.size());
  for (const auto& ex : examples) out.push_back(ex.video_id);
  return out;
}

namespace {

// Shard names that classify_file maps back to the right part.
std::string shard_name(DatasetPart part, int64_t index) {
  static const char* alnum = "0123456789ABCDEFGHIJKLMNOPQRSTUVWXYZ";
  char hi = alnum[(index / 36) % 36];
  char lo = alnum[index % 36];
  switch (part) {
    case DatasetPart::kTrain1:
      check(index < 36 * 36, "too many train1 shards");
      return strcat_msg("train", hi, lo, ".tfrecord");
    case DatasetPart::kValidate1:
      check(index < 36, "too many validate1 shards");
      return strcat_msg("validatea", lo, ".tfrecord");
    case DatasetPart::kTrain2:
      check(index < 36, "too many train2 shards");
      return strcat_msg("validateb", lo, ".tfrecord");
    case DatasetPart::kValidate2:
      check(index < 10 * 36, "too many validate2 shards");
      return strcat_msg("validate", hi, lo, ".tfrecord");
    case DatasetPart::kTest:
      check(index < 36 * 36, "too many test shards");
      return strcat_msg("test", hi, lo, ".tfrecord");
  }
  fail("bad part");
}

}  // namespace

void export_shards(const SynthDataset& dataset, const std::string& dir,
                   const SynthExportPlan& plan) {
  check(plan.total() <= static_cast<int64_t>(dataset.examples.size()),
        "export plan needs ", plan.total(), " examples, dataset has ",
        dataset.examples.size());
  check(plan.examples_per_shard >= 1, "examples_per_shard must be >= 1");
  fs::create_directories(dir);
  int64_t cursor = 0;
  for (DatasetPart part : kAllParts) {
    int64_t remaining = plan.counts[static_cast<size_t>(part)];
    int64_t shard_index = 0;
    while (remaining > 0) {
      int64_t take = std::min(remaining, plan.examples_per_shard);
      std::vector<std::vector<uint8_t>> payloads;
      payloads.reserve(static_cast<size_t>(take));
      for (int64_t i = 0; i < take; ++i)
        payloads.push_back(encode_example(dataset.examples[cursor + i],
                                          plan.quant_lo, plan.quant_hi));
      auto bytes = write_record_stream(payloads);
      fs::path path = fs::path(dir) / shard_name(part, shard_index);
      write_file_bytes(path.string(), bytes);
      cursor += take;
      remaining -= take;
      ++shard_index;
    }
  }
}

std::vector<Example> slice_examples(const std::vector<Example>& examples,
                                    int64_t start, int64_t count) {
  check(start >= 0 && start + count <= static_cast<int64_t>(examples.size()),
        "slice [", start, ", ", start + count, ") out of range for ",
        examples.size(), " examples");
  return std::vector<Example>(examples.begin() + start,
                              examples.begin() + start + count);
}

}  // namespace vtag
