#pragma once

#include "vtag/example.hpp"
#include "vtag/metrics.hpp"
#include "vtag/split.hpp"
#include "vtag/synth.hpp"

namespace vtag {

struct DatasetOptions {
  DecodeMode mode = DecodeMode::kVideo;
  int64_t num_labels = 0;   // label indices must stay below this bound
  int64_t max_frames = 30;  // longer sequences are truncated
  double dequant_lo = -2.0;
  double dequant_hi = 2.0;
};

// All shard files of one part under dir, classified by name, sorted, parsed
// and decoded. Deterministic order: files lexicographic, records in file
// order.
std::vector<Example> load_part(const std::string& dir, DatasetPart part,
                               const DatasetOptions& options);

std::vector<std::string> list_shard_files(const std::string& dir);

LabelSets label_sets(const std::vector<Example>& examples);
std::vector<std::string> video_ids(const std::vector<Example>& examples);

// How many examples of a synthetic dataset go to each part, in dataset
// order: train1 first, then validate1, train2, validate2, test.
struct SynthExportPlan {
  std::array<int64_t, 5> counts = {0, 0, 0, 0, 0};  // indexed by DatasetPart
  int64_t examples_per_shard = 1024;
  double quant_lo = -2.0;
  double quant_hi = 2.0;

  int64_t total() const {
    int64_t t = 0;
    for (int64_t c : counts) t += c;
    return t;
  }
};

// Writes the dataset as record shards whose names follow the five-part
// file-name convention (classify_file maps them back).
void export_shards(const SynthDataset& dataset, const std::string& dir,
                   const SynthExportPlan& plan);

// Contiguous slice view of a generated dataset, for in-memory pipelines.
std::vector<Example> slice_examples(const std::vector<Example>& examples,
                                    int64_t start, int64_t count);

}  // namespace vtag
