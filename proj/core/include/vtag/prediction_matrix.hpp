#pragma once

#include <span>
#include <string>
#include <vector>

#include "vtag/common.hpp"

namespace vtag {

// N x L confidence matrix in [0, 1], the interchange object between models,
// metrics and ensembles. The file format is the header {magic "PRED",
// version u32, N u32, L u32} followed by row-major little-endian f32 values.
struct PredictionMatrix {
  int64_t num_examples = 0;
  int64_t num_labels = 0;
  std::vector<float> values;

  PredictionMatrix() = default;
  PredictionMatrix(int64_t n, int64_t l)
      : num_examples(n), num_labels(l),
        values(static_cast<size_t>(n * l), 0.0f) {}

  float& at(int64_t i, int64_t l) { return values[i * num_labels + l]; }
  float at(int64_t i, int64_t l) const { return values[i * num_labels + l]; }
  std::span<const float> row(int64_t i) const {
    return {values.data() + i * num_labels, static_cast<size_t>(num_labels)};
  }
};

inline constexpr uint32_t kPredictionMatrixVersion = 1;

void save_prediction_matrix(const std::string& path,
                            const PredictionMatrix& m);
PredictionMatrix load_prediction_matrix(const std::string& path);

// Sidecar text manifest written next to a prediction matrix.
struct PredictionManifest {
  std::string model_name;
  std::string source_checkpoint;
  std::string dataset_part;
  double gap = 0.0;
};

void save_manifest(const std::string& matrix_path,
                   const PredictionManifest& m);

}  // namespace vtag
