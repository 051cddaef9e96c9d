#pragma once

#include <memory>
#include <optional>

#include "vtag/example.hpp"
#include "vtag/graph.hpp"
#include "vtag/prediction_matrix.hpp"

namespace vtag {

struct ConvFilter {
  int64_t width = 1;
  int64_t channels = 8;
};

// "1x8,2x8,3x16" -> {{1,8},{2,8},{3,16}}
std::vector<ConvFilter> parse_filters(const std::string& text);

struct ModelConfig {
  std::string architecture = "moe";
  int64_t num_labels = 25;
  int64_t rgb_dim = 32;
  int64_t audio_dim = 8;
  int64_t max_frames = 30;

  int64_t moe_mixtures = 2;

  std::string lstm_kind = "vanilla";  // vanilla | shared_gate | accumulator
  int64_t lstm_cells = 16;
  int64_t lstm_layers = 1;
  int64_t audio_cells = 8;            // parallel encoder, audio stream
  std::string representation = "cells";  // cells | gated

  int64_t chain_stages = 3;
  int64_t chain_projection = 32;

  int64_t attention_groups = 4;
  int64_t positional_dim = 32;

  std::string cnn_filters = "1x8,2x8,3x16";
  int64_t cnn_layers = 2;    // multiscale pyramid depth
  int64_t clip_frames = 10;  // segment/pool clip duration
  int64_t resolutions = 3;   // multi-resolution levels

  // "" picks the architecture default: max for multi-group attention,
  // mean for the multiscale consensus.
  std::string consensus;

  bool cascade = false;  // feed donor predictions through a cascade layer
  int64_t cascade_dim = 32;

  int64_t feature_dim() const { return rgb_dim + audio_dim; }
};

bool is_frame_level(const std::string& architecture);

struct BatchView {
  const std::vector<Example>* examples = nullptr;
  std::vector<int64_t> indices;
  // Aligned with *examples rows; their per-example average feeds the cascade
  // projection when the model has one.
  const std::vector<const PredictionMatrix*>* cascade_donors = nullptr;

  int64_t size() const { return static_cast<int64_t>(indices.size()); }
  const Example& example(int64_t i) const { return (*examples)[indices[i]]; }

  static BatchView whole(const std::vector<Example>& examples);
};

struct ForwardExtras {
  // Intermediate predictions that receive auxiliary losses (the final
  // prediction is not included).
  std::vector<TensorPtr> stage_predictions;
};

class Model {
 public:
  explicit Model(ModelConfig config) : config_(std::move(config)) {}
  virtual ~Model() = default;

  // Per-label confidences [B, L], all in [0, 1].
  virtual TensorPtr forward(Graph& g, const BatchView& batch,
                            ForwardExtras* extras = nullptr) = 0;

  const ModelConfig& config() const { return config_; }
  const ParamList& params() const { return params_; }

 protected:
  TensorPtr add_xavier(const std::string& name, Shape shape, Rng& rng);
  TensorPtr add_zeros(const std::string& name, Shape shape);

  ModelConfig config_;
  ParamList params_;
};

std::unique_ptr<Model> build_model(const ModelConfig& config, Rng& rng);

// Batch constants (no gradient).
TensorPtr batch_video_features(const BatchView& batch);
TensorPtr batch_labels(const BatchView& batch, int64_t num_labels);
// [F, rgb_dim + audio_dim] for one example.
TensorPtr frame_matrix(const Example& ex);
TensorPtr frame_matrix_rgb(const Example& ex);
TensorPtr frame_matrix_audio(const Example& ex);
// Mean over donors of their prediction rows for the batch, [B, L].
TensorPtr donor_average(const BatchView& batch, int64_t num_labels);

}  // namespace vtag
