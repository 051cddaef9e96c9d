#pragma once

#include "vtag/lstm.hpp"

namespace vtag {

// Bank of 1-D convolutions along time whose filters span the whole per-frame
// feature vector, one group per (width, channels) entry, relu activation.
class ConvBank {
 public:
  ConvBank(const std::string& prefix, int64_t input_dim,
           std::vector<ConvFilter> filters, Rng& rng, ParamList* params);

  // Valid convolution per width: [T, D] -> [T - w + 1, C].
  std::vector<TensorPtr> feature_maps(Graph& g, const TensorPtr& frames) const;
  // Max over time per width and channel, concatenated: [1, total_channels].
  TensorPtr max_over_time(Graph& g, const TensorPtr& frames) const;
  // Maps truncated to the shortest width's length and concatenated along
  // channels: [T - max_width + 1, total_channels].
  TensorPtr aligned_map(Graph& g, const TensorPtr& frames) const;

  int64_t total_channels() const;
  int64_t max_width() const;

 private:
  int64_t input_dim_;
  std::vector<ConvFilter> filters_;
  std::vector<TensorPtr> w_, b_;
};

// Max over adjacent pairs along time; an odd trailing row is kept.
TensorPtr max_pool_pairs(Graph& g, const TensorPtr& x);
// Mean over adjacent pairs along time; an odd trailing row is kept.
TensorPtr mean_pool_pairs(Graph& g, const TensorPtr& x);

// Max-over-time CNN -> MoE classifier.
class CnnModel : public Model {
 public:
  CnnModel(ModelConfig config, Rng& rng);
  TensorPtr forward(Graph& g, const BatchView& batch, ForwardExtras*) override;

 private:
  std::optional<ConvBank> bank_;
  std::optional<CascadeLayer> cascade_;
  std::optional<MoeHead> head_;
};

// Chaining over the max-pooled CNN feature vector.
class ChainingCnnModel : public Model {
 public:
  ChainingCnnModel(ModelConfig config, Rng& rng);
  TensorPtr forward(Graph& g, const BatchView& batch,
                    ForwardExtras* extras) override;

 private:
  std::optional<ConvBank> bank_;
  std::optional<CascadeLayer> cascade_;
  std::optional<ChainedMoe> chain_;
};

}  // namespace vtag
