#pragma once

#include "vtag/lstm.hpp"

namespace vtag {

enum class AttentionMode { kMulti, kLocal, kPositional };

// Attention pooling over LSTM outputs. Multi mode pools the outputs with K
// softmax attention groups, classifies each pooled vector with one shared
// MoE and takes the per-label consensus (max by default). Local mode pools
// the raw input features with a single group and classifies
// [last output; pooled input]. Positional mode adds a learned per-frame-index
// embedding to the attention network input.
class AttentionModel : public Model {
 public:
  AttentionModel(ModelConfig config, AttentionMode mode, Rng& rng);
  TensorPtr forward(Graph& g, const BatchView& batch, ForwardExtras*) override;

  AttentionMode mode() const { return mode_; }
  // Attention weights [F, K] of the most recent forward over one example;
  // columns sum to 1.
  TensorPtr forward_example(Graph& g, const Example& ex,
                            const TensorPtr& cascade_extra,
                            TensorPtr* attention_out) const;

 private:
  AttentionMode mode_;
  bool use_max_consensus_;
  std::optional<LstmStack> lstm_;
  TensorPtr attention_w_;
  TensorPtr positional_;  // [max_frames, positional_dim]
  std::optional<CascadeLayer> cascade_;
  std::optional<MoeHead> head_;
};

}  // namespace vtag
