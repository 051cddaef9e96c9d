#pragma once

#include "vtag/cnn.hpp"

namespace vtag {

enum class MultiscaleMode { kSegment, kPool, kResolution, kCnnLstm };

// Temporal multi-scale models.
//
// segment:    one clip-level LSTM over equal-duration clips with state carried
//             across clip boundaries; the per-clip final memories form a
//             higher-level sequence fed to a second LSTM. A single clip
//             bypasses the second LSTM (a one-step recurrence adds nothing).
// pool:       same wiring but each clip restarts from the zero state; only
//             the pooling into clip vectors crosses clip boundaries.
// resolution: the sequence is average-pooled into progressively coarser
//             views, one LSTM per view, joined by chaining with the coarsest
//             view at stage 1 and the original sequence at the final stage.
// cnn_lstm:   a conv -> 2-max-pool pyramid; every scale's feature map gets
//             its own LSTM + MoE and the per-scale predictions are combined
//             by the consensus function (mean by default).
class MultiscaleModel : public Model {
 public:
  MultiscaleModel(ModelConfig config, MultiscaleMode mode, Rng& rng);
  TensorPtr forward(Graph& g, const BatchView& batch,
                    ForwardExtras* extras) override;

  MultiscaleMode mode() const { return mode_; }

 private:
  TensorPtr forward_clip_levels(Graph& g, const TensorPtr& frames) const;

  MultiscaleMode mode_;
  bool gated_ = false;
  bool use_max_consensus_ = false;
  // segment / pool
  std::optional<LstmCell> clip_cell_;
  std::optional<LstmCell> top_cell_;
  // resolution
  std::vector<LstmStack> resolution_lstms_;
  std::optional<ChainedMoe> chain_;
  // cnn_lstm
  std::vector<ConvBank> banks_;
  std::vector<LstmStack> scale_lstms_;
  std::vector<MoeHead> scale_heads_;
  // segment / pool head
  std::optional<CascadeLayer> cascade_;
  std::optional<MoeHead> head_;
};

}  // namespace vtag
