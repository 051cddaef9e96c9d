#pragma once

#include "vtag/model.hpp"

namespace vtag {

// Per-label mixture of logistic experts with a softmax gate over m + 1
// entries; the extra dummy expert contributes zero probability mass, so the
// output confidence is sum_g gate_g * sigmoid(expert_g) in [0, 1).
class MoeHead {
 public:
  MoeHead(const std::string& prefix, int64_t input_dim, int64_t labels,
          int64_t mixtures, Rng& rng, ParamList* params);

  TensorPtr forward(Graph& g, const TensorPtr& features) const;  // [B,D]->[B,L]

  int64_t input_dim() const { return input_dim_; }
  int64_t labels() const { return labels_; }
  int64_t mixtures() const { return mixtures_; }

 private:
  int64_t input_dim_, labels_, mixtures_;
  TensorPtr gate_w_, gate_b_, expert_w_, expert_b_;
};

// Projection of averaged donor predictions, concatenated into the input of
// whatever MoE sits at the end of the host model.
class CascadeLayer {
 public:
  CascadeLayer(const std::string& prefix, int64_t labels, int64_t dim,
               Rng& rng, ParamList* params);
  TensorPtr project(Graph& g, const TensorPtr& donor_avg) const;
  int64_t dim() const { return dim_; }

 private:
  int64_t dim_;
  TensorPtr proj_;
};

// Chain of MoE units. Stage s sees its own feature vector plus learned
// low-dimensional projections of every earlier stage's predictions.
class ChainedMoe {
 public:
  ChainedMoe(const std::string& prefix, std::vector<int64_t> stage_feature_dims,
             int64_t labels, int64_t mixtures, int64_t projection,
             int64_t cascade_dim,  // 0 when the final stage has no cascade input
             Rng& rng, ParamList* params);

  // stage_features may repeat one tensor; cascade_extra (nullable) is
  // appended to the final stage's input. stage_predictions receives the
  // intermediate predictions.
  TensorPtr forward(Graph& g, const std::vector<TensorPtr>& stage_features,
                    std::vector<TensorPtr>* stage_predictions,
                    const TensorPtr& cascade_extra) const;

  int64_t stages() const { return static_cast<int64_t>(moes_.size()); }

 private:
  std::vector<MoeHead> moes_;
  std::vector<TensorPtr> projections_;  // [L, projection] per non-final stage
};

// Video-level architectures.
class LrModel : public Model {
 public:
  LrModel(ModelConfig config, Rng& rng);
  TensorPtr forward(Graph& g, const BatchView& batch, ForwardExtras*) override;

 private:
  TensorPtr w_, b_;
};

class MoeModel : public Model {
 public:
  MoeModel(ModelConfig config, Rng& rng);
  TensorPtr forward(Graph& g, const BatchView& batch, ForwardExtras*) override;

 private:
  std::optional<CascadeLayer> cascade_;
  std::optional<MoeHead> head_;
};

class ChainingVideoModel : public Model {
 public:
  ChainingVideoModel(ModelConfig config, Rng& rng);
  TensorPtr forward(Graph& g, const BatchView& batch,
                    ForwardExtras* extras) override;

 private:
  std::optional<CascadeLayer> cascade_;
  std::optional<ChainedMoe> chain_;
};

}  // namespace vtag
