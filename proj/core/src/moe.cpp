#include "vtag/moe.hpp"

namespace vtag {

MoeHead::MoeHead(const std::string& prefix, int64_t input_dim, int64_t labels,
                 int64_t mixtures, Rng& rng, ParamList* params)
    : input_dim_(input_dim), labels_(labels), mixtures_(mixtures) {
  check(mixtures >= 1, "moe: needs at least one mixture");
  auto add = [&](const std::string& name, TensorPtr t) {
    params->push_back({prefix + "/" + name, t});
    return t;
  };
  gate_w_ = add("gate_w", xavier_param({input_dim, labels * (mixtures + 1)}, rng));
  gate_b_ = add("gate_b", zeros_param({labels * (mixtures + 1)}));
  expert_w_ = add("expert_w", xavier_param({input_dim, labels * mixtures}, rng));
  expert_b_ = add("expert_b", zeros_param({labels * mixtures}));
}

TensorPtr MoeHead::forward(Graph& g, const TensorPtr& features) const {
  check(features->shape.size() == 2 && features->shape[1] == input_dim_,
        "moe: feature shape ", shape_str(features->shape), " does not match input dim ",
        input_dim_);
  int64_t b = features->shape[0];
  TensorPtr gate_logits =
      g.broadcast_add_bias(g.matmul(features, gate_w_), gate_b_);
  TensorPtr gates = g.softmax(
      g.reshape(gate_logits, {b, labels_, mixtures_ + 1}), 2);
  gates = g.slice(gates, 2, 0, mixtures_);  // drop the dummy expert's mass
  TensorPtr experts = g.sigmoid(g.reshape(
      g.broadcast_add_bias(g.matmul(features, expert_w_), expert_b_),
      {b, labels_, mixtures_}));
  return g.sum(g.mul(gates, experts), 2);
}

CascadeLayer::CascadeLayer(const std::string& prefix, int64_t labels,
                           int64_t dim, Rng& rng, ParamList* params)
    : dim_(dim) {
  proj_ = xavier_param({labels, dim}, rng);
  params->push_back({prefix + "/cascade_proj", proj_});
}

TensorPtr CascadeLayer::project(Graph& g, const TensorPtr& donor_avg) const {
  return g.matmul(donor_avg, proj_);
}

ChainedMoe::ChainedMoe(const std::string& prefix,
                       std::vector<int64_t> stage_feature_dims, int64_t labels,
                       int64_t mixtures, int64_t projection,
                       int64_t cascade_dim, Rng& rng, ParamList* params) {
  int64_t stages = static_cast<int64_t>(stage_feature_dims.size());
  check(stages >= 1, "chaining: needs at least one stage");
  for (int64_t s = 0; s < stages; ++s) {
    int64_t in = stage_feature_dims[s] + s * projection;
    if (s == stages - 1) in += cascade_dim;
    moes_.emplace_back(prefix + "/stage" + std::to_string(s), in, labels,
                       mixtures, rng, params);
    if (s < stages - 1) {
      TensorPtr p = xavier_param({labels, projection}, rng);
      params->push_back({prefix + "/proj" + std::to_string(s), p});
      projections_.push_back(p);
    }
  }
}

TensorPtr ChainedMoe::forward(Graph& g,
                              const std::vector<TensorPtr>& stage_features,
                              std::vector<TensorPtr>* stage_predictions,
                              const TensorPtr& cascade_extra) const {
  check(static_cast<int64_t>(stage_features.size()) == stages(),
        "chaining: got ", stage_features.size(), " stage features for ",
        stages(), " stages");
  std::vector<TensorPtr> projected;
  TensorPtr pred;
  for (int64_t s = 0; s < stages(); ++s) {
    std::vector<TensorPtr> inputs = {stage_features[s]};
    for (const TensorPtr& p : projected) inputs.push_back(p);
    if (s == stages() - 1 && cascade_extra) inputs.push_back(cascade_extra);
    TensorPtr in = inputs.size() == 1 ? inputs[0] : g.concat(inputs, 1);
    pred = moes_[s].forward(g, in);
    if (s < stages() - 1) {
      if (stage_predictions) stage_predictions->push_back(pred);
      projected.push_back(g.matmul(pred, projections_[s]));
    }
  }
  return pred;
}

LrModel::LrModel(ModelConfig config, Rng& rng) : Model(std::move(config)) {
  w_ = add_xavier("lr/w", {config_.feature_dim(), config_.num_labels}, rng);
  b_ = add_zeros("lr/b", {config_.num_labels});
}

TensorPtr LrModel::forward(Graph& g, const BatchView& batch, ForwardExtras*) {
  TensorPtr x = batch_video_features(batch);
  return g.sigmoid(g.broadcast_add_bias(g.matmul(x, w_), b_));
}

MoeModel::MoeModel(ModelConfig config, Rng& rng) : Model(std::move(config)) {
  int64_t in = config_.feature_dim();
  if (config_.cascade) {
    cascade_.emplace("moe", config_.num_labels, config_.cascade_dim, rng,
                     &params_);
    in += config_.cascade_dim;
  }
  head_.emplace("moe", in, config_.num_labels, config_.moe_mixtures, rng,
                &params_);
}

TensorPtr MoeModel::forward(Graph& g, const BatchView& batch, ForwardExtras*) {
  TensorPtr x = batch_video_features(batch);
  if (cascade_) {
    TensorPtr avg = donor_average(batch, config_.num_labels);
    x = g.concat({x, cascade_->project(g, avg)}, 1);
  }
  return head_->forward(g, x);
}

ChainingVideoModel::ChainingVideoModel(ModelConfig config, Rng& rng)
    : Model(std::move(config)) {
  int64_t cascade_dim = 0;
  if (config_.cascade) {
    cascade_.emplace("chaining", config_.num_labels, config_.cascade_dim, rng,
                     &params_);
    cascade_dim = config_.cascade_dim;
  }
  std::vector<int64_t> dims(config_.chain_stages, config_.feature_dim());
  chain_.emplace("chaining", std::move(dims), config_.num_labels,
                 config_.moe_mixtures, config_.chain_projection, cascade_dim,
                 rng, &params_);
}

TensorPtr ChainingVideoModel::forward(Graph& g, const BatchView& batch,
                                      ForwardExtras* extras) {
  TensorPtr x = batch_video_features(batch);
  std::vector<TensorPtr> features(config_.chain_stages, x);
  TensorPtr cascade_extra;
  if (cascade_)
    cascade_extra = cascade_->project(g, donor_average(batch, config_.num_labels));
  return chain_->forward(g, features,
                         extras ? &extras->stage_predictions : nullptr,
                         cascade_extra);
}

}  // namespace vtag
