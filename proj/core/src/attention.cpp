#include "vtag/attention.hpp"

namespace vtag {

AttentionModel::AttentionModel(ModelConfig config, AttentionMode mode, Rng& rng)
    : Model(std::move(config)), mode_(mode) {
  use_max_consensus_ = config_.consensus.empty() ? true
                                                 : config_.consensus == "max";
  int64_t groups = mode == AttentionMode::kLocal ? 1 : config_.attention_groups;
  check(groups >= 1, "attention: needs at least one group");
  lstm_.emplace("lstm", parse_lstm_kind(config_.lstm_kind),
                config_.feature_dim(), config_.lstm_cells, config_.lstm_layers,
                rng, &params_);
  int64_t att_in = config_.feature_dim() + config_.lstm_cells;
  if (mode == AttentionMode::kPositional) {
    positional_ = add_xavier("attention/positional",
                             {config_.max_frames, config_.positional_dim}, rng);
    att_in += config_.positional_dim;
  }
  attention_w_ = add_xavier("attention/w", {att_in, groups}, rng);

  int64_t head_in = mode == AttentionMode::kLocal
                        ? config_.lstm_cells + config_.feature_dim()
                        : config_.lstm_cells;
  if (config_.cascade) {
    cascade_.emplace("head", config_.num_labels, config_.cascade_dim, rng,
                     &params_);
    head_in += config_.cascade_dim;
  }
  head_.emplace("head", head_in, config_.num_labels, config_.moe_mixtures, rng,
                &params_);
}

TensorPtr AttentionModel::forward_example(Graph& g, const Example& ex,
                                          const TensorPtr& cascade_extra,
                                          TensorPtr* attention_out) const {
  TensorPtr frames = frame_matrix(ex);
  int64_t f = frames->shape[0];
  auto run = lstm_->run(g, frames);
  TensorPtr outputs = lstm_->output_matrix(g, run);  // [F, N]

  std::vector<TensorPtr> att_inputs = {frames, outputs};
  if (mode_ == AttentionMode::kPositional) {
    check(f <= config_.max_frames, "attention: sequence of ", f,
          " frames exceeds max_frames ", config_.max_frames);
    std::vector<int64_t> idx(f);
    for (int64_t t = 0; t < f; ++t) idx[t] = t;
    att_inputs.push_back(g.embedding_lookup(positional_, idx));
  }
  TensorPtr logits = g.matmul(g.concat(att_inputs, 1), attention_w_);
  TensorPtr attention = g.softmax(logits, 0);  // [F, K], columns sum to 1
  if (attention_out) *attention_out = attention;
  int64_t groups = attention->shape[1];

  if (mode_ == AttentionMode::kLocal) {
    TensorPtr a = g.reshape(attention, {1, f});
    TensorPtr pooled_input = g.matmul(a, frames);  // [1, D]
    TensorPtr in = g.concat({run.outputs.back(), pooled_input}, 1);
    if (cascade_extra) in = g.concat({in, cascade_extra}, 1);
    return head_->forward(g, in);
  }

  std::vector<TensorPtr> pooled;
  for (int64_t k = 0; k < groups; ++k) {
    TensorPtr ak = g.reshape(g.slice(attention, 1, k, 1), {1, f});
    pooled.push_back(g.matmul(ak, outputs));  // [1, N]
  }
  TensorPtr z = pooled.size() == 1 ? pooled[0] : g.concat(pooled, 0);  // [K, N]
  if (cascade_extra) {
    TensorPtr tiled = g.matmul(full({groups, 1}, 1.0), cascade_extra);
    z = g.concat({z, tiled}, 1);
  }
  TensorPtr per_group = head_->forward(g, z);  // [K, L], shared parameters
  TensorPtr combined = use_max_consensus_ ? g.max(per_group, 0)
                                          : g.mean(per_group, 0);
  return g.reshape(combined, {1, config_.num_labels});
}

TensorPtr AttentionModel::forward(Graph& g, const BatchView& batch,
                                  ForwardExtras*) {
  TensorPtr donors;
  if (cascade_) donors = donor_average(batch, config_.num_labels);
  std::vector<TensorPtr> rows;
  for (int64_t i = 0; i < batch.size(); ++i) {
    TensorPtr cascade_extra;
    if (cascade_)
      cascade_extra = cascade_->project(g, g.slice(donors, 0, i, 1));
    rows.push_back(forward_example(g, batch.example(i), cascade_extra, nullptr));
  }
  return rows.size() == 1 ? rows[0] : g.concat(rows, 0);
}

}  // namespace vtag
