#include "vtag/multiscale.hpp"

namespace vtag {

MultiscaleModel::MultiscaleModel(ModelConfig config, MultiscaleMode mode,
                                 Rng& rng)
    : Model(std::move(config)), mode_(mode) {
  gated_ = config_.representation == "gated";
  use_max_consensus_ = config_.consensus == "max";
  LstmKind kind = parse_lstm_kind(config_.lstm_kind);
  int64_t d = config_.feature_dim();
  int64_t n = config_.lstm_cells;
  int64_t cascade_dim = 0;
  if (config_.cascade) {
    cascade_.emplace("head", config_.num_labels, config_.cascade_dim, rng,
                     &params_);
    cascade_dim = config_.cascade_dim;
  }
  switch (mode) {
    case MultiscaleMode::kSegment:
    case MultiscaleMode::kPool: {
      check(config_.clip_frames >= 1, "multiscale: clip_frames must be >= 1");
      clip_cell_.emplace("clip_lstm", kind, d, n, rng, &params_);
      top_cell_.emplace("top_lstm", kind, n, n, rng, &params_);
      head_.emplace("head", n + cascade_dim, config_.num_labels,
                    config_.moe_mixtures, rng, &params_);
      break;
    }
    case MultiscaleMode::kResolution: {
      check(config_.resolutions >= 1, "multiscale: needs >= 1 resolution");
      for (int64_t r = 0; r < config_.resolutions; ++r)
        resolution_lstms_.emplace_back("res" + std::to_string(r) + "_lstm",
                                       kind, d, n, config_.lstm_layers, rng,
                                       &params_);
      std::vector<int64_t> dims(config_.resolutions,
                                resolution_lstms_[0].representation_dim());
      chain_.emplace("chain", std::move(dims), config_.num_labels,
                     config_.moe_mixtures, config_.chain_projection,
                     cascade_dim, rng, &params_);
      break;
    }
    case MultiscaleMode::kCnnLstm: {
      check(config_.cnn_layers >= 1, "multiscale: needs >= 1 cnn layer");
      auto filters = parse_filters(config_.cnn_filters);
      int64_t in = d;
      for (int64_t s = 0; s < config_.cnn_layers; ++s) {
        banks_.emplace_back("scale" + std::to_string(s) + "_cnn", in, filters,
                            rng, &params_);
        in = banks_.back().total_channels();
        scale_lstms_.emplace_back("scale" + std::to_string(s) + "_lstm", kind,
                                  in, n, config_.lstm_layers, rng, &params_);
        scale_heads_.emplace_back("scale" + std::to_string(s) + "_head",
                                  scale_lstms_.back().representation_dim() +
                                      cascade_dim,
                                  config_.num_labels, config_.moe_mixtures, rng,
                                  &params_);
      }
      break;
    }
  }
}

// Clip-level recurrence shared by the segment and pool modes: the per-clip
// final memories form a higher-level sequence. Segment carries state across
// clip boundaries, pool restarts each clip from zero.
TensorPtr MultiscaleModel::forward_clip_levels(Graph& g,
                                               const TensorPtr& frames) const {
  int64_t f = frames->shape[0];
  int64_t clip = std::min(config_.clip_frames, f);  // short video: one clip
  bool carry = mode_ == MultiscaleMode::kSegment;

  std::vector<TensorPtr> clip_vectors;
  LstmState state = clip_cell_->initial_state(1);
  for (int64_t start = 0; start < f; start += clip) {
    int64_t len = std::min(clip, f - start);
    if (!carry) state = clip_cell_->initial_state(1);
    for (int64_t t = start; t < start + len; ++t)
      state = clip_cell_->step(g, state, g.slice(frames, 0, t, 1));
    clip_vectors.push_back(gated_ ? state.h : state.c);
  }

  if (clip_vectors.size() == 1) return clip_vectors[0];
  LstmState top = top_cell_->initial_state(1);
  for (const TensorPtr& v : clip_vectors) top = top_cell_->step(g, top, v);
  return gated_ ? top.h : top.c;
}

TensorPtr MultiscaleModel::forward(Graph& g, const BatchView& batch,
                                   ForwardExtras* extras) {
  TensorPtr donors;
  if (cascade_) donors = donor_average(batch, config_.num_labels);
  std::vector<TensorPtr> rows;
  std::vector<std::vector<TensorPtr>> stage_rows;
  if (mode_ == MultiscaleMode::kResolution)
    stage_rows.resize(config_.resolutions - 1);

  for (int64_t i = 0; i < batch.size(); ++i) {
    TensorPtr frames = frame_matrix(batch.example(i));
    TensorPtr cascade_extra;
    if (cascade_)
      cascade_extra = cascade_->project(g, g.slice(donors, 0, i, 1));

    switch (mode_) {
      case MultiscaleMode::kSegment:
      case MultiscaleMode::kPool: {
        TensorPtr rep = forward_clip_levels(g, frames);
        if (cascade_extra) rep = g.concat({rep, cascade_extra}, 1);
        rows.push_back(head_->forward(g, rep));
        break;
      }
      case MultiscaleMode::kResolution: {
        // Coarsest view first, original sequence at the final stage.
        std::vector<TensorPtr> views = {frames};
        for (int64_t r = 1; r < config_.resolutions; ++r)
          views.push_back(mean_pool_pairs(g, views.back()));
        std::vector<TensorPtr> features(config_.resolutions);
        for (int64_t r = 0; r < config_.resolutions; ++r) {
          auto run = resolution_lstms_[r].run(g, views[r]);
          // stage index: coarsest (r = R-1) goes first
          features[config_.resolutions - 1 - r] =
              resolution_lstms_[r].representation(g, run, gated_);
        }
        std::vector<TensorPtr> stages;
        rows.push_back(chain_->forward(g, features, &stages, cascade_extra));
        for (size_t s = 0; s < stages.size(); ++s)
          stage_rows[s].push_back(stages[s]);
        break;
      }
      case MultiscaleMode::kCnnLstm: {
        std::vector<TensorPtr> preds;
        TensorPtr input = frames;
        for (size_t s = 0; s < banks_.size(); ++s) {
          TensorPtr map = banks_[s].aligned_map(g, input);
          auto run = scale_lstms_[s].run(g, map);
          TensorPtr rep = scale_lstms_[s].representation(g, run, gated_);
          if (cascade_extra) rep = g.concat({rep, cascade_extra}, 1);
          preds.push_back(scale_heads_[s].forward(g, rep));
          input = max_pool_pairs(g, map);
        }
        TensorPtr stacked = preds.size() == 1 ? preds[0] : g.concat(preds, 0);
        TensorPtr combined = use_max_consensus_ ? g.max(stacked, 0)
                                                : g.mean(stacked, 0);
        rows.push_back(g.reshape(combined, {1, config_.num_labels}));
        break;
      }
    }
  }
  if (extras)
    for (auto& sr : stage_rows)
      extras->stage_predictions.push_back(sr.size() == 1 ? sr[0]
                                                         : g.concat(sr, 0));
  return rows.size() == 1 ? rows[0] : g.concat(rows, 0);
}

}  // namespace vtag
