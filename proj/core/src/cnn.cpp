#include "vtag/cnn.hpp"

namespace vtag {

ConvBank::ConvBank(const std::string& prefix, int64_t input_dim,
                   std::vector<ConvFilter> filters, Rng& rng,
                   ParamList* params)
    : input_dim_(input_dim), filters_(std::move(filters)) {
  for (size_t i = 0; i < filters_.size(); ++i) {
    const auto& f = filters_[i];
    TensorPtr w = xavier_param({f.width * input_dim, f.channels}, rng);
    TensorPtr b = zeros_param({f.channels});
    params->push_back({prefix + "/w" + std::to_string(f.width), w});
    params->push_back({prefix + "/b" + std::to_string(f.width), b});
    w_.push_back(w);
    b_.push_back(b);
  }
}

int64_t ConvBank::total_channels() const {
  int64_t c = 0;
  for (const auto& f : filters_) c += f.channels;
  return c;
}

int64_t ConvBank::max_width() const {
  int64_t w = 0;
  for (const auto& f : filters_) w = std::max(w, f.width);
  return w;
}

std::vector<TensorPtr> ConvBank::feature_maps(Graph& g,
                                              const TensorPtr& frames) const {
  check(frames->shape.size() == 2 && frames->shape[1] == input_dim_,
        "conv: frame shape ", shape_str(frames->shape),
        " does not match input dim ", input_dim_);
  int64_t t = frames->shape[0];
  check(t >= max_width(), "conv: sequence of ", t,
        " frames is shorter than the widest filter (", max_width(), ")");
  std::vector<TensorPtr> maps;
  for (size_t i = 0; i < filters_.size(); ++i) {
    int64_t w = filters_[i].width;
    int64_t t_out = t - w + 1;
    TensorPtr windows;
    if (w == 1) {
      windows = frames;
    } else {
      std::vector<TensorPtr> cols;
      for (int64_t j = 0; j < w; ++j) cols.push_back(g.slice(frames, 0, j, t_out));
      windows = g.concat(cols, 1);
    }
    maps.push_back(g.relu(g.broadcast_add_bias(g.matmul(windows, w_[i]), b_[i])));
  }
  return maps;
}

TensorPtr ConvBank::max_over_time(Graph& g, const TensorPtr& frames) const {
  std::vector<TensorPtr> pooled;
  for (const TensorPtr& map : feature_maps(g, frames))
    pooled.push_back(g.reshape(g.max(map, 0), {1, map->shape[1]}));
  return pooled.size() == 1 ? pooled[0] : g.concat(pooled, 1);
}

TensorPtr ConvBank::aligned_map(Graph& g, const TensorPtr& frames) const {
  int64_t t_min = frames->shape[0] - max_width() + 1;
  std::vector<TensorPtr> maps;
  for (TensorPtr map : feature_maps(g, frames)) {
    if (map->shape[0] > t_min) map = g.slice(map, 0, 0, t_min);
    maps.push_back(map);
  }
  return maps.size() == 1 ? maps[0] : g.concat(maps, 1);
}

namespace {

TensorPtr pool_pairs(Graph& g, const TensorPtr& x, bool use_max) {
  int64_t t = x->shape[0];
  int64_t d = x->shape[1];
  if (t == 1) return x;
  int64_t pairs = t / 2;
  TensorPtr head = g.slice(x, 0, 0, 2 * pairs);
  TensorPtr grouped = g.reshape(head, {pairs, 2, d});
  TensorPtr pooled = use_max ? g.max(grouped, 1) : g.mean(grouped, 1);
  if (t % 2 == 1) pooled = g.concat({pooled, g.slice(x, 0, t - 1, 1)}, 0);
  return pooled;
}

}  // namespace

TensorPtr max_pool_pairs(Graph& g, const TensorPtr& x) {
  return pool_pairs(g, x, true);
}

TensorPtr mean_pool_pairs(Graph& g, const TensorPtr& x) {
  return pool_pairs(g, x, false);
}

CnnModel::CnnModel(ModelConfig config, Rng& rng) : Model(std::move(config)) {
  bank_.emplace("cnn", config_.feature_dim(), parse_filters(config_.cnn_filters),
                rng, &params_);
  int64_t in = bank_->total_channels();
  if (config_.cascade) {
    cascade_.emplace("head", config_.num_labels, config_.cascade_dim, rng,
                     &params_);
    in += config_.cascade_dim;
  }
  head_.emplace("head", in, config_.num_labels, config_.moe_mixtures, rng,
                &params_);
}

TensorPtr CnnModel::forward(Graph& g, const BatchView& batch, ForwardExtras*) {
  TensorPtr donors;
  if (cascade_) donors = donor_average(batch, config_.num_labels);
  std::vector<TensorPtr> rows;
  for (int64_t i = 0; i < batch.size(); ++i) {
    TensorPtr rep = bank_->max_over_time(g, frame_matrix(batch.example(i)));
    if (cascade_)
      rep = g.concat({rep, cascade_->project(g, g.slice(donors, 0, i, 1))}, 1);
    rows.push_back(head_->forward(g, rep));
  }
  return rows.size() == 1 ? rows[0] : g.concat(rows, 0);
}

ChainingCnnModel::ChainingCnnModel(ModelConfig config, Rng& rng)
    : Model(std::move(config)) {
  bank_.emplace("cnn", config_.feature_dim(), parse_filters(config_.cnn_filters),
                rng, &params_);
  int64_t cascade_dim = 0;
  if (config_.cascade) {
    cascade_.emplace("chain", config_.num_labels, config_.cascade_dim, rng,
                     &params_);
    cascade_dim = config_.cascade_dim;
  }
  std::vector<int64_t> dims(config_.chain_stages, bank_->total_channels());
  chain_.emplace("chain", std::move(dims), config_.num_labels,
                 config_.moe_mixtures, config_.chain_projection, cascade_dim,
                 rng, &params_);
}

TensorPtr ChainingCnnModel::forward(Graph& g, const BatchView& batch,
                                    ForwardExtras* extras) {
  TensorPtr donors;
  if (cascade_) donors = donor_average(batch, config_.num_labels);
  std::vector<TensorPtr> rows;
  std::vector<std::vector<TensorPtr>> stage_rows(config_.chain_stages - 1);
  for (int64_t i = 0; i < batch.size(); ++i) {
    TensorPtr rep = bank_->max_over_time(g, frame_matrix(batch.example(i)));
    std::vector<TensorPtr> features(config_.chain_stages, rep);
    TensorPtr cascade_extra;
    if (cascade_)
      cascade_extra = cascade_->project(g, g.slice(donors, 0, i, 1));
    std::vector<TensorPtr> stages;
    rows.push_back(chain_->forward(g, features, &stages, cascade_extra));
    for (size_t s = 0; s < stages.size(); ++s) stage_rows[s].push_back(stages[s]);
  }
  if (extras)
    for (auto& sr : stage_rows)
      extras->stage_predictions.push_back(sr.size() == 1 ? sr[0]
                                                         : g.concat(sr, 0));
  return rows.size() == 1 ? rows[0] : g.concat(rows, 0);
}

}  // namespace vtag
