#include "vtag/lstm.hpp"

namespace vtag {

LstmKind parse_lstm_kind(const std::string& name) {
  if (name == "vanilla") return LstmKind::kVanilla;
  if (name == "shared_gate") return LstmKind::kSharedGate;
  if (name == "accumulator") return LstmKind::kAccumulator;
  fail("unknown lstm kind \"", name, "\"");
}

namespace {

int64_t gate_output_dim(LstmKind kind, int64_t cells, int64_t input_dim) {
  switch (kind) {
    case LstmKind::kVanilla: return 4 * cells;
    case LstmKind::kSharedGate: return 2 * cells + 2;
    case LstmKind::kAccumulator: return 4 * cells + 2 * input_dim;
  }
  return 0;
}

int64_t gate_input_dim(LstmKind kind, int64_t cells, int64_t input_dim) {
  return kind == LstmKind::kAccumulator ? cells + 2 * input_dim
                                        : cells + input_dim;
}

// [B, 1] -> [B, n]
TensorPtr broadcast_cols(Graph& g, const TensorPtr& x, int64_t n) {
  return g.matmul(x, full({1, n}, 1.0));
}

}  // namespace

LstmCell::LstmCell(const std::string& prefix, LstmKind kind, int64_t input_dim,
                   int64_t cells, Rng& rng, ParamList* params)
    : kind_(kind), input_dim_(input_dim), cells_(cells) {
  check(cells >= 1 && input_dim >= 1, "lstm cell needs positive dims");
  w_ = xavier_param(
      {gate_input_dim(kind, cells, input_dim), gate_output_dim(kind, cells, input_dim)},
      rng);
  b_ = zeros_param({gate_output_dim(kind, cells, input_dim)});
  // forget-gate bias starts at +1 so early training does not flush the memory
  switch (kind_) {
    case LstmKind::kVanilla:
      for (int64_t i = 3 * cells; i < 4 * cells; ++i) b_->values[i] = 1.0;
      break;
    case LstmKind::kSharedGate:
      b_->values[2 * cells + 1] = 1.0;
      break;
    case LstmKind::kAccumulator:
      for (int64_t i = 3 * cells; i < 4 * cells; ++i) b_->values[i] = 1.0;
      for (int64_t i = 4 * cells + input_dim; i < 4 * cells + 2 * input_dim; ++i)
        b_->values[i] = 1.0;
      break;
  }
  params->push_back({prefix + "/w", w_});
  params->push_back({prefix + "/b", b_});
}

LstmState LstmCell::initial_state(int64_t batch) const {
  LstmState s;
  s.h = zeros({batch, cells_});
  s.c = zeros({batch, cells_});
  if (kind_ == LstmKind::kAccumulator) {
    s.acc = zeros({batch, input_dim_});
    s.acc_norm = zeros({batch, input_dim_});
  }
  return s;
}

LstmState LstmCell::step(Graph& g, const LstmState& state,
                         const TensorPtr& x) const {
  check(x->shape.size() == 2 && x->shape[1] == input_dim_,
        "lstm step: input shape ", shape_str(x->shape),
        " does not match input dim ", input_dim_);
  const int64_t n = cells_;
  std::vector<TensorPtr> zin = {state.h, x};
  if (kind_ == LstmKind::kAccumulator) zin.push_back(state.acc_norm);
  TensorPtr pre = g.broadcast_add_bias(g.matmul(g.concat(zin, 1), w_), b_);

  TensorPtr o = g.slice(pre, 1, 0, n);
  TensorPtr m = g.slice(pre, 1, n, n);
  LstmState next;
  switch (kind_) {
    case LstmKind::kVanilla: {
      next.input_gate = g.sigmoid(g.slice(pre, 1, 2 * n, n));
      next.forget_gate = g.sigmoid(g.slice(pre, 1, 3 * n, n));
      break;
    }
    case LstmKind::kSharedGate: {
      // one scalar input gate and one scalar forget gate for the whole block
      next.input_gate = broadcast_cols(g, g.sigmoid(g.slice(pre, 1, 2 * n, 1)), n);
      next.forget_gate =
          broadcast_cols(g, g.sigmoid(g.slice(pre, 1, 2 * n + 1, 1)), n);
      break;
    }
    case LstmKind::kAccumulator: {
      next.input_gate = g.sigmoid(g.slice(pre, 1, 2 * n, n));
      next.forget_gate = g.sigmoid(g.slice(pre, 1, 3 * n, n));
      TensorPtr acc_in = g.sigmoid(g.slice(pre, 1, 4 * n, input_dim_));
      TensorPtr acc_forget =
          g.sigmoid(g.slice(pre, 1, 4 * n + input_dim_, input_dim_));
      next.acc = g.add(g.mul(acc_forget, state.acc), g.mul(acc_in, x));
      next.acc_norm = g.l2_normalize(next.acc, 1);
      break;
    }
  }
  next.c = g.add(g.mul(next.forget_gate, state.c),
                 g.mul(next.input_gate, g.tanh(m)));
  next.h = g.mul(g.sigmoid(o), g.tanh(next.c));
  return next;
}

LstmStack::LstmStack(const std::string& prefix, LstmKind kind,
                     int64_t input_dim, int64_t cells, int64_t layers,
                     Rng& rng, ParamList* params)
    : cells_(cells) {
  check(layers >= 1, "lstm stack needs at least one layer");
  int64_t in = input_dim;
  for (int64_t l = 0; l < layers; ++l) {
    cells_list_.emplace_back(prefix + "/layer" + std::to_string(l), kind, in,
                             cells, rng, params);
    in = cells;
  }
}

LstmStack::RunResult LstmStack::run(Graph& g, const TensorPtr& frames) const {
  check(frames->shape.size() == 2 && frames->shape[0] >= 1,
        "lstm: empty frame sequence");
  int64_t f = frames->shape[0];
  RunResult result;
  result.final_states.resize(cells_list_.size());
  std::vector<LstmState> states;
  for (const auto& cell : cells_list_) states.push_back(cell.initial_state(1));
  for (int64_t t = 0; t < f; ++t) {
    TensorPtr x = g.slice(frames, 0, t, 1);
    for (size_t l = 0; l < cells_list_.size(); ++l) {
      states[l] = cells_list_[l].step(g, states[l], x);
      x = states[l].h;
    }
    result.outputs.push_back(x);
  }
  result.final_states = states;
  return result;
}

TensorPtr LstmStack::output_matrix(Graph& g, const RunResult& run) const {
  return run.outputs.size() == 1 ? run.outputs[0] : g.concat(run.outputs, 0);
}

TensorPtr LstmStack::representation(Graph& g, const RunResult& run,
                                    bool gated) const {
  std::vector<TensorPtr> parts;
  for (const auto& s : run.final_states) parts.push_back(gated ? s.h : s.c);
  return parts.size() == 1 ? parts[0] : g.concat(parts, 1);
}

EncodeMode parse_encode_mode(const std::string& architecture) {
  if (architecture == "parallel_lstm") return EncodeMode::kParallel;
  if (architecture == "bidirectional_lstm") return EncodeMode::kBidirectionalFirst;
  return EncodeMode::kSingle;
}

SeqEncoder::SeqEncoder(const std::string& prefix, const ModelConfig& config,
                       EncodeMode mode, Rng& rng, ParamList* params)
    : mode_(mode), gated_(config.representation == "gated") {
  LstmKind kind = parse_lstm_kind(config.lstm_kind);
  switch (mode) {
    case EncodeMode::kSingle: {
      stacks_.emplace_back(prefix + "/lstm", kind, config.feature_dim(),
                           config.lstm_cells, config.lstm_layers, rng, params);
      output_dim_ = stacks_[0].representation_dim();
      break;
    }
    case EncodeMode::kParallel: {
      stacks_.emplace_back(prefix + "/rgb_lstm", kind, config.rgb_dim,
                           config.lstm_cells, config.lstm_layers, rng, params);
      stacks_.emplace_back(prefix + "/audio_lstm", kind, config.audio_dim,
                           config.audio_cells, config.lstm_layers, rng, params);
      output_dim_ = stacks_[0].representation_dim() +
                    stacks_[1].representation_dim();
      break;
    }
    case EncodeMode::kBidirectionalFirst: {
      bidi_forward_.emplace(prefix + "/fwd", kind, config.feature_dim(),
                            config.lstm_cells, rng, params);
      bidi_backward_.emplace(prefix + "/bwd", kind, config.feature_dim(),
                             config.lstm_cells, rng, params);
      bidi_second_.emplace(prefix + "/top", kind, 2 * config.lstm_cells,
                           config.lstm_cells, rng, params);
      output_dim_ = 3 * config.lstm_cells;
      break;
    }
  }
}

TensorPtr SeqEncoder::encode(Graph& g, const Example& ex) const {
  switch (mode_) {
    case EncodeMode::kSingle: {
      auto run = stacks_[0].run(g, frame_matrix(ex));
      return stacks_[0].representation(g, run, gated_);
    }
    case EncodeMode::kParallel: {
      auto rgb_run = stacks_[0].run(g, frame_matrix_rgb(ex));
      auto audio_run = stacks_[1].run(g, frame_matrix_audio(ex));
      return g.concat({stacks_[0].representation(g, rgb_run, gated_),
                       stacks_[1].representation(g, audio_run, gated_)},
                      1);
    }
    case EncodeMode::kBidirectionalFirst: {
      TensorPtr frames = frame_matrix(ex);
      int64_t f = frames->shape[0];
      std::vector<TensorPtr> fwd(f), bwd(f);
      LstmState sf = bidi_forward_->initial_state(1);
      for (int64_t t = 0; t < f; ++t) {
        sf = bidi_forward_->step(g, sf, g.slice(frames, 0, t, 1));
        fwd[t] = sf.h;
      }
      LstmState sb = bidi_backward_->initial_state(1);
      for (int64_t t = f - 1; t >= 0; --t) {
        sb = bidi_backward_->step(g, sb, g.slice(frames, 0, t, 1));
        bwd[t] = sb.h;
      }
      LstmState st = bidi_second_->initial_state(1);
      for (int64_t t = 0; t < f; ++t)
        st = bidi_second_->step(g, st, g.concat({fwd[t], bwd[t]}, 1));
      TensorPtr cf = gated_ ? sf.h : sf.c;
      TensorPtr cb = gated_ ? sb.h : sb.c;
      TensorPtr ct = gated_ ? st.h : st.c;
      return g.concat({cf, cb, ct}, 1);
    }
  }
  fail("bad encode mode");
}

LstmModel::LstmModel(ModelConfig config, EncodeMode mode, Rng& rng)
    : Model(std::move(config)) {
  encoder_.emplace("encoder", config_, mode, rng, &params_);
  int64_t in = encoder_->output_dim();
  if (config_.cascade) {
    cascade_.emplace("head", config_.num_labels, config_.cascade_dim, rng,
                     &params_);
    in += config_.cascade_dim;
  }
  head_.emplace("head", in, config_.num_labels, config_.moe_mixtures, rng,
                &params_);
}

TensorPtr LstmModel::forward(Graph& g, const BatchView& batch, ForwardExtras*) {
  TensorPtr donors;
  if (cascade_) donors = donor_average(batch, config_.num_labels);
  std::vector<TensorPtr> rows;
  for (int64_t i = 0; i < batch.size(); ++i) {
    TensorPtr rep = encoder_->encode(g, batch.example(i));
    if (cascade_)
      rep = g.concat({rep, cascade_->project(g, g.slice(donors, 0, i, 1))}, 1);
    rows.push_back(head_->forward(g, rep));
  }
  return rows.size() == 1 ? rows[0] : g.concat(rows, 0);
}

MeanPoolModel::MeanPoolModel(ModelConfig config, Rng& rng)
    : Model(std::move(config)) {
  int64_t in = config_.feature_dim();
  if (config_.cascade) {
    cascade_.emplace("head", config_.num_labels, config_.cascade_dim, rng,
                     &params_);
    in += config_.cascade_dim;
  }
  head_.emplace("head", in, config_.num_labels, config_.moe_mixtures, rng,
                &params_);
}

TensorPtr MeanPoolModel::forward(Graph& g, const BatchView& batch,
                                 ForwardExtras*) {
  TensorPtr donors;
  if (cascade_) donors = donor_average(batch, config_.num_labels);
  std::vector<TensorPtr> rows;
  for (int64_t i = 0; i < batch.size(); ++i) {
    TensorPtr frames = frame_matrix(batch.example(i));
    TensorPtr pooled = g.reshape(g.mean(frames, 0), {1, frames->shape[1]});
    if (cascade_)
      pooled =
          g.concat({pooled, cascade_->project(g, g.slice(donors, 0, i, 1))}, 1);
    rows.push_back(head_->forward(g, pooled));
  }
  return rows.size() == 1 ? rows[0] : g.concat(rows, 0);
}

ChainingLstmModel::ChainingLstmModel(ModelConfig config, Rng& rng)
    : Model(std::move(config)) {
  encoder_.emplace("encoder", config_, EncodeMode::kSingle, rng, &params_);
  int64_t cascade_dim = 0;
  if (config_.cascade) {
    cascade_.emplace("chain", config_.num_labels, config_.cascade_dim, rng,
                     &params_);
    cascade_dim = config_.cascade_dim;
  }
  std::vector<int64_t> dims(config_.chain_stages, encoder_->output_dim());
  chain_.emplace("chain", std::move(dims), config_.num_labels,
                 config_.moe_mixtures, config_.chain_projection, cascade_dim,
                 rng, &params_);
}

TensorPtr ChainingLstmModel::forward(Graph& g, const BatchView& batch,
                                     ForwardExtras* extras) {
  TensorPtr donors;
  if (cascade_) donors = donor_average(batch, config_.num_labels);
  std::vector<TensorPtr> rows;
  std::vector<std::vector<TensorPtr>> stage_rows(config_.chain_stages - 1);
  for (int64_t i = 0; i < batch.size(); ++i) {
    TensorPtr rep = encoder_->encode(g, batch.example(i));
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
