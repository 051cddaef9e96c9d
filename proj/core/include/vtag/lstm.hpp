#pragma once

#include "vtag/moe.hpp"

namespace vtag {

enum class LstmKind {
  kVanilla,
  kSharedGate,    // one scalar input gate and one scalar forget gate per block
  kAccumulator,   // extra input-accumulator memory with normalized exposure
};

LstmKind parse_lstm_kind(const std::string& name);

struct LstmState {
  TensorPtr h;  // [B, N] gated output
  TensorPtr c;  // [B, N] memory cells
  TensorPtr acc;       // [B, M], accumulator kind only
  TensorPtr acc_norm;  // [B, M], L2-normalized accumulator
  // Broadcast gate activations of the latest step, exposed for inspection.
  TensorPtr input_gate;   // [B, N]
  TensorPtr forget_gate;  // [B, N]
};

class LstmCell {
 public:
  LstmCell(const std::string& prefix, LstmKind kind, int64_t input_dim,
           int64_t cells, Rng& rng, ParamList* params);

  LstmState initial_state(int64_t batch) const;
  LstmState step(Graph& g, const LstmState& state, const TensorPtr& x) const;

  LstmKind kind() const { return kind_; }
  int64_t cells() const { return cells_; }
  int64_t input_dim() const { return input_dim_; }

 private:
  LstmKind kind_;
  int64_t input_dim_, cells_;
  TensorPtr w_, b_;
};

// A stack of LSTM layers run over one example's frame matrix.
class LstmStack {
 public:
  LstmStack(const std::string& prefix, LstmKind kind, int64_t input_dim,
            int64_t cells, int64_t layers, Rng& rng, ParamList* params);

  struct RunResult {
    std::vector<TensorPtr> outputs;       // top-layer h per frame, [1, N]
    std::vector<LstmState> final_states;  // one per layer
  };

  RunResult run(Graph& g, const TensorPtr& frames) const;  // frames [F, M]
  TensorPtr output_matrix(Graph& g, const RunResult& run) const;  // [F, N]
  // Concatenated final memory cells (or gated outputs) of all layers.
  TensorPtr representation(Graph& g, const RunResult& run, bool gated) const;

  int64_t cells() const { return cells_; }
  int64_t layers() const { return static_cast<int64_t>(cells_list_.size()); }
  int64_t representation_dim() const { return layers() * cells_; }
  const LstmCell& layer(int64_t i) const { return cells_list_[i]; }

 private:
  int64_t cells_;
  std::vector<LstmCell> cells_list_;
};

enum class EncodeMode { kSingle, kParallel, kBidirectionalFirst };

EncodeMode parse_encode_mode(const std::string& architecture);

// Sequence-to-vector encoder covering the single, parallel (independent rgb
// and audio recurrences) and bidirectional-first-layer wirings.
class SeqEncoder {
 public:
  SeqEncoder(const std::string& prefix, const ModelConfig& config,
             EncodeMode mode, Rng& rng, ParamList* params);

  TensorPtr encode(Graph& g, const Example& ex) const;  // [1, output_dim]
  int64_t output_dim() const { return output_dim_; }
  EncodeMode mode() const { return mode_; }

 private:
  EncodeMode mode_;
  bool gated_;
  int64_t output_dim_ = 0;
  std::vector<LstmStack> stacks_;         // single: 1; parallel: rgb + audio
  std::optional<LstmCell> bidi_forward_;  // bidirectional-first wiring
  std::optional<LstmCell> bidi_backward_;
  std::optional<LstmCell> bidi_second_;
};

// Frame-level LSTM -> MoE classifier (vanilla / shared-gate / accumulator
// cells; single, parallel or bidirectional-first encoders).
class LstmModel : public Model {
 public:
  LstmModel(ModelConfig config, EncodeMode mode, Rng& rng);
  TensorPtr forward(Graph& g, const BatchView& batch, ForwardExtras*) override;

 private:
  std::optional<SeqEncoder> encoder_;
  std::optional<CascadeLayer> cascade_;
  std::optional<MoeHead> head_;
};

// Mean-pool-over-frames baseline feeding an MoE.
class MeanPoolModel : public Model {
 public:
  MeanPoolModel(ModelConfig config, Rng& rng);
  TensorPtr forward(Graph& g, const BatchView& batch, ForwardExtras*) override;

 private:
  std::optional<CascadeLayer> cascade_;
  std::optional<MoeHead> head_;
};

// Chaining over a shared LSTM representation.
class ChainingLstmModel : public Model {
 public:
  ChainingLstmModel(ModelConfig config, Rng& rng);
  TensorPtr forward(Graph& g, const BatchView& batch,
                    ForwardExtras* extras) override;

 private:
  std::optional<SeqEncoder> encoder_;
  std::optional<CascadeLayer> cascade_;
  std::optional<ChainedMoe> chain_;
};

}  // namespace vtag
