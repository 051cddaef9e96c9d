#pragma once

#include "vtag/example.hpp"
#include "vtag/graph.hpp"
#include "vtag/metrics.hpp"
#include "vtag/prediction_matrix.hpp"

namespace vtag {

enum class StackMode { kSimple, kLinear, kClasswise, kAttention };

StackMode parse_stack_mode(const std::string& name);
const char* stack_mode_name(StackMode mode);

// Parameters of a stacking scheme over M member models and L labels.
// linear:    logits over the M models (softmax -> simplex weights)
// classwise: logits over the M models per label
// attention: a K-component mixture of low-rank model-by-label weight
//            matrices, selected by a softmax attention layer over the
//            averaged input features and averaged predictions:
//              alpha = softmax(V [xbar; pbar])
//              e     = sum_k alpha_k (At_k B_k + a_k b_k^T + c_k)
//              w_,l  = softmax over models of e_,l
struct StackerParams {
  StackMode mode = StackMode::kSimple;
  int64_t members = 0;
  int64_t labels = 0;
  int64_t groups = 16;    // K
  int64_t rank = 4;       // D
  int64_t feature_dim = 0;  // |xbar|

  TensorPtr linear_logits;     // [M]
  TensorPtr classwise_logits;  // [M, L]
  TensorPtr v;                 // [feature_dim + L, K]
  TensorPtr a_t;               // [K, M * D]  (At_k rows, i.e. A_k transposed)
  TensorPtr b;                 // [K, D * L]
  TensorPtr a_vec;             // [K, M]
  TensorPtr b_vec;             // [K, L]
  TensorPtr c;                 // [K]

  ParamList trainable() const;
  static StackerParams create(StackMode mode, int64_t members, int64_t labels,
                              int64_t feature_dim, int64_t groups,
                              int64_t rank, Rng& rng);
};

// Mean frame features per example (video-level mean_rgb/mean_audio
// concatenation when no frames are present), the xbar input of the attention
// stacker.
std::vector<std::vector<double>> mean_feature_rows(
    const std::vector<Example>& examples);

// Inference-path combination. All modes run through one accumulation kernel,
// so configurations that imply equal weights produce bit-identical outputs.
PredictionMatrix stack_combine(
    const std::vector<const PredictionMatrix*>& predictions,
    const StackerParams& params);

PredictionMatrix attention_stack_forward(
    const std::vector<const PredictionMatrix*>& predictions,
    const std::vector<std::vector<double>>& mean_features,
    const StackerParams& params);

// Graph-path forward for training; returns [B, L] stacked confidences.
TensorPtr stacker_graph_forward(Graph& g, const StackerParams& params,
                                const std::vector<const PredictionMatrix*>& predictions,
                                const std::vector<std::vector<double>>& mean_features,
                                const std::vector<int64_t>& batch_indices);

struct StackerTrainOptions {
  double learning_rate = 0.02;
  int64_t batch_size = 256;
  int64_t max_steps = 600;
  int64_t eval_interval = 50;
  int64_t patience = 4;
  uint64_t seed = 1;
  // Attention starts from the trained class-wise solution (requires K >= M);
  // training then only has to improve on it.
  bool warm_start = true;
};

struct StackerTrainResult {
  double best_gap = 0.0;
  int64_t best_step = 0;
  std::vector<std::string> log;
};

// Trains the stacker on the train split and early-stops on the validation
// split's GAP, returning the best parameters seen.
StackerTrainResult train_stacker(
    StackerParams& params,
    const std::vector<const PredictionMatrix*>& train_predictions,
    const LabelSets& train_labels,
    const std::vector<std::vector<double>>& train_features,
    const std::vector<const PredictionMatrix*>& valid_predictions,
    const LabelSets& valid_labels,
    const std::vector<std::vector<double>>& valid_features,
    const StackerTrainOptions& options);

// Applies a trained stacker to a (possibly different) dataset part.
PredictionMatrix stacker_apply(
    const StackerParams& params,
    const std::vector<const PredictionMatrix*>& predictions,
    const std::vector<std::vector<double>>& mean_features);

}  // namespace vtag
