#pragma once

#include "vtag/graph.hpp"

namespace vtag {

// Probabilities are clamped to [1e-6, 1 - 1e-6] before the log.
inline constexpr double kProbClamp = 1e-6;

// Per-label binary cross-entropy of probabilities against targets, averaged
// over labels and batch. Optional per-example weights multiply each example's
// loss (weights with mean 1 keep the scale).
TensorPtr cross_entropy_mean(Graph& g, const TensorPtr& probs,
                             const TensorPtr& targets,
                             const TensorPtr& example_weights = nullptr);

// Full training loss:
//   base   = ce(final, targets)
//   aux    = (1 - aux_share) * base + aux_share * mean(ce(stage_s, targets))
//   distill= (1 - lambda) * aux(labels) + lambda * aux(soft_targets)
TensorPtr compute_loss(Graph& g, const TensorPtr& final_pred,
                       const std::vector<TensorPtr>& stage_predictions,
                       const TensorPtr& labels, const TensorPtr& soft_targets,
                       double lambda, double aux_share,
                       const TensorPtr& example_weights = nullptr);

}  // namespace vtag
