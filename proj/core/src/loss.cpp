#include "vtag/loss.hpp"

namespace vtag {

TensorPtr cross_entropy_mean(Graph& g, const TensorPtr& probs,
                             const TensorPtr& targets,
                             const TensorPtr& example_weights) {
  check(probs->shape == targets->shape, "loss: prediction shape ",
        shape_str(probs->shape), " does not match target shape ",
        shape_str(targets->shape));
  check(probs->shape.size() == 2, "loss: expects [batch, labels]");
  TensorPtr p = g.clip(probs, kProbClamp, 1.0 - kProbClamp);
  TensorPtr ones = full(p->shape, 1.0);
  TensorPtr ce = g.sub(
      zeros(p->shape),
      g.add(g.mul(targets, g.log(p)),
            g.mul(g.sub(ones, targets), g.log(g.sub(ones, p)))));
  TensorPtr per_example = g.mean(ce, 1);  // [B]
  if (example_weights) {
    check(example_weights->shape == per_example->shape,
          "loss: weight shape ", shape_str(example_weights->shape),
          " does not match batch of ", per_example->shape[0]);
    per_example = g.mul(per_example, example_weights);
  }
  return g.mean(per_example, 0);
}

TensorPtr compute_loss(Graph& g, const TensorPtr& final_pred,
                       const std::vector<TensorPtr>& stage_predictions,
                       const TensorPtr& labels, const TensorPtr& soft_targets,
                       double lambda, double aux_share,
                       const TensorPtr& example_weights) {
  check(lambda >= 0.0 && lambda <= 1.0, "loss: lambda must be in [0, 1], got ",
        lambda);
  check(aux_share >= 0.0 && aux_share < 0.5,
        "loss: aux_share must be in [0, 0.5), got ", aux_share);

  auto aux_combined = [&](const TensorPtr& target) {
    TensorPtr base = cross_entropy_mean(g, final_pred, target, example_weights);
    if (stage_predictions.empty() || aux_share == 0.0) return base;
    TensorPtr aux;
    for (const TensorPtr& stage : stage_predictions) {
      TensorPtr term = cross_entropy_mean(g, stage, target, example_weights);
      aux = aux ? g.add(aux, term) : term;
    }
    aux = g.scale(aux, 1.0 / static_cast<double>(stage_predictions.size()));
    return g.add(g.scale(base, 1.0 - aux_share), g.scale(aux, aux_share));
  };

  TensorPtr hard = aux_combined(labels);
  if (!soft_targets || lambda == 0.0) return hard;
  TensorPtr soft = aux_combined(soft_targets);
  return g.add(g.scale(hard, 1.0 - lambda), g.scale(soft, lambda));
}

}  // namespace vtag
