#pragma once

#include "vtag/config.hpp"
#include "vtag/metrics.hpp"
#include "vtag/model.hpp"

namespace vtag {

struct TrainInputs {
  const std::vector<Example>* train = nullptr;
  const std::vector<Example>* valid = nullptr;
  // Boosting weights aligned with *train (mean 1); null means unweighted.
  const std::vector<double>* example_weights = nullptr;
  // Distillation soft targets aligned with *train rows.
  const PredictionMatrix* soft_targets = nullptr;
  // Cascade donor predictions aligned with *train / *valid rows.
  std::vector<const PredictionMatrix*> cascade_train;
  std::vector<const PredictionMatrix*> cascade_valid;
  // Train rows excluded from batches (boosting's drop-at-ceiling variant).
  const std::vector<bool>* excluded = nullptr;
};

struct TrainResult {
  double best_gap = 0.0;
  int64_t best_step = 0;
  int64_t steps_run = 0;
  std::vector<std::string> log;  // append-only "step=... loss=... gap=..." lines
};

// Adam training with early stopping on the validation GAP. The model keeps
// the best-on-validation parameters when the loop ends. Evaluation happens at
// step 0 too, so max_steps = 0 still produces a scored model.
TrainResult train_model(Model& model, const TrainInputs& inputs,
                        const TrainOptions& options);

PredictionMatrix predict_all(
    Model& model, const std::vector<Example>& examples,
    const std::vector<const PredictionMatrix*>& cascade_donors = {});

// 1 - PERR per example; rows without labels get the mean error of the rest.
std::vector<double> per_example_errors(const PredictionMatrix& preds,
                                       const LabelSets& labels);

}  // namespace vtag
