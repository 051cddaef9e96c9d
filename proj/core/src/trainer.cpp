#include "vtag/trainer.hpp"

#include <cmath>

#include "vtag/adam.hpp"
#include "vtag/loss.hpp"

namespace vtag {

PredictionMatrix predict_all(
    Model& model, const std::vector<Example>& examples,
    const std::vector<const PredictionMatrix*>& cascade_donors) {
  const int64_t n = static_cast<int64_t>(examples.size());
  const int64_t labels = model.config().num_labels;
  PredictionMatrix out(n, labels);
  const int64_t chunk = 256;
  for (int64_t start = 0; start < n; start += chunk) {
    BatchView batch;
    batch.examples = &examples;
    batch.cascade_donors = cascade_donors.empty() ? nullptr : &cascade_donors;
    for (int64_t i = start; i < std::min(n, start + chunk); ++i)
      batch.indices.push_back(i);
    Graph g;
    TensorPtr preds = model.forward(g, batch, nullptr);
    for (int64_t i = 0; i < batch.size(); ++i)
      for (int64_t l = 0; l < labels; ++l)
        out.at(start + i, l) =
            static_cast<float>(preds->values[i * labels + l]);
  }
  return out;
}

std::vector<double> per_example_errors(const PredictionMatrix& preds,
                                       const LabelSets& labels) {
  std::vector<double> err(static_cast<size_t>(preds.num_examples), -1.0);
  double sum = 0.0;
  int64_t labeled = 0;
  for (int64_t i = 0; i < preds.num_examples; ++i) {
    if (labels[i].empty()) continue;  // PERR undefined, fill with mean below
    err[i] = 1.0 - perr_row(preds.row(i), labels[i]);
    sum += err[i];
    ++labeled;
  }
  check(labeled > 0, "per_example_errors: no labeled examples");
  double mean = sum / static_cast<double>(labeled);
  for (double& e : err)
    if (e < 0.0) e = mean;
  return err;
}

namespace {

// One-hot rows of each example's most confident tag (ties: lowest index).
TensorPtr most_confident_targets(const TensorPtr& preds) {
  int64_t b = preds->shape[0], l = preds->shape[1];
  std::vector<double> hot(static_cast<size_t>(b * l), 0.0);
  for (int64_t i = 0; i < b; ++i) {
    int64_t best = 0;
    for (int64_t j = 1; j < l; ++j)
      if (preds->values[i * l + j] > preds->values[i * l + best]) best = j;
    hot[i * l + best] = 1.0;
  }
  return make_tensor({b, l}, std::move(hot));
}

}  // namespace

TrainResult train_model(Model& model, const TrainInputs& inputs,
                        const TrainOptions& options) {
  check(inputs.train && !inputs.train->empty(), "train_model: empty train set");
  check(inputs.valid && !inputs.valid->empty(), "train_model: empty validation set");
  const std::vector<Example>& train = *inputs.train;
  const int64_t n = static_cast<int64_t>(train.size());
  const int64_t labels = model.config().num_labels;
  if (inputs.example_weights)
    check(static_cast<int64_t>(inputs.example_weights->size()) == n,
          "train_model: ", inputs.example_weights->size(), " weights for ", n,
          " examples");
  if (inputs.soft_targets)
    check(inputs.soft_targets->num_examples == n &&
              inputs.soft_targets->num_labels == labels,
          "train_model: soft-target matrix does not match the train set");

  std::vector<int64_t> pool;
  for (int64_t i = 0; i < n; ++i)
    if (!inputs.excluded || !(*inputs.excluded)[i]) pool.push_back(i);
  check(!pool.empty(), "train_model: every train example is excluded");

  AdamConfig adam_config;
  adam_config.learning_rate = options.learning_rate;
  AdamState adam(adam_config, model.params());
  Rng shuffle_rng = Rng(options.seed).fork(0xba7c);

  LabelSets valid_labels = label_sets(*inputs.valid);
  auto eval_gap = [&]() {
    PredictionMatrix preds =
        predict_all(model, *inputs.valid, inputs.cascade_valid);
    return global_average_precision(preds, valid_labels);
  };

  TrainResult result;
  double best_gap = eval_gap();
  result.log.push_back(strcat_msg("step=0 gap=", best_gap));
  std::vector<std::vector<double>> best_values;
  for (const auto& p : model.params()) best_values.push_back(p.tensor->values);
  int64_t best_step = 0;
  int64_t stale = 0;

  int64_t cursor = static_cast<int64_t>(pool.size());
  for (int64_t step = 1; step <= options.max_steps; ++step) {
    BatchView batch;
    batch.examples = &train;
    batch.cascade_donors =
        inputs.cascade_train.empty() ? nullptr : &inputs.cascade_train;
    for (int64_t i = 0; i < options.batch_size; ++i) {
      if (cursor >= static_cast<int64_t>(pool.size())) {
        for (int64_t j = static_cast<int64_t>(pool.size()) - 1; j > 0; --j)
          std::swap(pool[j], pool[shuffle_rng.uniform_index(j + 1)]);
        cursor = 0;
      }
      batch.indices.push_back(pool[cursor++]);
    }

    Graph g;
    ForwardExtras extras;
    TensorPtr preds = model.forward(g, batch, &extras);
    TensorPtr targets = batch_labels(batch, labels);

    TensorPtr weights;
    if (inputs.example_weights) {
      std::vector<double> w(batch.indices.size());
      for (size_t i = 0; i < batch.indices.size(); ++i)
        w[i] = (*inputs.example_weights)[batch.indices[i]];
      weights = make_tensor({batch.size()}, std::move(w));
    }
    TensorPtr soft;
    if (inputs.soft_targets) {
      std::vector<double> s(batch.indices.size() * labels);
      for (size_t i = 0; i < batch.indices.size(); ++i)
        for (int64_t l = 0; l < labels; ++l)
          s[i * labels + l] = inputs.soft_targets->at(batch.indices[i], l);
      soft = make_tensor({batch.size(), labels}, std::move(s));
    }

    TensorPtr loss =
        compute_loss(g, preds, extras.stage_predictions, targets, soft,
                     soft ? options.lambda : 0.0, options.aux_share, weights);
    if (options.self_target_threshold > 0.0 &&
        loss->scalar_value() < options.self_target_threshold) {
      TensorPtr self_soft = most_confident_targets(preds);
      TensorPtr self_loss =
          compute_loss(g, preds, extras.stage_predictions, self_soft, nullptr,
                       0.0, options.aux_share, weights);
      loss = g.add(g.scale(loss, 1.0 - options.self_target_lambda),
                   g.scale(self_loss, options.self_target_lambda));
    }
    double loss_value = loss->scalar_value();
    check(!std::isnan(loss_value), "train_model: loss diverged (NaN) at step ",
          step);
    g.backward(loss);
    adam_step(adam, model.params());
    result.steps_run = step;

    if (step % options.eval_interval == 0 || step == options.max_steps) {
      double gap = eval_gap();
      result.log.push_back(
          strcat_msg("step=", step, " loss=", loss_value, " gap=", gap));
      if (gap > best_gap) {
        best_gap = gap;
        best_step = step;
        for (size_t i = 0; i < model.params().size(); ++i)
          best_values[i] = model.params()[i].tensor->values;
        stale = 0;
      } else if (++stale > options.patience) {
        break;
      }
    }
  }

  for (size_t i = 0; i < model.params().size(); ++i)
    model.params()[i].tensor->values = best_values[i];
  result.best_gap = best_gap;
  result.best_step = best_step;
  return result;
}

}  // namespace vtag
