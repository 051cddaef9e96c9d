#include "vtag/stacking.hpp"

#include <cmath>

#include "vtag/adam.hpp"
#include "vtag/loss.hpp"

namespace vtag {

StackMode parse_stack_mode(const std::string& name) {
  if (name == "simple") return StackMode::kSimple;
  if (name == "linear") return StackMode::kLinear;
  if (name == "classwise") return StackMode::kClasswise;
  if (name == "attention") return StackMode::kAttention;
  fail("unknown stacking mode \"", name, "\"");
}

const char* stack_mode_name(StackMode mode) {
  switch (mode) {
    case StackMode::kSimple: return "simple";
    case StackMode::kLinear: return "linear";
    case StackMode::kClasswise: return "classwise";
    case StackMode::kAttention: return "attention";
  }
  return "?";
}

StackerParams StackerParams::create(StackMode mode, int64_t members,
                                    int64_t labels, int64_t feature_dim,
                                    int64_t groups, int64_t rank, Rng& rng) {
  check(members >= 1, "stacker: needs at least one member");
  StackerParams p;
  p.mode = mode;
  p.members = members;
  p.labels = labels;
  p.groups = groups;
  p.rank = rank;
  p.feature_dim = feature_dim;
  switch (mode) {
    case StackMode::kSimple:
      break;
    case StackMode::kLinear:
      p.linear_logits = zeros_param({members});  // uniform at init
      break;
    case StackMode::kClasswise:
      p.classwise_logits = zeros_param({members, labels});
      break;
    case StackMode::kAttention:
      p.v = zeros_param({feature_dim + labels, groups});
      p.a_t = xavier_param({groups, members * rank}, rng);
      p.b = xavier_param({groups, rank * labels}, rng);
      p.a_vec = xavier_param({groups, members}, rng);
      p.b_vec = xavier_param({groups, labels}, rng);
      p.c = zeros_param({groups});
      break;
  }
  return p;
}

ParamList StackerParams::trainable() const {
  switch (mode) {
    case StackMode::kSimple: return {};
    case StackMode::kLinear: return {{"stacker/linear", linear_logits}};
    case StackMode::kClasswise: return {{"stacker/classwise", classwise_logits}};
    case StackMode::kAttention:
      return {{"stacker/v", v},         {"stacker/a_t", a_t},
              {"stacker/b", b},         {"stacker/a_vec", a_vec},
              {"stacker/b_vec", b_vec}, {"stacker/c", c}};
  }
  return {};
}

std::vector<std::vector<double>> mean_feature_rows(
    const std::vector<Example>& examples) {
  std::vector<std::vector<double>> rows;
  rows.reserve(examples.size());
  for (const Example& ex : examples) {
    std::vector<double> row;
    if (ex.frame_level) {
      const FrameLevel& fl = *ex.frame_level;
      row.assign(static_cast<size_t>(fl.rgb_dim + fl.audio_dim), 0.0);
      for (int64_t t = 0; t < fl.frames; ++t) {
        for (int64_t j = 0; j < fl.rgb_dim; ++j)
          row[j] += fl.rgb[t * fl.rgb_dim + j];
        for (int64_t j = 0; j < fl.audio_dim; ++j)
          row[fl.rgb_dim + j] += fl.audio[t * fl.audio_dim + j];
      }
      for (double& v : row) v /= static_cast<double>(fl.frames);
    } else {
      check(ex.video_level.has_value(), "example ", ex.video_id,
            " has no features");
      row = ex.video_level->mean_rgb;
      row.insert(row.end(), ex.video_level->mean_audio.begin(),
                 ex.video_level->mean_audio.end());
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

namespace {

void check_members(const std::vector<const PredictionMatrix*>& predictions) {
  check(!predictions.empty(), "stacker: no member predictions");
  for (const auto* m : predictions) {
    check(m->num_examples == predictions[0]->num_examples &&
              m->num_labels == predictions[0]->num_labels,
          "stacker: member matrices disagree on dimensions");
  }
}

void softmax_inplace(std::vector<double>& v) {
  double mx = v[0];
  for (double x : v) mx = std::max(mx, x);
  double z = 0.0;
  for (double& x : v) {
    x = std::exp(x - mx);
    z += x;
  }
  for (double& x : v) x /= z;
}

// Per-example weight matrix w[m * L + l]; every column sums to 1.
void example_weights(const StackerParams& p,
                     const std::vector<const PredictionMatrix*>& preds,
                     const std::vector<std::vector<double>>* features,
                     int64_t row, std::vector<double>& w) {
  const int64_t m_count = p.members;
  const int64_t labels = p.labels;
  w.assign(static_cast<size_t>(m_count * labels), 0.0);
  switch (p.mode) {
    case StackMode::kSimple: {
      double uniform = 1.0 / static_cast<double>(m_count);
      for (double& x : w) x = uniform;
      break;
    }
    case StackMode::kLinear: {
      std::vector<double> wm = p.linear_logits->values;
      softmax_inplace(wm);
      for (int64_t m = 0; m < m_count; ++m)
        for (int64_t l = 0; l < labels; ++l) w[m * labels + l] = wm[m];
      break;
    }
    case StackMode::kClasswise: {
      std::vector<double> col(static_cast<size_t>(m_count));
      for (int64_t l = 0; l < labels; ++l) {
        for (int64_t m = 0; m < m_count; ++m)
          col[m] = p.classwise_logits->values[m * labels + l];
        softmax_inplace(col);
        for (int64_t m = 0; m < m_count; ++m) w[m * labels + l] = col[m];
      }
      break;
    }
    case StackMode::kAttention: {
      check(features != nullptr, "attention stacker needs mean features");
      const std::vector<double>& xbar = (*features)[row];
      check(static_cast<int64_t>(xbar.size()) == p.feature_dim,
            "attention stacker: feature dim ", xbar.size(), ", expected ",
            p.feature_dim);
      std::vector<double> u(xbar);
      u.resize(static_cast<size_t>(p.feature_dim + labels), 0.0);
      double inv_m = 1.0 / static_cast<double>(m_count);
      for (int64_t m = 0; m < m_count; ++m)
        for (int64_t l = 0; l < labels; ++l)
          u[p.feature_dim + l] += preds[m]->at(row, l) * inv_m;
      std::vector<double> alpha(static_cast<size_t>(p.groups), 0.0);
      for (int64_t k = 0; k < p.groups; ++k) {
        double acc = 0.0;
        for (size_t i = 0; i < u.size(); ++i)
          acc += u[i] * p.v->values[i * p.groups + k];
        alpha[k] = acc;
      }
      softmax_inplace(alpha);
      // e[m, l] = sum_k alpha_k (At_k B_k + a_k b_k^T + c_k)
      std::vector<double> e(static_cast<size_t>(m_count * labels), 0.0);
      for (int64_t k = 0; k < p.groups; ++k) {
        const double* at = p.a_t->values.data() + k * m_count * p.rank;
        const double* bk = p.b->values.data() + k * p.rank * labels;
        const double* av = p.a_vec->values.data() + k * m_count;
        const double* bv = p.b_vec->values.data() + k * labels;
        double ck = p.c->values[k];
        double ak = alpha[k];
        if (ak == 0.0) continue;
        for (int64_t m = 0; m < m_count; ++m) {
          for (int64_t l = 0; l < labels; ++l) {
            double low_rank = 0.0;
            for (int64_t d = 0; d < p.rank; ++d)
              low_rank += at[m * p.rank + d] * bk[d * labels + l];
            e[m * labels + l] += ak * (low_rank + av[m] * bv[l] + ck);
          }
        }
      }
      std::vector<double> col(static_cast<size_t>(m_count));
      for (int64_t l = 0; l < labels; ++l) {
        for (int64_t m = 0; m < m_count; ++m) col[m] = e[m * labels + l];
        softmax_inplace(col);
        for (int64_t m = 0; m < m_count; ++m) w[m * labels + l] = col[m];
      }
      break;
    }
  }
}

// One shared accumulation kernel so that equal-weight configurations agree
// bit for bit regardless of mode.
PredictionMatrix combine(const std::vector<const PredictionMatrix*>& preds,
                         const StackerParams& p,
                         const std::vector<std::vector<double>>* features) {
  check_members(preds);
  const int64_t n = preds[0]->num_examples;
  const int64_t labels = preds[0]->num_labels;
  check(static_cast<int64_t>(preds.size()) == p.members, "stacker: got ",
        preds.size(), " members, parameters expect ", p.members);
  check(labels == p.labels, "stacker: got ", labels, " labels, parameters expect ",
        p.labels);
  PredictionMatrix out(n, labels);
  std::vector<double> w;
  std::vector<double> acc(static_cast<size_t>(labels));
  for (int64_t row = 0; row < n; ++row) {
    example_weights(p, preds, features, row, w);
    std::fill(acc.begin(), acc.end(), 0.0);
    for (int64_t m = 0; m < p.members; ++m)
      for (int64_t l = 0; l < labels; ++l)
        acc[l] += w[m * labels + l] * static_cast<double>(preds[m]->at(row, l));
    for (int64_t l = 0; l < labels; ++l)
      out.at(row, l) = static_cast<float>(acc[l]);
  }
  return out;
}

}  // namespace

PredictionMatrix stack_combine(
    const std::vector<const PredictionMatrix*>& predictions,
    const StackerParams& params) {
  check(params.mode != StackMode::kAttention,
        "stack_combine: attention mode needs features, use attention_stack_forward");
  return combine(predictions, params, nullptr);
}

PredictionMatrix attention_stack_forward(
    const std::vector<const PredictionMatrix*>& predictions,
    const std::vector<std::vector<double>>& mean_features,
    const StackerParams& params) {
  check(params.mode == StackMode::kAttention,
        "attention_stack_forward: parameters are not attention-mode");
  check(static_cast<int64_t>(mean_features.size()) ==
            predictions[0]->num_examples,
        "attention stacker: ", mean_features.size(), " feature rows for ",
        predictions[0]->num_examples, " examples");
  return combine(predictions, params, &mean_features);
}

PredictionMatrix stacker_apply(
    const StackerParams& params,
    const std::vector<const PredictionMatrix*>& predictions,
    const std::vector<std::vector<double>>& mean_features) {
  if (params.mode == StackMode::kAttention)
    return attention_stack_forward(predictions, mean_features, params);
  return stack_combine(predictions, params);
}

TensorPtr stacker_graph_forward(
    Graph& g, const StackerParams& params,
    const std::vector<const PredictionMatrix*>& predictions,
    const std::vector<std::vector<double>>& mean_features,
    const std::vector<int64_t>& batch_indices) {
  check_members(predictions);
  const int64_t b = static_cast<int64_t>(batch_indices.size());
  const int64_t m_count = params.members;
  const int64_t labels = params.labels;

  // member predictions as constants, laid out [B*L, M] and [B, M, L]
  std::vector<double> by_label(static_cast<size_t>(b * labels * m_count));
  std::vector<double> by_member(static_cast<size_t>(b * m_count * labels));
  for (int64_t i = 0; i < b; ++i) {
    int64_t row = batch_indices[i];
    for (int64_t m = 0; m < m_count; ++m) {
      for (int64_t l = 0; l < labels; ++l) {
        double v = predictions[m]->at(row, l);
        by_label[(i * labels + l) * m_count + m] = v;
        by_member[(i * m_count + m) * labels + l] = v;
      }
    }
  }

  switch (params.mode) {
    case StackMode::kSimple: {
      TensorPtr p3 = make_tensor({b, m_count, labels}, std::move(by_member));
      return g.mean(p3, 1);
    }
    case StackMode::kLinear: {
      TensorPtr p2 = make_tensor({b * labels, m_count}, std::move(by_label));
      TensorPtr wm = g.reshape(g.softmax(params.linear_logits, 0), {m_count, 1});
      return g.reshape(g.matmul(p2, wm), {b, labels});
    }
    case StackMode::kClasswise: {
      TensorPtr p3 = make_tensor({b, m_count, labels}, std::move(by_member));
      TensorPtr w = g.softmax(params.classwise_logits, 0);  // [M, L]
      TensorPtr tiled = g.reshape(
          g.matmul(full({b, 1}, 1.0), g.reshape(w, {1, m_count * labels})),
          {b, m_count, labels});
      return g.sum(g.mul(tiled, p3), 1);
    }
    case StackMode::kAttention: {
      TensorPtr p3 = make_tensor({b, m_count, labels}, std::move(by_member));
      // attention input [xbar; pbar]
      std::vector<double> u(static_cast<size_t>(b * (params.feature_dim + labels)), 0.0);
      double inv_m = 1.0 / static_cast<double>(m_count);
      for (int64_t i = 0; i < b; ++i) {
        int64_t row = batch_indices[i];
        const auto& xbar = mean_features[row];
        check(static_cast<int64_t>(xbar.size()) == params.feature_dim,
              "attention stacker: feature dim ", xbar.size(), ", expected ",
              params.feature_dim);
        double* dst = u.data() + i * (params.feature_dim + labels);
        std::copy(xbar.begin(), xbar.end(), dst);
        for (int64_t m = 0; m < m_count; ++m)
          for (int64_t l = 0; l < labels; ++l)
            dst[params.feature_dim + l] += predictions[m]->at(row, l) * inv_m;
      }
      TensorPtr input =
          make_tensor({b, params.feature_dim + labels}, std::move(u));
      TensorPtr alpha = g.softmax(g.matmul(input, params.v), 1);  // [B, K]

      std::vector<TensorPtr> component_rows;
      TensorPtr ones_m = full({m_count, 1}, 1.0);
      TensorPtr ones_l = full({1, labels}, 1.0);
      for (int64_t k = 0; k < params.groups; ++k) {
        TensorPtr at_k = g.reshape(g.slice(params.a_t, 0, k, 1),
                                   {m_count, params.rank});
        TensorPtr b_k =
            g.reshape(g.slice(params.b, 0, k, 1), {params.rank, labels});
        TensorPtr a_k =
            g.reshape(g.slice(params.a_vec, 0, k, 1), {m_count, 1});
        TensorPtr bv_k = g.slice(params.b_vec, 0, k, 1);  // [1, L]
        TensorPtr c_k = g.reshape(g.slice(params.c, 0, k, 1), {1, 1});
        TensorPtr e_k = g.add(g.matmul(at_k, b_k), g.matmul(a_k, bv_k));
        e_k = g.add(e_k, g.matmul(ones_m, g.matmul(c_k, ones_l)));
        component_rows.push_back(g.reshape(e_k, {1, m_count * labels}));
      }
      TensorPtr components = component_rows.size() == 1
                                 ? component_rows[0]
                                 : g.concat(component_rows, 0);  // [K, M*L]
      TensorPtr e = g.reshape(g.matmul(alpha, components), {b, m_count, labels});
      TensorPtr w = g.softmax(e, 1);
      return g.sum(g.mul(w, p3), 1);
    }
  }
  fail("bad stacking mode");
}

StackerTrainResult train_stacker(
    StackerParams& params,
    const std::vector<const PredictionMatrix*>& train_predictions,
    const LabelSets& train_labels,
    const std::vector<std::vector<double>>& train_features,
    const std::vector<const PredictionMatrix*>& valid_predictions,
    const LabelSets& valid_labels,
    const std::vector<std::vector<double>>& valid_features,
    const StackerTrainOptions& options) {
  check_members(train_predictions);
  StackerTrainResult result;

  if (params.mode == StackMode::kAttention && options.warm_start &&
      params.groups >= params.members) {
    // Start from the trained class-wise solution: uniform attention plus
    // rank-one components that reproduce its per-label logits exactly.
    Rng rng(options.seed);
    StackerParams cw = StackerParams::create(StackMode::kClasswise,
                                             params.members, params.labels,
                                             params.feature_dim, 0, 0, rng);
    StackerTrainOptions cw_options = options;
    cw_options.warm_start = false;
    train_stacker(cw, train_predictions, train_labels, train_features,
                  valid_predictions, valid_labels, valid_features, cw_options);
    std::fill(params.v->values.begin(), params.v->values.end(), 0.0);
    std::fill(params.a_t->values.begin(), params.a_t->values.end(), 0.0);
    std::fill(params.a_vec->values.begin(), params.a_vec->values.end(), 0.0);
    std::fill(params.b_vec->values.begin(), params.b_vec->values.end(), 0.0);
    std::fill(params.c->values.begin(), params.c->values.end(), 0.0);
    double k_scale = static_cast<double>(params.groups);
    for (int64_t m = 0; m < params.members; ++m) {
      params.a_vec->values[m * params.members + m] = k_scale;
      for (int64_t l = 0; l < params.labels; ++l)
        params.b_vec->values[m * params.labels + l] =
            cw.classwise_logits->values[m * params.labels + l];
    }
  }

  ParamList trainable = params.trainable();
  auto eval_gap = [&]() {
    PredictionMatrix stacked =
        stacker_apply(params, valid_predictions, valid_features);
    return global_average_precision(stacked, valid_labels);
  };

  if (trainable.empty()) {  // simple averaging has nothing to fit
    result.best_gap = eval_gap();
    result.log.push_back(strcat_msg("step=0 gap=", result.best_gap));
    return result;
  }

  const int64_t n = train_predictions[0]->num_examples;
  check(static_cast<int64_t>(train_labels.size()) == n,
        "train_stacker: ", train_labels.size(), " label rows for ", n,
        " examples");

  std::vector<double> label_dense(static_cast<size_t>(n) * params.labels, 0.0);
  for (int64_t i = 0; i < n; ++i)
    for (int64_t l : train_labels[i]) label_dense[i * params.labels + l] = 1.0;

  AdamConfig adam_config;
  adam_config.learning_rate = options.learning_rate;
  AdamState adam(adam_config, trainable);
  Rng shuffle_rng = Rng(options.seed).fork(0x57ac);

  std::vector<int64_t> order(static_cast<size_t>(n));
  for (int64_t i = 0; i < n; ++i) order[i] = i;

  double best_gap = eval_gap();
  result.log.push_back(strcat_msg("step=0 gap=", best_gap));
  std::vector<std::vector<double>> best_values;
  for (const auto& p : trainable) best_values.push_back(p.tensor->values);
  int64_t best_step = 0;
  int64_t stale = 0;

  int64_t cursor = n;  // force a shuffle on the first step
  for (int64_t step = 1; step <= options.max_steps; ++step) {
    std::vector<int64_t> batch;
    for (int64_t i = 0; i < options.batch_size; ++i) {
      if (cursor >= n) {
        for (int64_t j = n - 1; j > 0; --j)
          std::swap(order[j], order[shuffle_rng.uniform_index(j + 1)]);
        cursor = 0;
      }
      batch.push_back(order[cursor++]);
    }

    Graph g;
    TensorPtr out = stacker_graph_forward(g, params, train_predictions,
                                          train_features, batch);
    std::vector<double> targets(batch.size() * params.labels);
    for (size_t i = 0; i < batch.size(); ++i)
      std::copy_n(label_dense.data() + batch[i] * params.labels, params.labels,
                  targets.data() + i * params.labels);
    TensorPtr loss = cross_entropy_mean(
        g, out,
        make_tensor({static_cast<int64_t>(batch.size()), params.labels},
                    std::move(targets)));
    check(!std::isnan(loss->scalar_value()),
          "train_stacker: loss diverged (NaN) at step ", step);
    g.backward(loss);
    adam_step(adam, trainable);

    if (step % options.eval_interval == 0 || step == options.max_steps) {
      double gap = eval_gap();
      result.log.push_back(strcat_msg("step=", step, " loss=",
                                      loss->scalar_value(), " gap=", gap));
      if (gap > best_gap) {
        best_gap = gap;
        best_step = step;
        for (size_t i = 0; i < trainable.size(); ++i)
          best_values[i] = trainable[i].tensor->values;
        stale = 0;
      } else if (++stale > options.patience) {
        break;
      }
    }
  }
  for (size_t i = 0; i < trainable.size(); ++i)
    trainable[i].tensor->values = best_values[i];
  result.best_gap = best_gap;
  result.best_step = best_step;
  return result;
}

}  // namespace vtag
