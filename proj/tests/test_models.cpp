#include <doctest.h>

#include <cmath>

#include "vtag/attention.hpp"
#include "vtag/grad_check.hpp"
#include "vtag/loss.hpp"
#include "vtag/multiscale.hpp"

using namespace vtag;

namespace {

TensorPtr find_param(const ParamList& params, const std::string& name) {
  for (const auto& p : params)
    if (p.name == name) return p.tensor;
  FAIL(("missing parameter " + name).c_str());
  return nullptr;
}

void copy_param(const ParamList& from, const std::string& from_name,
                const ParamList& to, const std::string& to_name) {
  TensorPtr src = find_param(from, from_name);
  TensorPtr dst = find_param(to, to_name);
  REQUIRE(src->shape == dst->shape);
  dst->values = src->values;
}

Example frame_example(Rng& rng, int64_t frames, int64_t rgb_dim,
                      int64_t audio_dim, std::vector<int64_t> labels = {0}) {
  Example ex;
  ex.video_id = "t";
  ex.labels = std::move(labels);
  FrameLevel fl;
  fl.frames = frames;
  fl.rgb_dim = rgb_dim;
  fl.audio_dim = audio_dim;
  for (int64_t i = 0; i < frames * rgb_dim; ++i)
    fl.rgb.push_back(rng.uniform(-1, 1));
  for (int64_t i = 0; i < frames * audio_dim; ++i)
    fl.audio.push_back(rng.uniform(-1, 1));
  ex.frame_level = std::move(fl);
  return ex;
}

}  // namespace

TEST_CASE("moe: forced single expert with zero logit gives 0.5") {
  Rng rng(50);
  ParamList params;
  MoeHead head("m", 4, 3, 1, rng, &params);
  // gate bias strongly prefers the real expert over the dummy
  find_param(params, "m/gate_w")->values.assign(4 * 3 * 2, 0.0);
  TensorPtr gate_b = find_param(params, "m/gate_b");
  for (int64_t l = 0; l < 3; ++l) gate_b->values[l * 2] = 50.0;
  find_param(params, "m/expert_w")->values.assign(4 * 3, 0.0);
  find_param(params, "m/expert_b")->values.assign(3, 0.0);

  Graph g;
  TensorPtr p = head.forward(g, make_tensor({1, 4}, {0.1, -0.2, 0.3, 0.4}));
  for (double v : p->values) CHECK(v == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("moe: zero expert weights bound confidences by 0.5") {
  Rng rng(51);
  ParamList params;
  MoeHead head("m", 5, 4, 3, rng, &params);
  find_param(params, "m/expert_w")->values.assign(5 * 4 * 3, 0.0);
  find_param(params, "m/expert_b")->values.assign(4 * 3, 0.0);
  Graph g;
  TensorPtr x = make_tensor({2, 5}, {0.3, -1, 2, 0.5, -0.2, 1, 1, -1, 0, 0.7});
  TensorPtr p = head.forward(g, x);
  for (double v : p->values) {
    CHECK(v > 0.0);
    CHECK(v <= 0.5 + 1e-12);  // 0.5 times the non-dummy gate mass
  }
}

TEST_CASE("moe: matches a straight-line evaluation of the formula") {
  Rng rng(52);
  ParamList params;
  const int64_t d = 6, labels = 5, m = 3;
  MoeHead head("m", d, labels, m, rng, &params);
  std::vector<double> x(d);
  for (double& v : x) v = rng.uniform(-1, 1);

  Graph g;
  TensorPtr p = head.forward(g, make_tensor({1, d}, x));

  const auto& gw = find_param(params, "m/gate_w")->values;
  const auto& gb = find_param(params, "m/gate_b")->values;
  const auto& ew = find_param(params, "m/expert_w")->values;
  const auto& eb = find_param(params, "m/expert_b")->values;
  for (int64_t l = 0; l < labels; ++l) {
    std::vector<double> gate(m + 1);
    for (int64_t k = 0; k <= m; ++k) {
      double acc = gb[l * (m + 1) + k];
      for (int64_t i = 0; i < d; ++i)
        acc += x[i] * gw[i * labels * (m + 1) + l * (m + 1) + k];
      gate[k] = acc;
    }
    double mx = *std::max_element(gate.begin(), gate.end());
    double z = 0;
    for (double& v : gate) {
      v = std::exp(v - mx);
      z += v;
    }
    double expected = 0.0;
    for (int64_t k = 0; k < m; ++k) {
      double logit = eb[l * m + k];
      for (int64_t i = 0; i < d; ++i)
        logit += x[i] * ew[i * labels * m + l * m + k];
      expected += gate[k] / z / (1.0 + std::exp(-logit));
    }
    CHECK(p->values[l] == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("lstm accumulator: zero input keeps the accumulator at zero") {
  Rng rng(53);
  ParamList params;
  LstmCell cell("c", LstmKind::kAccumulator, 3, 4, rng, &params);
  Graph g;
  LstmState s0 = cell.initial_state(1);
  LstmState s1 = cell.step(g, s0, zeros({1, 3}));
  for (double v : s1.acc->values) CHECK(v == 0.0);
  for (double v : s1.acc_norm->values) CHECK(v == 0.0);  // n(0) = 0
}

TEST_CASE("lstm accumulator: exposed state is unit length when nonzero") {
  Rng rng(54);
  ParamList params;
  LstmCell cell("c", LstmKind::kAccumulator, 3, 4, rng, &params);
  Graph g;
  LstmState s = cell.initial_state(1);
  for (int t = 0; t < 5; ++t) {
    TensorPtr x = make_tensor({1, 3}, {rng.uniform(-1, 1), rng.uniform(-1, 1),
                                       rng.uniform(-1, 1)});
    s = cell.step(g, s, x);
    double ss = 0;
    for (double v : s.acc_norm->values) ss += v * v;
    CHECK(std::fabs(std::sqrt(ss) - 1.0) < 1e-9);
  }
}

TEST_CASE("lstm shared-gate: one scalar gate drives every cell") {
  Rng rng(55);
  ParamList params;
  const int64_t cells = 5;
  LstmCell cell("c", LstmKind::kSharedGate, 3, cells, rng, &params);
  // zero the transform so the gates come from the bias alone
  find_param(params, "c/w")->values.assign((3 + cells) * (2 * cells + 2), 0.0);
  TensorPtr b = find_param(params, "c/b");
  b->values.assign(2 * cells + 2, 0.0);
  b->values[2 * cells] = -100.0;  // input gate saturated shut
  b->values[2 * cells + 1] = 0.7;

  Graph g;
  LstmState prev = cell.initial_state(1);
  prev.c = make_tensor({1, cells}, {0.3, -0.4, 0.5, 1.0, -1.2});
  prev.h = zeros({1, cells});
  LstmState next = cell.step(g, prev, make_tensor({1, 3}, {1.0, -1.0, 2.0}));

  double forget = 1.0 / (1.0 + std::exp(-0.7));
  for (int64_t i = 0; i < cells; ++i)
    CHECK(next.c->values[i] ==
          doctest::Approx(forget * prev.c->values[i]).epsilon(1e-9));
  // gate broadcasts are identical scalars across the block
  for (int64_t i = 1; i < cells; ++i) {
    CHECK(next.input_gate->values[i] == next.input_gate->values[0]);
    CHECK(next.forget_gate->values[i] == next.forget_gate->values[0]);
  }
}

TEST_CASE("lstm accumulator step passes a gradient check") {
  Rng rng(56);
  ParamList params;
  LstmCell cell("c", LstmKind::kAccumulator, 3, 4, rng, &params);
  TensorPtr x1 = make_tensor({1, 3}, {0.3, -0.6, 0.8});
  TensorPtr x2 = make_tensor({1, 3}, {-0.2, 0.4, 0.1});
  double err = grad_check(
      [&](Graph& g) {
        LstmState s = cell.initial_state(1);
        s = cell.step(g, s, x1);
        s = cell.step(g, s, x2);
        return g.mean_all(g.concat({s.h, s.acc_norm}, 1));
      },
      params);
  CHECK(err < 1e-4);
}

TEST_CASE("encode: one-frame sequence equals a single step from zero") {
  Rng rng(57);
  ParamList params;
  LstmStack stack("s", LstmKind::kVanilla, 4, 3, 1, rng, &params);
  TensorPtr frames = make_tensor({1, 4}, {0.5, -0.5, 0.25, 1.0});
  Graph g;
  auto run = stack.run(g, frames);
  TensorPtr rep = stack.representation(g, run, false);
  LstmState one = stack.layer(0).step(g, stack.layer(0).initial_state(1), frames);
  for (int64_t i = 0; i < 3; ++i)
    CHECK(rep->values[i] == doctest::Approx(one.c->values[i]).epsilon(1e-12));
}

TEST_CASE("parallel encode: audio half ignores the rgb stream") {
  Rng rng(58);
  ModelConfig config;
  config.architecture = "parallel_lstm";
  config.num_labels = 3;
  config.rgb_dim = 4;
  config.audio_dim = 2;
  config.lstm_cells = 3;
  config.audio_cells = 2;
  ParamList params;
  SeqEncoder encoder("e", config, EncodeMode::kParallel, rng, &params);

  Rng data_rng(59);
  Example a = frame_example(data_rng, 5, 4, 2);
  Example b = frame_example(data_rng, 5, 4, 2);
  for (double& v : a.frame_level->audio) v = 0.0;
  b.frame_level->audio = a.frame_level->audio;  // same (zero) audio

  Graph g;
  TensorPtr ra = encoder.encode(g, a);
  TensorPtr rb = encoder.encode(g, b);
  // rgb halves differ, audio halves agree exactly
  bool rgb_differs = false;
  for (int64_t i = 0; i < 3; ++i)
    rgb_differs = rgb_differs || ra->values[i] != rb->values[i];
  CHECK(rgb_differs);
  for (int64_t i = 3; i < 5; ++i) CHECK(ra->values[i] == rb->values[i]);
}

TEST_CASE("encode: reversing the sequence changes the representation") {
  Rng rng(60);
  ParamList params;
  LstmStack stack("s", LstmKind::kVanilla, 3, 4, 1, rng, &params);
  Rng data_rng(61);
  std::vector<double> v(5 * 3);
  for (double& x : v) x = data_rng.uniform(-1, 1);
  std::vector<double> reversed(v.size());
  for (int t = 0; t < 5; ++t)
    std::copy_n(v.begin() + t * 3, 3, reversed.begin() + (4 - t) * 3);

  Graph g;
  TensorPtr fwd = stack.representation(g, stack.run(g, make_tensor({5, 3}, v)), false);
  TensorPtr bwd = stack.representation(
      g, stack.run(g, make_tensor({5, 3}, reversed)), false);
  bool differs = false;
  for (size_t i = 0; i < fwd->values.size(); ++i)
    differs = differs || std::fabs(fwd->values[i] - bwd->values[i]) > 1e-9;
  CHECK(differs);
}

TEST_CASE("encode: empty sequences are rejected") {
  Rng rng(62);
  ParamList params;
  LstmStack stack("s", LstmKind::kVanilla, 3, 4, 1, rng, &params);
  Graph g;
  CHECK_THROWS_AS(make_tensor({0, 3}, {}), Error);  // extents must be positive
  Example ex;
  ex.video_id = "empty";
  CHECK_THROWS_AS(frame_matrix(ex), Error);
}

TEST_CASE("cnn: width-1 unit filter reduces to max over time") {
  Rng rng(63);
  ParamList params;
  ConvBank bank("cnn", 3, {{1, 1}}, rng, &params);
  TensorPtr w = find_param(params, "cnn/w1");
  w->values.assign(3, 0.0);
  w->values[1] = 1.0;  // picks feature 1
  find_param(params, "cnn/b1")->values.assign(1, 0.0);

  std::vector<double> frames = {0.1, 0.4, 0.0,   //
                                0.2, 0.9, 0.0,   //
                                0.3, 0.2, 0.0};  // max of feature 1 is 0.9
  Graph g;
  TensorPtr out = bank.max_over_time(g, make_tensor({3, 3}, frames));
  CHECK(out->values[0] == doctest::Approx(0.9));
}

TEST_CASE("cnn: all-zero frames give the activated bias") {
  Rng rng(64);
  ParamList params;
  ConvBank bank("cnn", 2, {{1, 2}, {2, 2}}, rng, &params);
  find_param(params, "cnn/b1")->values = {0.5, -0.5};
  find_param(params, "cnn/b2")->values = {-1.0, 2.0};
  Graph g;
  TensorPtr out = bank.max_over_time(g, zeros({4, 2}));
  CHECK(out->values[0] == doctest::Approx(0.5));
  CHECK(out->values[1] == doctest::Approx(0.0));  // relu clips the negative
  CHECK(out->values[2] == doctest::Approx(0.0));
  CHECK(out->values[3] == doctest::Approx(2.0));
}

TEST_CASE("cnn: matches a nested-loop convolution oracle") {
  Rng rng(65);
  ParamList params;
  const int64_t d = 3;
  std::vector<ConvFilter> filters = {{1, 2}, {2, 2}, {3, 1}};
  ConvBank bank("cnn", d, filters, rng, &params);
  Rng data_rng(66);
  const int64_t frames = 6;
  std::vector<double> x(frames * d);
  for (double& v : x) v = data_rng.uniform(-1, 1);

  Graph g;
  TensorPtr out = bank.max_over_time(g, make_tensor({frames, d}, x));

  int64_t offset = 0;
  for (const auto& f : filters) {
    const auto& w = find_param(params, "cnn/w" + std::to_string(f.width))->values;
    const auto& b = find_param(params, "cnn/b" + std::to_string(f.width))->values;
    for (int64_t c = 0; c < f.channels; ++c) {
      double best = -HUGE_VAL;
      for (int64_t t = 0; t + f.width <= frames; ++t) {
        double acc = b[c];
        for (int64_t j = 0; j < f.width; ++j)
          for (int64_t i = 0; i < d; ++i)
            acc += x[(t + j) * d + i] * w[(j * d + i) * f.channels + c];
        best = std::max(best, std::max(acc, 0.0));
      }
      CHECK(out->values[offset + c] == doctest::Approx(best).epsilon(1e-12));
    }
    offset += f.channels;
  }
}

TEST_CASE("cnn: sequences shorter than the widest filter fail") {
  Rng rng(67);
  ParamList params;
  ConvBank bank("cnn", 2, {{3, 1}}, rng, &params);
  Graph g;
  CHECK_THROWS_WITH_AS(bank.max_over_time(g, zeros({2, 2})),
                       doctest::Contains("shorter"), Error);
}

TEST_CASE("chaining with one stage is bit-identical to the plain moe") {
  Rng rng(68);
  ParamList moe_params;
  MoeHead moe("stage", 6, 4, 2, rng, &moe_params);
  ParamList chain_params;
  ChainedMoe chain("c", {6}, 4, 2, 3, 0, rng, &chain_params);
  copy_param(moe_params, "stage/gate_w", chain_params, "c/stage0/gate_w");
  copy_param(moe_params, "stage/gate_b", chain_params, "c/stage0/gate_b");
  copy_param(moe_params, "stage/expert_w", chain_params, "c/stage0/expert_w");
  copy_param(moe_params, "stage/expert_b", chain_params, "c/stage0/expert_b");

  Rng data_rng(69);
  std::vector<double> x(2 * 6);
  for (double& v : x) v = data_rng.uniform(-1, 1);
  Graph g;
  TensorPtr feature = make_tensor({2, 6}, x);
  TensorPtr direct = moe.forward(g, feature);
  TensorPtr chained = chain.forward(g, {feature}, nullptr, nullptr);
  CHECK(direct->values == chained->values);
}

TEST_CASE("chaining: zeroed projection rows make stage 2 ignore stage 1") {
  Rng rng(70);
  ParamList params;
  ChainedMoe chain("c", {5, 5}, 3, 2, 4, 0, rng, &params);
  // stage-1 weights on the projected block live in rows [5, 9) of its input
  for (const char* name : {"c/stage1/gate_w", "c/stage1/expert_w"}) {
    TensorPtr w = find_param(params, name);
    int64_t cols = w->shape[1];
    for (int64_t r = 5; r < 9; ++r)
      for (int64_t col = 0; col < cols; ++col) w->values[r * cols + col] = 0.0;
  }
  Rng data_rng(71);
  std::vector<double> x(5);
  for (double& v : x) v = data_rng.uniform(-1, 1);
  TensorPtr feature = make_tensor({1, 5}, x);

  auto stage2_output = [&]() {
    Graph g;
    return chain.forward(g, {feature, feature}, nullptr, nullptr)->values;
  };
  std::vector<double> base = stage2_output();
  // perturb stage-0 parameters; stage-1 output must not move
  find_param(params, "c/stage0/gate_b")->values[0] += 3.0;
  find_param(params, "c/stage0/expert_b")->values[1] -= 2.0;
  CHECK(stage2_output() == base);
}

TEST_CASE("chaining: gradients flow back to the first stage") {
  Rng rng(72);
  ParamList params;
  ChainedMoe chain("c", {4, 4, 4}, 3, 2, 3, 0, rng, &params);
  Rng data_rng(73);
  std::vector<double> x(4);
  for (double& v : x) v = data_rng.uniform(-1, 1);
  TensorPtr feature = make_tensor({1, 4}, x);
  Graph g;
  TensorPtr out = chain.forward(g, {feature, feature, feature}, nullptr, nullptr);
  g.backward(g.mean_all(out));
  double norm = 0.0;
  for (double v : find_param(params, "c/stage0/gate_w")->grad) norm += v * v;
  CHECK(norm > 0.0);

  double err = grad_check(
      [&](Graph& gg) {
        return gg.mean_all(
            chain.forward(gg, {feature, feature, feature}, nullptr, nullptr));
      },
      params);
  CHECK(err < 1e-4);
}

TEST_CASE("attention: weights normalize per group; uniform at zero logits") {
  Rng rng(74);
  ModelConfig config;
  config.architecture = "attention_multi";
  config.num_labels = 3;
  config.rgb_dim = 3;
  config.audio_dim = 2;
  config.lstm_cells = 4;
  config.attention_groups = 3;
  AttentionModel model(config, AttentionMode::kMulti, rng);
  Rng data_rng(75);
  Example ex = frame_example(data_rng, 6, 3, 2);

  Graph g;
  TensorPtr attention;
  TensorPtr out = model.forward_example(g, ex, nullptr, &attention);
  REQUIRE(attention->shape == Shape{6, 3});
  for (int64_t k = 0; k < 3; ++k) {
    double sum = 0.0;
    for (int64_t t = 0; t < 6; ++t) sum += attention->values[t * 3 + k];
    CHECK(std::fabs(sum - 1.0) < 1e-9);
  }
  for (double v : out->values) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }

  // zero attention logits spread the weights uniformly over frames
  TensorPtr w = find_param(model.params(), "attention/w");
  w->values.assign(w->values.size(), 0.0);
  Graph g2;
  model.forward_example(g2, ex, nullptr, &attention);
  for (double v : attention->values)
    CHECK(v == doctest::Approx(1.0 / 6.0).epsilon(1e-12));
}

TEST_CASE("attention: K=1 multi consensus is the identity") {
  Rng rng(76);
  ModelConfig config;
  config.architecture = "attention_multi";
  config.num_labels = 4;
  config.rgb_dim = 3;
  config.audio_dim = 2;
  config.lstm_cells = 4;
  config.attention_groups = 1;
  config.consensus = "max";
  AttentionModel max_model(config, AttentionMode::kMulti, rng);
  config.consensus = "mean";
  Rng rng2(76);  // identical parameter draw
  AttentionModel mean_model(config, AttentionMode::kMulti, rng2);

  Rng data_rng(77);
  Example ex = frame_example(data_rng, 5, 3, 2);
  Graph g;
  TensorPtr a = max_model.forward_example(g, ex, nullptr, nullptr);
  TensorPtr b = mean_model.forward_example(g, ex, nullptr, nullptr);
  CHECK(a->values == b->values);
}

TEST_CASE("attention: local mode pools input features") {
  Rng rng(78);
  ModelConfig config;
  config.architecture = "attention_local";
  config.num_labels = 3;
  config.rgb_dim = 3;
  config.audio_dim = 1;
  config.lstm_cells = 3;
  AttentionModel model(config, AttentionMode::kLocal, rng);
  Rng data_rng(79);
  Example ex = frame_example(data_rng, 4, 3, 1);
  BatchView batch;
  std::vector<Example> pool = {ex};
  batch.examples = &pool;
  batch.indices = {0};
  Graph g;
  TensorPtr out = model.forward(g, batch, nullptr);
  CHECK(out->shape == Shape{1, 3});
  for (double v : out->values) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
}

TEST_CASE("multiscale segment: one clip equals plain encode + moe") {
  ModelConfig config;
  config.architecture = "multiscale_segment";
  config.num_labels = 3;
  config.rgb_dim = 3;
  config.audio_dim = 2;
  config.lstm_cells = 4;
  config.lstm_layers = 1;
  config.clip_frames = 100;  // longer than any sequence: one clip
  Rng rng(80);
  MultiscaleModel segment(config, MultiscaleMode::kSegment, rng);

  ModelConfig plain = config;
  plain.architecture = "lstm";
  Rng rng2(81);
  LstmModel lstm(plain, EncodeMode::kSingle, rng2);
  copy_param(segment.params(), "clip_lstm/w", lstm.params(), "encoder/lstm/layer0/w");
  copy_param(segment.params(), "clip_lstm/b", lstm.params(), "encoder/lstm/layer0/b");
  for (const char* n : {"gate_w", "gate_b", "expert_w", "expert_b"})
    copy_param(segment.params(), std::string("head/") + n, lstm.params(),
               std::string("head/") + n);

  Rng data_rng(82);
  std::vector<Example> pool = {frame_example(data_rng, 6, 3, 2)};
  BatchView batch;
  batch.examples = &pool;
  batch.indices = {0};
  Graph g;
  TensorPtr a = segment.forward(g, batch, nullptr);
  TensorPtr b = lstm.forward(g, batch, nullptr);
  for (size_t i = 0; i < a->values.size(); ++i)
    CHECK(a->values[i] == doctest::Approx(b->values[i]).epsilon(1e-12));
}

TEST_CASE("multiscale pool and segment differ only via state carry-over") {
  ModelConfig config;
  config.architecture = "multiscale_pool";
  config.num_labels = 3;
  config.rgb_dim = 2;
  config.audio_dim = 2;
  config.lstm_cells = 3;
  config.clip_frames = 3;
  Rng rng(83);
  MultiscaleModel pool_model(config, MultiscaleMode::kPool, rng);
  Rng rng2(83);
  MultiscaleModel segment_model(config, MultiscaleMode::kSegment, rng2);

  Rng data_rng(84);
  std::vector<Example> examples = {frame_example(data_rng, 9, 2, 2)};
  BatchView batch;
  batch.examples = &examples;
  batch.indices = {0};
  Graph g;
  TensorPtr a = pool_model.forward(g, batch, nullptr);
  TensorPtr b = segment_model.forward(g, batch, nullptr);
  bool differs = false;
  for (size_t i = 0; i < a->values.size(); ++i)
    differs = differs || std::fabs(a->values[i] - b->values[i]) > 1e-12;
  CHECK(differs);  // same parameters, different clip-boundary semantics
}

TEST_CASE("multiscale resolution with one level equals single-stage chaining") {
  ModelConfig config;
  config.architecture = "multiscale_resolution";
  config.num_labels = 3;
  config.rgb_dim = 2;
  config.audio_dim = 2;
  config.lstm_cells = 3;
  config.resolutions = 1;
  config.chain_stages = 1;
  Rng rng(85);
  MultiscaleModel resolution(config, MultiscaleMode::kResolution, rng);

  ModelConfig chain_config = config;
  chain_config.architecture = "chaining_lstm";
  Rng rng2(86);
  ChainingLstmModel chaining(chain_config, rng2);
  copy_param(resolution.params(), "res0_lstm/layer0/w", chaining.params(),
             "encoder/lstm/layer0/w");
  copy_param(resolution.params(), "res0_lstm/layer0/b", chaining.params(),
             "encoder/lstm/layer0/b");
  for (const char* n : {"gate_w", "gate_b", "expert_w", "expert_b"})
    copy_param(resolution.params(), std::string("chain/stage0/") + n,
               chaining.params(), std::string("chain/stage0/") + n);

  Rng data_rng(87);
  std::vector<Example> examples = {frame_example(data_rng, 5, 2, 2)};
  BatchView batch;
  batch.examples = &examples;
  batch.indices = {0};
  Graph g;
  TensorPtr a = resolution.forward(g, batch, nullptr);
  TensorPtr b = chaining.forward(g, batch, nullptr);
  for (size_t i = 0; i < a->values.size(); ++i)
    CHECK(a->values[i] == doctest::Approx(b->values[i]).epsilon(1e-12));
}

TEST_CASE("multiscale cnn-lstm: single scale consensus is the identity") {
  ModelConfig config;
  config.architecture = "multiscale_cnn_lstm";
  config.num_labels = 4;
  config.rgb_dim = 3;
  config.audio_dim = 1;
  config.lstm_cells = 3;
  config.cnn_layers = 1;
  config.cnn_filters = "1x4,2x4";
  Rng rng(88);
  MultiscaleModel model(config, MultiscaleMode::kCnnLstm, rng);
  Rng data_rng(89);
  std::vector<Example> examples = {frame_example(data_rng, 6, 3, 1)};
  BatchView batch;
  batch.examples = &examples;
  batch.indices = {0};
  Graph g;
  TensorPtr out = model.forward(g, batch, nullptr);
  CHECK(out->shape == Shape{1, 4});
  for (double v : out->values) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
}

TEST_CASE("loss: lambda 0 reduces to plain cross-entropy") {
  Graph g;
  TensorPtr p = make_tensor({2, 3}, {0.2, 0.8, 0.5, 0.9, 0.1, 0.5});
  TensorPtr t = make_tensor({2, 3}, {0.0, 1.0, 0.0, 1.0, 0.0, 1.0});
  TensorPtr plain = cross_entropy_mean(g, p, t);
  TensorPtr full = compute_loss(g, p, {}, t, nullptr, 0.0, 0.0);
  CHECK(plain->values[0] == doctest::Approx(full->values[0]));
}

TEST_CASE("loss: lambda 1 against itself equals the target entropy") {
  Graph g;
  std::vector<double> probs = {0.2, 0.8, 0.5, 0.9};
  TensorPtr p = make_tensor({1, 4}, probs);
  TensorPtr labels = make_tensor({1, 4}, {1.0, 0.0, 0.0, 1.0});
  TensorPtr loss = compute_loss(g, p, {}, labels, p, 1.0, 0.0);
  double entropy = 0.0;
  for (double q : probs) entropy += -(q * std::log(q) + (1 - q) * std::log(1 - q));
  entropy /= probs.size();
  CHECK(loss->values[0] == doctest::Approx(entropy).epsilon(1e-9));
}

TEST_CASE("loss: perfect predictions minimize the cross-entropy") {
  Rng rng(90);
  TensorPtr labels = make_tensor({2, 4}, {1, 0, 0, 1, 0, 1, 0, 0});
  Graph g;
  TensorPtr perfect = compute_loss(g, labels, {}, labels, nullptr, 0.0, 0.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> v(8);
    for (double& x : v) x = rng.uniform();
    TensorPtr other =
        compute_loss(g, make_tensor({2, 4}, v), {}, labels, nullptr, 0.0, 0.0);
    CHECK(perfect->values[0] <= other->values[0] + 1e-12);
  }
}

TEST_CASE("loss: auxiliary stages share the configured weight") {
  Graph g;
  TensorPtr p = make_tensor({1, 2}, {0.7, 0.2});
  TensorPtr s1 = make_tensor({1, 2}, {0.6, 0.3});
  TensorPtr s2 = make_tensor({1, 2}, {0.5, 0.5});
  TensorPtr t = make_tensor({1, 2}, {1.0, 0.0});
  double base = cross_entropy_mean(g, p, t)->values[0];
  double a1 = cross_entropy_mean(g, s1, t)->values[0];
  double a2 = cross_entropy_mean(g, s2, t)->values[0];
  TensorPtr combined = compute_loss(g, p, {s1, s2}, t, nullptr, 0.0, 0.15);
  CHECK(combined->values[0] ==
        doctest::Approx(0.85 * base + 0.15 * 0.5 * (a1 + a2)).epsilon(1e-12));
}

TEST_CASE("loss: weighted examples scale their contribution") {
  Graph g;
  TensorPtr p = make_tensor({2, 2}, {0.9, 0.1, 0.2, 0.8});
  TensorPtr t = make_tensor({2, 2}, {1.0, 0.0, 1.0, 0.0});
  TensorPtr w = make_tensor({2}, {2.0, 0.0});
  double weighted = cross_entropy_mean(g, p, t, w)->values[0];
  // only the first example contributes, at twice the weight
  TensorPtr p1 = make_tensor({1, 2}, {0.9, 0.1});
  TensorPtr t1 = make_tensor({1, 2}, {1.0, 0.0});
  double single = cross_entropy_mean(g, p1, t1)->values[0];
  CHECK(weighted == doctest::Approx(single).epsilon(1e-12));
}

TEST_CASE("chaining and flat moe configurations reach parameter parity") {
  Rng rng(91);
  ModelConfig chaining;
  chaining.architecture = "chaining";
  chaining.num_labels = 25;
  chaining.rgb_dim = 32;
  chaining.audio_dim = 8;
  chaining.moe_mixtures = 2;
  chaining.chain_stages = 8;
  chaining.chain_projection = 128;
  auto chain_model = build_model(chaining, rng);
  int64_t chain_count = param_count(chain_model->params());

  ModelConfig flat = chaining;
  flat.architecture = "moe";
  int64_t best_m = 1;
  int64_t best_diff = std::numeric_limits<int64_t>::max();
  for (int64_t m = 1; m <= 600; ++m) {
    flat.moe_mixtures = m;
    Rng r(1);
    auto flat_model = build_model(flat, r);
    int64_t diff = std::llabs(param_count(flat_model->params()) - chain_count);
    if (diff < best_diff) {
      best_diff = diff;
      best_m = m;
    }
  }
  double rel = static_cast<double>(best_diff) / static_cast<double>(chain_count);
  INFO("chaining params ", chain_count, ", best flat m ", best_m);
  CHECK(rel < 0.05);
}

TEST_CASE("every architecture emits confidences in [0, 1]") {
  Rng data_rng(92);
  std::vector<Example> examples;
  for (int i = 0; i < 3; ++i) {
    Example ex = frame_example(data_rng, 8, 4, 2, {static_cast<int64_t>(i)});
    VideoLevel vl;
    vl.mean_rgb.assign(4, 0.1 * i);
    vl.mean_audio.assign(2, -0.1 * i);
    ex.video_level = vl;
    examples.push_back(ex);
  }
  BatchView batch = BatchView::whole(examples);

  for (const char* arch :
       {"lr", "moe", "chaining", "dbof", "lstm", "parallel_lstm",
        "bidirectional_lstm", "cnn", "chaining_lstm", "chaining_cnn",
        "attention_multi", "attention_local", "attention_positional",
        "multiscale_segment", "multiscale_pool", "multiscale_resolution",
        "multiscale_cnn_lstm"}) {
    ModelConfig config;
    config.architecture = arch;
    config.num_labels = 5;
    config.rgb_dim = 4;
    config.audio_dim = 2;
    config.max_frames = 8;
    config.lstm_cells = 3;
    config.audio_cells = 2;
    config.attention_groups = 2;
    config.chain_stages = 2;
    config.chain_projection = 3;
    config.cnn_filters = "1x3,2x3";
    config.cnn_layers = 1;
    config.clip_frames = 3;
    config.resolutions = 2;
    Rng rng(93);
    auto model = build_model(config, rng);
    Graph g;
    TensorPtr out = model->forward(g, batch, nullptr);
    INFO(arch);
    CHECK(out->shape == Shape{3, 5});
    for (double v : out->values) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }
  }
}
