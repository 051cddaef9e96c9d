#include "vtag/model.hpp"

#include "vtag/attention.hpp"
#include "vtag/multiscale.hpp"

namespace vtag {

std::vector<ConvFilter> parse_filters(const std::string& text) {
  std::vector<ConvFilter> filters;
  size_t pos = 0;
  while (pos < text.size()) {
    size_t comma = text.find(',', pos);
    std::string item = text.substr(pos, comma == std::string::npos ? comma : comma - pos);
    size_t x = item.find('x');
    check(x != std::string::npos, "bad filter spec \"", item,
          "\", expected <width>x<channels>");
    ConvFilter f;
    f.width = std::stoll(item.substr(0, x));
    f.channels = std::stoll(item.substr(x + 1));
    check(f.width > 0 && f.channels > 0, "bad filter spec \"", item, "\"");
    filters.push_back(f);
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  check(!filters.empty(), "empty filter spec");
  return filters;
}

bool is_frame_level(const std::string& architecture) {
  return architecture != "lr" && architecture != "moe" &&
         architecture != "chaining";
}

BatchView BatchView::whole(const std::vector<Example>& examples) {
  BatchView b;
  b.examples = &examples;
  b.indices.resize(examples.size());
  for (size_t i = 0; i < examples.size(); ++i)
    b.indices[i] = static_cast<int64_t>(i);
  return b;
}

TensorPtr Model::add_xavier(const std::string& name, Shape shape, Rng& rng) {
  TensorPtr t = xavier_param(std::move(shape), rng);
  params_.push_back({name, t});
  return t;
}

TensorPtr Model::add_zeros(const std::string& name, Shape shape) {
  TensorPtr t = zeros_param(std::move(shape));
  params_.push_back({name, t});
  return t;
}

TensorPtr batch_video_features(const BatchView& batch) {
  check(batch.size() > 0, "empty batch");
  const Example& first = batch.example(0);
  check(first.video_level.has_value(), "example ", first.video_id,
        " has no video-level features");
  int64_t dv = static_cast<int64_t>(first.video_level->mean_rgb.size());
  int64_t da = static_cast<int64_t>(first.video_level->mean_audio.size());
  int64_t d = dv + da;
  std::vector<double> values;
  values.reserve(static_cast<size_t>(batch.size() * d));
  for (int64_t i = 0; i < batch.size(); ++i) {
    const Example& ex = batch.example(i);
    check(ex.video_level.has_value(), "example ", ex.video_id,
          " has no video-level features");
    check(static_cast<int64_t>(ex.video_level->mean_rgb.size()) == dv &&
              static_cast<int64_t>(ex.video_level->mean_audio.size()) == da,
          "inconsistent video-level dims for example ", ex.video_id);
    values.insert(values.end(), ex.video_level->mean_rgb.begin(),
                  ex.video_level->mean_rgb.end());
    values.insert(values.end(), ex.video_level->mean_audio.begin(),
                  ex.video_level->mean_audio.end());
  }
  return make_tensor({batch.size(), d}, std::move(values));
}

TensorPtr batch_labels(const BatchView& batch, int64_t num_labels) {
  std::vector<double> values(static_cast<size_t>(batch.size() * num_labels), 0.0);
  for (int64_t i = 0; i < batch.size(); ++i) {
    for (int64_t l : batch.example(i).labels) {
      check(l < num_labels, "label ", l, " out of range for vocabulary of ",
            num_labels);
      values[i * num_labels + l] = 1.0;
    }
  }
  return make_tensor({batch.size(), num_labels}, std::move(values));
}

TensorPtr frame_matrix(const Example& ex) {
  check(ex.frame_level.has_value(), "example ", ex.video_id,
        " has no frame-level features");
  const FrameLevel& fl = *ex.frame_level;
  check(fl.frames > 0, "example ", ex.video_id, " has an empty frame sequence");
  int64_t d = fl.rgb_dim + fl.audio_dim;
  std::vector<double> values;
  values.reserve(static_cast<size_t>(fl.frames * d));
  for (int64_t t = 0; t < fl.frames; ++t) {
    auto r = fl.rgb_frame(t);
    auto a = fl.audio_frame(t);
    values.insert(values.end(), r.begin(), r.end());
    values.insert(values.end(), a.begin(), a.end());
  }
  return make_tensor({fl.frames, d}, std::move(values));
}

TensorPtr frame_matrix_rgb(const Example& ex) {
  check(ex.frame_level.has_value(), "example ", ex.video_id,
        " has no frame-level features");
  const FrameLevel& fl = *ex.frame_level;
  check(fl.frames > 0, "example ", ex.video_id, " has an empty frame sequence");
  return make_tensor({fl.frames, fl.rgb_dim}, fl.rgb);
}

TensorPtr frame_matrix_audio(const Example& ex) {
  const FrameLevel& fl = *ex.frame_level;
  return make_tensor({fl.frames, fl.audio_dim}, fl.audio);
}

TensorPtr donor_average(const BatchView& batch, int64_t num_labels) {
  check(batch.cascade_donors != nullptr && !batch.cascade_donors->empty(),
        "cascade model needs at least one donor prediction matrix");
  const auto& donors = *batch.cascade_donors;
  std::vector<double> values(static_cast<size_t>(batch.size() * num_labels), 0.0);
  double inv = 1.0 / static_cast<double>(donors.size());
  for (int64_t i = 0; i < batch.size(); ++i) {
    int64_t row = batch.indices[i];
    for (const PredictionMatrix* m : donors) {
      check(m->num_labels == num_labels, "donor matrix has ", m->num_labels,
            " labels, model expects ", num_labels);
      check(row < m->num_examples, "donor matrix has ", m->num_examples,
            " rows, batch needs row ", row);
      for (int64_t l = 0; l < num_labels; ++l)
        values[i * num_labels + l] += m->at(row, l);
    }
    for (int64_t l = 0; l < num_labels; ++l) values[i * num_labels + l] *= inv;
  }
  return make_tensor({batch.size(), num_labels}, std::move(values));
}

std::unique_ptr<Model> build_model(const ModelConfig& config, Rng& rng) {
  const std::string& a = config.architecture;
  if (a == "lr") return std::make_unique<LrModel>(config, rng);
  if (a == "moe") return std::make_unique<MoeModel>(config, rng);
  if (a == "chaining") return std::make_unique<ChainingVideoModel>(config, rng);
  if (a == "dbof") return std::make_unique<MeanPoolModel>(config, rng);
  if (a == "lstm")
    return std::make_unique<LstmModel>(config, EncodeMode::kSingle, rng);
  if (a == "parallel_lstm")
    return std::make_unique<LstmModel>(config, EncodeMode::kParallel, rng);
  if (a == "bidirectional_lstm")
    return std::make_unique<LstmModel>(config, EncodeMode::kBidirectionalFirst,
                                       rng);
  if (a == "cnn") return std::make_unique<CnnModel>(config, rng);
  if (a == "chaining_lstm")
    return std::make_unique<ChainingLstmModel>(config, rng);
  if (a == "chaining_cnn") return std::make_unique<ChainingCnnModel>(config, rng);
  if (a == "attention_multi")
    return std::make_unique<AttentionModel>(config, AttentionMode::kMulti, rng);
  if (a == "attention_local")
    return std::make_unique<AttentionModel>(config, AttentionMode::kLocal, rng);
  if (a == "attention_positional")
    return std::make_unique<AttentionModel>(config, AttentionMode::kPositional,
                                            rng);
  if (a == "multiscale_segment")
    return std::make_unique<MultiscaleModel>(config, MultiscaleMode::kSegment,
                                             rng);
  if (a == "multiscale_pool")
    return std::make_unique<MultiscaleModel>(config, MultiscaleMode::kPool, rng);
  if (a == "multiscale_resolution")
    return std::make_unique<MultiscaleModel>(config,
                                             MultiscaleMode::kResolution, rng);
  if (a == "multiscale_cnn_lstm")
    return std::make_unique<MultiscaleModel>(config, MultiscaleMode::kCnnLstm,
                                             rng);
  fail("unknown architecture \"", a, "\"");
}

}  // namespace vtag
