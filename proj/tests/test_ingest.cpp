#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <filesystem>

#include "vtag/dataset.hpp"
#include "vtag/example.hpp"
#include "vtag/record_stream.hpp"
#include "vtag/split.hpp"
#include "vtag/synth.hpp"

using namespace vtag;

namespace {

// Bit-at-a-time CRC32C, independent of the library's table-driven code.
uint32_t reference_crc32c(const std::vector<uint8_t>& data) {
  uint32_t crc = 0xffffffffu;
  for (uint8_t byte : data) {
    crc ^= byte;
    for (int k = 0; k < 8; ++k)
      crc = (crc & 1) ? (crc >> 1) ^ 0x82f63b78u : crc >> 1;
  }
  return crc ^ 0xffffffffu;
}

uint32_t reference_mask(uint32_t c) {
  return ((c >> 15) | (c << 17)) + 0xa282ead8u;
}

// Minimal hand-rolled proto writer, independent of the library encoder.
struct RefProto {
  std::vector<uint8_t> bytes;

  void varint(uint64_t v) {
    while (v >= 0x80) {
      bytes.push_back(static_cast<uint8_t>(v) | 0x80);
      v >>= 7;
    }
    bytes.push_back(static_cast<uint8_t>(v));
  }
  void tag(uint32_t field, uint32_t wire) { varint((field << 3) | wire); }
  void len_delim(uint32_t field, const RefProto& sub) {
    tag(field, 2);
    varint(sub.bytes.size());
    bytes.insert(bytes.end(), sub.bytes.begin(), sub.bytes.end());
  }
  void raw_bytes(uint32_t field, const std::vector<uint8_t>& payload) {
    tag(field, 2);
    varint(payload.size());
    bytes.insert(bytes.end(), payload.begin(), payload.end());
  }
};

RefProto ref_float_feature(const std::vector<float>& values) {
  RefProto packed;
  for (float f : values) {
    uint8_t buf[4];
    std::memcpy(buf, &f, 4);
    packed.bytes.insert(packed.bytes.end(), buf, buf + 4);
  }
  RefProto list;
  list.raw_bytes(1, packed.bytes);
  RefProto feature;
  feature.len_delim(2, list);  // float_list
  return feature;
}

RefProto ref_int64_feature(const std::vector<int64_t>& values) {
  RefProto packed;
  for (int64_t v : values) packed.varint(static_cast<uint64_t>(v));
  RefProto list;
  list.raw_bytes(1, packed.bytes);
  RefProto feature;
  feature.len_delim(3, list);  // int64_list
  return feature;
}

RefProto ref_bytes_feature(const std::vector<uint8_t>& value) {
  RefProto list;
  list.raw_bytes(1, value);
  RefProto feature;
  feature.len_delim(1, list);  // bytes_list
  return feature;
}

void ref_map_entry(RefProto& features, const std::string& key,
                   const RefProto& feature) {
  RefProto entry;
  entry.raw_bytes(1, std::vector<uint8_t>(key.begin(), key.end()));
  entry.len_delim(2, feature);
  features.len_delim(1, entry);
}

}  // namespace

TEST_CASE("record framing uses independently verified masked CRCs") {
  std::vector<uint8_t> payload = {'h', 'e', 'l', 'l', 'o'};
  auto stream = write_record_stream({payload});
  REQUIRE(stream.size() == 8 + 4 + 5 + 4);

  std::vector<uint8_t> length_bytes(stream.begin(), stream.begin() + 8);
  CHECK(length_bytes[0] == 5);  // little-endian u64 length
  uint32_t stored_len_crc = 0;
  std::memcpy(&stored_len_crc, stream.data() + 8, 4);
  CHECK(stored_len_crc == reference_mask(reference_crc32c(length_bytes)));

  uint32_t stored_payload_crc = 0;
  std::memcpy(&stored_payload_crc, stream.data() + 12 + 5, 4);
  CHECK(stored_payload_crc == reference_mask(reference_crc32c(payload)));
}

TEST_CASE("empty stream parses to no payloads") {
  CHECK(parse_record_stream({}).empty());
  CHECK(write_record_stream({}).empty());
}

TEST_CASE("record stream round trip is bit exact (property)") {
  Rng rng(31);
  std::vector<std::vector<uint8_t>> payloads;
  for (int i = 0; i < 200; ++i) {
    std::vector<uint8_t> p(rng.uniform_index(200));  // includes empty payloads
    for (auto& b : p) b = static_cast<uint8_t>(rng.next_u64());
    payloads.push_back(std::move(p));
  }
  auto stream = write_record_stream(payloads);
  auto parsed = parse_record_stream(stream);
  CHECK(parsed == payloads);
}

TEST_CASE("single-bit corruption in any byte is detected") {
  std::vector<std::vector<uint8_t>> payloads = {
      {1, 2, 3}, {0xff, 0x00, 0xaa, 0x55}, {9}};
  auto stream = write_record_stream(payloads);
  for (size_t pos = 0; pos < stream.size(); ++pos) {
    for (uint8_t mask : {0x01, 0x80}) {
      auto corrupted = stream;
      corrupted[pos] ^= mask;
      CHECK_THROWS_AS(parse_record_stream(corrupted), Error);
    }
  }
}

TEST_CASE("truncated record reports the byte offset") {
  auto stream = write_record_stream({{1, 2, 3, 4, 5, 6, 7, 8}});
  stream.resize(stream.size() - 2);
  CHECK_THROWS_WITH_AS(parse_record_stream(stream),
                       doctest::Contains("truncated"), Error);
}

TEST_CASE("decode inverts an independent reference encoder (video)") {
  RefProto features;
  ref_map_entry(features, "mean_rgb", ref_float_feature({0.5f}));
  ref_map_entry(features, "mean_audio", ref_float_feature({0.25f}));
  ref_map_entry(features, "labels", ref_int64_feature({3}));
  ref_map_entry(features, "video_id", ref_bytes_feature({'v', 'i', 'd', '1'}));
  RefProto payload;
  payload.len_delim(1, features);

  Example ex = decode_example(payload.bytes, DecodeMode::kVideo);
  CHECK(ex.video_id == "vid1");
  CHECK(ex.labels == std::vector<int64_t>{3});
  REQUIRE(ex.video_level.has_value());
  CHECK(ex.video_level->mean_rgb == std::vector<double>{0.5});
  CHECK(ex.video_level->mean_audio == std::vector<double>{0.25});
  CHECK(!ex.frame_level.has_value());
}

TEST_CASE("unknown fields are skipped") {
  RefProto features;
  ref_map_entry(features, "mean_rgb", ref_float_feature({1.0f, 2.0f}));
  ref_map_entry(features, "mean_audio", ref_float_feature({3.0f}));
  ref_map_entry(features, "labels", ref_int64_feature({0, 2}));
  ref_map_entry(features, "id", ref_bytes_feature({'x'}));
  // an extra unknown key in the map must not change the result
  RefProto with_extra = features;
  ref_map_entry(with_extra, "something_else", ref_int64_feature({42}));

  RefProto base, extra;
  base.len_delim(1, features);
  extra.len_delim(1, with_extra);
  // unknown top-level fields of all wire types are skipped too
  extra.tag(9, 0);
  extra.varint(77);
  extra.tag(10, 1);
  for (int i = 0; i < 8; ++i) extra.bytes.push_back(0x11);
  extra.tag(11, 5);
  for (int i = 0; i < 4; ++i) extra.bytes.push_back(0x22);

  Example a = decode_example(base.bytes, DecodeMode::kVideo);
  Example b = decode_example(extra.bytes, DecodeMode::kVideo);
  CHECK(a.video_id == b.video_id);
  CHECK(a.labels == b.labels);
  CHECK(a.video_level->mean_rgb == b.video_level->mean_rgb);
  CHECK(a.video_level->mean_audio == b.video_level->mean_audio);
}

TEST_CASE("missing required keys are reported by name") {
  RefProto features;
  ref_map_entry(features, "mean_rgb", ref_float_feature({1.0f}));
  ref_map_entry(features, "labels", ref_int64_feature({0}));
  ref_map_entry(features, "id", ref_bytes_feature({'x'}));
  RefProto payload;
  payload.len_delim(1, features);
  CHECK_THROWS_WITH_AS(decode_example(payload.bytes, DecodeMode::kVideo),
                       doctest::Contains("mean_audio"), Error);
}

TEST_CASE("frame payload with all-zero bytes dequantizes to the range minimum") {
  RefProto context;
  ref_map_entry(context, "labels", ref_int64_feature({1}));
  ref_map_entry(context, "id", ref_bytes_feature({'f'}));

  RefProto rgb_list, audio_list;
  for (int frame = 0; frame < 2; ++frame) {
    rgb_list.len_delim(1, ref_bytes_feature(std::vector<uint8_t>(4, 0)));
    audio_list.len_delim(1, ref_bytes_feature(std::vector<uint8_t>(2, 0)));
  }
  RefProto feature_lists;
  {
    RefProto entry;
    entry.raw_bytes(1, {'r', 'g', 'b'});
    entry.len_delim(2, rgb_list);
    feature_lists.len_delim(1, entry);
  }
  {
    RefProto entry;
    entry.raw_bytes(1, {'a', 'u', 'd', 'i', 'o'});
    entry.len_delim(2, audio_list);
    feature_lists.len_delim(1, entry);
  }
  RefProto payload;
  payload.len_delim(1, context);
  payload.len_delim(2, feature_lists);

  Example ex = decode_example(payload.bytes, DecodeMode::kFrame);
  REQUIRE(ex.frame_level.has_value());
  CHECK(ex.frame_level->frames == 2);
  CHECK(ex.frame_level->rgb_dim == 4);
  CHECK(ex.frame_level->audio_dim == 2);
  for (double v : ex.frame_level->rgb) CHECK(v == doctest::Approx(-2.0));
  for (double v : ex.frame_level->audio) CHECK(v == doctest::Approx(-2.0));
}

TEST_CASE("library encoder round-trips through the decoder") {
  Rng rng(33);
  Example ex;
  ex.video_id = "roundtrip";
  ex.labels = {1, 4, 7};
  FrameLevel fl;
  fl.frames = 3;
  fl.rgb_dim = 5;
  fl.audio_dim = 2;
  for (int i = 0; i < 15; ++i)
    fl.rgb.push_back(dequantize(static_cast<uint8_t>(rng.uniform_index(256))));
  for (int i = 0; i < 6; ++i)
    fl.audio.push_back(dequantize(static_cast<uint8_t>(rng.uniform_index(256))));
  VideoLevel vl;
  vl.mean_rgb = {0.25, -0.5, 0.75, 0.0, 1.0};
  vl.mean_audio = {0.125, -0.125};
  ex.frame_level = fl;
  ex.video_level = vl;

  auto payload = encode_example(ex);
  Example frame = decode_example(payload, DecodeMode::kFrame);
  CHECK(frame.video_id == ex.video_id);
  CHECK(frame.labels == ex.labels);
  REQUIRE(frame.frame_level.has_value());
  // frame values already sit on the quantization lattice, so they round-trip
  for (size_t i = 0; i < fl.rgb.size(); ++i)
    CHECK(frame.frame_level->rgb[i] ==
          doctest::Approx(fl.rgb[i]).epsilon(1e-12));
  Example video = decode_example(payload, DecodeMode::kVideo);
  REQUIRE(video.video_level.has_value());
  // means travel as f32
  for (size_t i = 0; i < vl.mean_rgb.size(); ++i)
    CHECK(video.video_level->mean_rgb[i] ==
          doctest::Approx(static_cast<float>(vl.mean_rgb[i])));
}

TEST_CASE("dequantize endpoints, midpoint and monotonicity") {
  CHECK(dequantize(0) == doctest::Approx(-2.0));
  CHECK(dequantize(255) == doctest::Approx(2.0));
  CHECK(dequantize(128) == doctest::Approx(-2.0 + 512.0 / 255.0));
  double prev = dequantize(0);
  for (int b = 1; b < 256; ++b) {
    double v = dequantize(static_cast<uint8_t>(b));
    CHECK(v >= prev);
    prev = v;
  }
}

TEST_CASE("split rules follow the file-name patterns") {
  CHECK(classify_file("validateaK.tfrecord") == DatasetPart::kValidate1);
  CHECK(classify_file("validate7Q.tfrecord") == DatasetPart::kValidate2);
  CHECK(classify_file("trainAB.tfrecord") == DatasetPart::kTrain1);
  CHECK(classify_file("validateBz.tfrecord") == DatasetPart::kTrain2);
  CHECK(classify_file("testZZ.tfrecord") == DatasetPart::kTest);
  CHECK(classify_file("/data/shards/trainAB.tfrecord") == DatasetPart::kTrain1);
  CHECK(!classify_file("train1.tfrecord").has_value());    // one char only
  CHECK(!classify_file("trainABC.tfrecord").has_value());  // three chars
  CHECK(!classify_file("other.tfrecord").has_value());
}

TEST_CASE("split_files partitions its input") {
  std::vector<std::string> names;
  Rng rng(35);
  for (int i = 0; i < 30; ++i) {
    const char* stems[] = {"train", "validate", "test", "junk"};
    std::string stem = stems[rng.uniform_index(4)];
    std::string chars = "aB7xK0";
    stem += chars[rng.uniform_index(6)];
    stem += chars[rng.uniform_index(6)];
    names.push_back(stem + ".tfrecord");
  }
  SplitResult result = split_files(names);
  size_t total = result.rejects.size();
  for (DatasetPart part : kAllParts) total += result.part(part).size();
  CHECK(total == names.size());
}

TEST_CASE("synth: zero noise single-label window equals the prototype") {
  SynthSpec spec;
  spec.seed = 5;
  spec.num_examples = 50;
  spec.num_labels = 4;
  spec.rgb_dim = 6;
  spec.audio_dim = 3;
  spec.max_frames = 10;
  spec.window_min_frames = 3;
  spec.window_max_frames = 5;
  spec.noise_level = 0.0;
  spec.mean_labels_per_example = 1.0;
  SynthDataset data = synth_generate(spec);

  Rng proto_rng = Rng(spec.seed).fork(0xf00d);
  std::vector<double> protos(spec.num_labels * spec.rgb_dim);
  for (double& v : protos) v = proto_rng.normal() * spec.prototype_scale;

  bool found_single = false;
  for (const Example& ex : data.examples) {
    if (ex.labels.size() != 1) continue;
    found_single = true;
    int64_t label = ex.labels[0];
    const FrameLevel& fl = *ex.frame_level;
    int64_t hits = 0;
    for (int64_t t = 0; t < fl.frames; ++t) {
      bool match = true;
      for (int64_t j = 0; j < fl.rgb_dim; ++j)
        match = match &&
                fl.rgb[t * fl.rgb_dim + j] == protos[label * fl.rgb_dim + j];
      hits += match;
    }
    CHECK(hits >= spec.window_min_frames);
  }
  CHECK(found_single);
}

TEST_CASE("synth: video-level features equal the frame means") {
  SynthSpec spec;
  spec.seed = 6;
  spec.num_examples = 20;
  spec.num_labels = 5;
  spec.rgb_dim = 4;
  spec.audio_dim = 2;
  spec.max_frames = 7;
  spec.window_max_frames = 7;
  SynthDataset data = synth_generate(spec);
  for (const Example& ex : data.examples) {
    const FrameLevel& fl = *ex.frame_level;
    for (int64_t j = 0; j < fl.rgb_dim; ++j) {
      double mean = 0.0;
      for (int64_t t = 0; t < fl.frames; ++t)
        mean += fl.rgb[t * fl.rgb_dim + j];
      mean /= static_cast<double>(fl.frames);
      CHECK(std::fabs(mean - ex.video_level->mean_rgb[j]) < 1e-9);
    }
  }
}

TEST_CASE("synth: identity correlation gives near-zero label correlation") {
  SynthSpec spec;
  spec.seed = 7;
  spec.num_examples = 10000;
  spec.num_labels = 6;
  spec.rgb_dim = 2;
  spec.audio_dim = 1;
  spec.max_frames = 2;
  spec.window_min_frames = 1;
  spec.window_max_frames = 2;
  spec.mean_labels_per_example = 1.5;
  SynthDataset data = synth_generate(spec);

  for (int64_t i = 0; i < spec.num_labels; ++i) {
    for (int64_t j = i + 1; j < spec.num_labels; ++j) {
      double pi = 0, pj = 0, pij = 0;
      for (const Example& ex : data.examples) {
        bool hi = std::binary_search(ex.labels.begin(), ex.labels.end(), i);
        bool hj = std::binary_search(ex.labels.begin(), ex.labels.end(), j);
        pi += hi;
        pj += hj;
        pij += hi && hj;
      }
      double n = static_cast<double>(spec.num_examples);
      pi /= n;
      pj /= n;
      pij /= n;
      double denom = std::sqrt(pi * (1 - pi) * pj * (1 - pj));
      double r = (pij - pi * pj) / denom;
      CHECK(std::fabs(r) < 0.05);
    }
  }
}

TEST_CASE("synth: strong pairwise correlation lifts co-occurrence") {
  SynthSpec spec;
  spec.seed = 8;
  spec.num_examples = 10000;
  spec.num_labels = 6;
  spec.rgb_dim = 2;
  spec.audio_dim = 1;
  spec.max_frames = 2;
  spec.window_min_frames = 1;
  spec.window_max_frames = 2;
  spec.mean_labels_per_example = 1.5;
  spec.correlation = pairwise_correlation(spec.num_labels, 0.9);
  SynthDataset data = synth_generate(spec);

  double p0 = 0, p1 = 0, p01 = 0;
  for (const Example& ex : data.examples) {
    bool h0 =
        std::binary_search(ex.labels.begin(), ex.labels.end(), int64_t{0});
    bool h1 =
        std::binary_search(ex.labels.begin(), ex.labels.end(), int64_t{1});
    p0 += h0;
    p1 += h1;
    p01 += h0 && h1;
  }
  double n = static_cast<double>(spec.num_examples);
  double lift = (p01 / n) / ((p0 / n) * (p1 / n));
  CHECK(lift > 2.0);
}

TEST_CASE("synth: determinism and infeasible specs") {
  SynthSpec spec;
  spec.seed = 9;
  spec.num_examples = 5;
  spec.num_labels = 3;
  spec.rgb_dim = 4;
  spec.audio_dim = 2;
  spec.max_frames = 6;
  spec.mean_labels_per_example = 1.0;
  SynthDataset a = synth_generate(spec);
  SynthDataset b = synth_generate(spec);
  for (size_t i = 0; i < a.examples.size(); ++i) {
    CHECK(a.examples[i].labels == b.examples[i].labels);
    CHECK(a.examples[i].frame_level->rgb == b.examples[i].frame_level->rgb);
  }

  SynthSpec bad = spec;
  bad.rgb_prototypes = {1.0, 2.0};  // wrong size for L x rgb_dim
  CHECK_THROWS_AS(synth_generate(bad), Error);
  SynthSpec asym = spec;
  asym.correlation.assign(9, 0.0);
  asym.correlation[0] = asym.correlation[4] = asym.correlation[8] = 1.0;
  asym.correlation[1] = 0.5;  // not symmetric
  CHECK_THROWS_AS(synth_generate(asym), Error);
}

TEST_CASE("export_shards writes loadable parts with table-style names") {
  SynthSpec spec;
  spec.seed = 10;
  spec.num_examples = 50;
  spec.num_labels = 4;
  spec.rgb_dim = 3;
  spec.audio_dim = 2;
  spec.max_frames = 4;
  spec.window_max_frames = 4;
  SynthDataset data = synth_generate(spec);

  std::string dir = "/tmp/vtag_test_shards";
  std::filesystem::remove_all(dir);
  SynthExportPlan plan;
  plan.counts = {20, 8, 8, 8, 6};
  plan.examples_per_shard = 7;
  export_shards(data, dir, plan);

  DatasetOptions options;
  options.mode = DecodeMode::kFrame;
  options.num_labels = spec.num_labels;
  options.max_frames = spec.max_frames;
  CHECK(load_part(dir, DatasetPart::kTrain1, options).size() == 20);
  CHECK(load_part(dir, DatasetPart::kValidate1, options).size() == 8);
  CHECK(load_part(dir, DatasetPart::kTrain2, options).size() == 8);
  CHECK(load_part(dir, DatasetPart::kValidate2, options).size() == 8);
  std::vector<Example> test_part = load_part(dir, DatasetPart::kTest, options);
  CHECK(test_part.size() == 6);
  CHECK(test_part[0].frame_level.has_value());
  CHECK(test_part[0].video_level.has_value());  // context means decode too
  std::filesystem::remove_all(dir);
}
