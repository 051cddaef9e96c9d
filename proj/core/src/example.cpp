#include "vtag/example.hpp"

#include <algorithm>
#include <cstring>
#include <map>

namespace vtag {

namespace {

// --- protobuf wire primitives -----------------------------------------------

enum WireType : uint32_t {
  kVarint = 0,
  kFixed64 = 1,
  kLengthDelimited = 2,
  kFixed32 = 5,
};

struct Reader {
  std::span<const uint8_t> data;
  size_t pos = 0;

  bool done() const { return pos >= data.size(); }

  uint64_t varint() {
    uint64_t v = 0;
    int shift = 0;
    while (true) {
      check(pos < data.size(), "wire: truncated varint at offset ", pos);
      uint8_t b = data[pos++];
      v |= static_cast<uint64_t>(b & 0x7f) << shift;
      if (!(b & 0x80)) return v;
      shift += 7;
      check(shift < 64, "wire: varint overflow at offset ", pos);
    }
  }

  std::pair<uint32_t, uint32_t> tag() {
    uint64_t t = varint();
    return {static_cast<uint32_t>(t >> 3), static_cast<uint32_t>(t & 7)};
  }

  std::span<const uint8_t> bytes() {
    uint64_t n = varint();
    check(pos + n <= data.size(), "wire: truncated length-delimited field at offset ", pos);
    auto s = data.subspan(pos, n);
    pos += n;
    return s;
  }

  void skip(uint32_t field, uint32_t wire_type) {
    switch (wire_type) {
      case kVarint: varint(); break;
      case kFixed64:
        check(pos + 8 <= data.size(), "wire: truncated fixed64 at offset ", pos);
        pos += 8;
        break;
      case kLengthDelimited: bytes(); break;
      case kFixed32:
        check(pos + 4 <= data.size(), "wire: truncated fixed32 at offset ", pos);
        pos += 4;
        break;
      default:
        fail("wire: unsupported wire type ", wire_type, " for field ", field);
    }
  }
};

std::vector<float> parse_float_list(std::span<const uint8_t> body) {
  // FloatList { repeated float value = 1 [packed]; }
  std::vector<float> out;
  Reader r{body};
  while (!r.done()) {
    auto [field, wt] = r.tag();
    if (field == 1 && wt == kLengthDelimited) {
      auto packed = r.bytes();
      check(packed.size() % 4 == 0, "wire: packed float payload of size ",
            packed.size());
      for (size_t i = 0; i < packed.size(); i += 4) {
        float f;
        std::memcpy(&f, packed.data() + i, 4);
        out.push_back(f);
      }
    } else if (field == 1 && wt == kFixed32) {
      check(r.pos + 4 <= r.data.size(), "wire: truncated float at offset ", r.pos);
      float f;
      std::memcpy(&f, r.data.data() + r.pos, 4);
      r.pos += 4;
      out.push_back(f);
    } else {
      r.skip(field, wt);
    }
  }
  return out;
}

std::vector<int64_t> parse_int64_list(std::span<const uint8_t> body) {
  // Int64List { repeated int64 value = 1 [packed]; }
  std::vector<int64_t> out;
  Reader r{body};
  while (!r.done()) {
    auto [field, wt] = r.tag();
    if (field == 1 && wt == kLengthDelimited) {
      Reader packed{r.bytes()};
      while (!packed.done()) out.push_back(static_cast<int64_t>(packed.varint()));
    } else if (field == 1 && wt == kVarint) {
      out.push_back(static_cast<int64_t>(r.varint()));
    } else {
      r.skip(field, wt);
    }
  }
  return out;
}

std::vector<std::vector<uint8_t>> parse_bytes_list(std::span<const uint8_t> body) {
  // BytesList { repeated bytes value = 1; }
  std::vector<std::vector<uint8_t>> out;
  Reader r{body};
  while (!r.done()) {
    auto [field, wt] = r.tag();
    if (field == 1 && wt == kLengthDelimited) {
      auto b = r.bytes();
      out.emplace_back(b.begin(), b.end());
    } else {
      r.skip(field, wt);
    }
  }
  return out;
}

// Feature { BytesList bytes_list = 1; FloatList float_list = 2;
//           Int64List int64_list = 3; }
struct Feature {
  std::vector<std::vector<uint8_t>> bytes_list;
  std::vector<float> float_list;
  std::vector<int64_t> int64_list;
  bool has_bytes = false, has_floats = false, has_ints = false;
};

Feature parse_feature(std::span<const uint8_t> body) {
  Feature f;
  Reader r{body};
  while (!r.done()) {
    auto [field, wt] = r.tag();
    if (wt != kLengthDelimited) {
      r.skip(field, wt);
      continue;
    }
    auto sub = r.bytes();
    switch (field) {
      case 1: f.bytes_list = parse_bytes_list(sub); f.has_bytes = true; break;
      case 2: f.float_list = parse_float_list(sub); f.has_floats = true; break;
      case 3: f.int64_list = parse_int64_list(sub); f.has_ints = true; break;
      default: break;  // unknown member, skipped
    }
  }
  return f;
}

// Features { map<string, Feature> feature = 1; } -- each map entry is a
// message with key = 1 and value = 2.
std::map<std::string, Feature> parse_feature_map(std::span<const uint8_t> body) {
  std::map<std::string, Feature> out;
  Reader r{body};
  while (!r.done()) {
    auto [field, wt] = r.tag();
    if (field == 1 && wt == kLengthDelimited) {
      Reader entry{r.bytes()};
      std::string key;
      Feature value;
      while (!entry.done()) {
        auto [efield, ewt] = entry.tag();
        if (efield == 1 && ewt == kLengthDelimited) {
          auto kb = entry.bytes();
          key.assign(kb.begin(), kb.end());
        } else if (efield == 2 && ewt == kLengthDelimited) {
          value = parse_feature(entry.bytes());
        } else {
          entry.skip(efield, ewt);
        }
      }
      out[key] = std::move(value);
    } else {
      r.skip(field, wt);
    }
  }
  return out;
}

// FeatureLists { map<string, FeatureList> feature_list = 1; } with
// FeatureList { repeated Feature feature = 1; }.
std::map<std::string, std::vector<Feature>> parse_feature_lists(
    std::span<const uint8_t> body) {
  std::map<std::string, std::vector<Feature>> out;
  Reader r{body};
  while (!r.done()) {
    auto [field, wt] = r.tag();
    if (field == 1 && wt == kLengthDelimited) {
      Reader entry{r.bytes()};
      std::string key;
      std::vector<Feature> features;
      while (!entry.done()) {
        auto [efield, ewt] = entry.tag();
        if (efield == 1 && ewt == kLengthDelimited) {
          auto kb = entry.bytes();
          key.assign(kb.begin(), kb.end());
        } else if (efield == 2 && ewt == kLengthDelimited) {
          Reader list{entry.bytes()};
          while (!list.done()) {
            auto [lfield, lwt] = list.tag();
            if (lfield == 1 && lwt == kLengthDelimited)
              features.push_back(parse_feature(list.bytes()));
            else
              list.skip(lfield, lwt);
          }
        } else {
          entry.skip(efield, ewt);
        }
      }
      out[key] = std::move(features);
    } else {
      r.skip(field, wt);
    }
  }
  return out;
}

const Feature& require_key(const std::map<std::string, Feature>& map,
                           const std::string& key) {
  auto it = map.find(key);
  check(it != map.end(), "decode_example: missing required key \"", key, "\"");
  return it->second;
}

std::string read_id(const std::map<std::string, Feature>& map) {
  const Feature* f = nullptr;
  if (auto it = map.find("id"); it != map.end()) f = &it->second;
  else if (auto it2 = map.find("video_id"); it2 != map.end()) f = &it2->second;
  check(f != nullptr, "decode_example: missing required key \"id\"");
  check(!f->bytes_list.empty(), "decode_example: empty id bytes_list");
  return std::string(f->bytes_list[0].begin(), f->bytes_list[0].end());
}

std::vector<int64_t> read_labels(const std::map<std::string, Feature>& map) {
  std::vector<int64_t> labels = require_key(map, "labels").int64_list;
  std::sort(labels.begin(), labels.end());
  labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
  check(labels.empty() || labels.front() >= 0,
        "decode_example: negative label index ", labels.empty() ? 0 : labels.front());
  return labels;
}

// --- wire writing ------------------------------------------------------------

void put_varint(std::vector<uint8_t>& out, uint64_t v) {
  while (v >= 0x80) {
    out.push_back(static_cast<uint8_t>(v) | 0x80);
    v >>= 7;
  }
  out.push_back(static_cast<uint8_t>(v));
}

void put_tag(std::vector<uint8_t>& out, uint32_t field, uint32_t wt) {
  put_varint(out, (static_cast<uint64_t>(field) << 3) | wt);
}

void put_len_delim(std::vector<uint8_t>& out, uint32_t field,
                   std::span<const uint8_t> body) {
  put_tag(out, field, kLengthDelimited);
  put_varint(out, body.size());
  out.insert(out.end(), body.begin(), body.end());
}

std::vector<uint8_t> encode_float_feature(std::span<const double> values) {
  std::vector<uint8_t> packed;
  packed.reserve(values.size() * 4);
  for (double d : values) {
    float f = static_cast<float>(d);
    uint8_t buf[4];
    std::memcpy(buf, &f, 4);
    packed.insert(packed.end(), buf, buf + 4);
  }
  std::vector<uint8_t> list;
  put_len_delim(list, 1, packed);
  std::vector<uint8_t> feature;
  put_len_delim(feature, 2, list);  // Feature.float_list
  return feature;
}

std::vector<uint8_t> encode_int64_feature(std::span<const int64_t> values) {
  std::vector<uint8_t> packed;
  for (int64_t v : values) put_varint(packed, static_cast<uint64_t>(v));
  std::vector<uint8_t> list;
  put_len_delim(list, 1, packed);
  std::vector<uint8_t> feature;
  put_len_delim(feature, 3, list);  // Feature.int64_list
  return feature;
}

std::vector<uint8_t> encode_bytes_feature(std::span<const uint8_t> value) {
  std::vector<uint8_t> list;
  put_len_delim(list, 1, value);
  std::vector<uint8_t> feature;
  put_len_delim(feature, 1, list);  // Feature.bytes_list
  return feature;
}

void put_map_entry(std::vector<uint8_t>& features, const std::string& key,
                   std::span<const uint8_t> feature) {
  std::vector<uint8_t> entry;
  put_len_delim(entry, 1, {reinterpret_cast<const uint8_t*>(key.data()), key.size()});
  put_len_delim(entry, 2, feature);
  put_len_delim(features, 1, entry);
}

}  // namespace

double dequantize(uint8_t byte) { return dequantize_range(byte, -2.0, 2.0); }

double dequantize_range(uint8_t byte, double lo, double hi) {
  return lo + (hi - lo) * static_cast<double>(byte) / 255.0;
}

uint8_t quantize_range(double v, double lo, double hi) {
  double scaled = (v - lo) / (hi - lo) * 255.0;
  double rounded = std::nearbyint(scaled);
  if (rounded < 0) rounded = 0;
  if (rounded > 255) rounded = 255;
  return static_cast<uint8_t>(rounded);
}

Example decode_example(std::span<const uint8_t> payload, DecodeMode mode,
                       double dequant_lo, double dequant_hi) {
  // Top level: Example.features = 1 and SequenceExample.context = 1 are both
  // a Features message; SequenceExample.feature_lists = 2.
  std::map<std::string, Feature> context;
  std::map<std::string, std::vector<Feature>> lists;
  Reader r{payload};
  while (!r.done()) {
    auto [field, wt] = r.tag();
    if (field == 1 && wt == kLengthDelimited) {
      for (auto& [k, v] : parse_feature_map(r.bytes()))
        context[k] = std::move(v);
    } else if (field == 2 && wt == kLengthDelimited &&
               mode == DecodeMode::kFrame) {
      for (auto& [k, v] : parse_feature_lists(r.bytes()))
        lists[k] = std::move(v);
    } else {
      r.skip(field, wt);
    }
  }

  Example ex;
  ex.video_id = read_id(context);
  ex.labels = read_labels(context);

  auto read_means = [&](VideoLevel& vl) {
    const Feature& rgb = require_key(context, "mean_rgb");
    const Feature& audio = require_key(context, "mean_audio");
    check(rgb.has_floats, "decode_example: key \"mean_rgb\" is not a float_list");
    check(audio.has_floats, "decode_example: key \"mean_audio\" is not a float_list");
    vl.mean_rgb.assign(rgb.float_list.begin(), rgb.float_list.end());
    vl.mean_audio.assign(audio.float_list.begin(), audio.float_list.end());
  };

  if (mode == DecodeMode::kVideo) {
    VideoLevel vl;
    read_means(vl);
    ex.video_level = std::move(vl);
    return ex;
  }

  auto rgb_it = lists.find("rgb");
  auto audio_it = lists.find("audio");
  check(rgb_it != lists.end(), "decode_example: missing required key \"rgb\"");
  check(audio_it != lists.end(), "decode_example: missing required key \"audio\"");
  const auto& rgb_frames = rgb_it->second;
  const auto& audio_frames = audio_it->second;
  check(!rgb_frames.empty(), "decode_example: empty rgb feature list");
  check(rgb_frames.size() == audio_frames.size(),
        "decode_example: rgb has ", rgb_frames.size(), " frames, audio has ",
        audio_frames.size());

  FrameLevel fl;
  fl.frames = static_cast<int64_t>(rgb_frames.size());
  auto decode_frames = [&](const std::vector<Feature>& frames,
                           std::vector<double>& out, int64_t& dim,
                           const char* what) {
    for (size_t t = 0; t < frames.size(); ++t) {
      check(!frames[t].bytes_list.empty(), "decode_example: frame ", t,
            " of \"", what, "\" has no bytes value");
      const auto& bytes = frames[t].bytes_list[0];
      if (t == 0) dim = static_cast<int64_t>(bytes.size());
      check(static_cast<int64_t>(bytes.size()) == dim,
            "decode_example: frame ", t, " of \"", what, "\" has ",
            bytes.size(), " bytes, expected ", dim);
      for (uint8_t b : bytes)
        out.push_back(dequantize_range(b, dequant_lo, dequant_hi));
    }
  };
  decode_frames(rgb_frames, fl.rgb, fl.rgb_dim, "rgb");
  decode_frames(audio_frames, fl.audio, fl.audio_dim, "audio");
  ex.frame_level = std::move(fl);

  // Context means, when present, also populate the video-level view.
  if (context.count("mean_rgb") && context.count("mean_audio")) {
    VideoLevel vl;
    read_means(vl);
    ex.video_level = std::move(vl);
  }
  return ex;
}

std::vector<uint8_t> encode_example(const Example& ex, double quant_lo,
                                    double quant_hi) {
  check(ex.video_level.has_value() || ex.frame_level.has_value(),
        "encode_example: example ", ex.video_id, " has no features");
  std::vector<uint8_t> context;
  put_map_entry(context, "id",
                encode_bytes_feature(
                    {reinterpret_cast<const uint8_t*>(ex.video_id.data()),
                     ex.video_id.size()}));
  put_map_entry(context, "labels", encode_int64_feature(ex.labels));
  if (ex.video_level) {
    put_map_entry(context, "mean_rgb",
                  encode_float_feature(ex.video_level->mean_rgb));
    put_map_entry(context, "mean_audio",
                  encode_float_feature(ex.video_level->mean_audio));
  }

  std::vector<uint8_t> payload;
  put_len_delim(payload, 1, context);

  if (ex.frame_level) {
    const FrameLevel& fl = *ex.frame_level;
    std::vector<uint8_t> feature_lists;
    auto encode_list = [&](const std::string& key,
                           const std::vector<double>& values, int64_t dim) {
      std::vector<uint8_t> feature_list;
      for (int64_t t = 0; t < fl.frames; ++t) {
        std::vector<uint8_t> bytes(static_cast<size_t>(dim));
        for (int64_t j = 0; j < dim; ++j)
          bytes[j] = quantize_range(values[t * dim + j], quant_lo, quant_hi);
        put_len_delim(feature_list, 1, encode_bytes_feature(bytes));
      }
      std::vector<uint8_t> entry;
      put_len_delim(entry, 1,
                    {reinterpret_cast<const uint8_t*>(key.data()), key.size()});
      put_len_delim(entry, 2, feature_list);
      put_len_delim(feature_lists, 1, entry);
    };
    encode_list("rgb", fl.rgb, fl.rgb_dim);
    encode_list("audio", fl.audio, fl.audio_dim);
    put_len_delim(payload, 2, feature_lists);
  }
  return payload;
}

}  // namespace vtag
