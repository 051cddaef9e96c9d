#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "vtag/common.hpp"

namespace vtag {

struct VideoLevel {
  std::vector<double> mean_rgb;
  std::vector<double> mean_audio;
};

// Frame features, row-major frames x dim.
struct FrameLevel {
  int64_t frames = 0;
  int64_t rgb_dim = 0;
  int64_t audio_dim = 0;
  std::vector<double> rgb;
  std::vector<double> audio;

  std::span<const double> rgb_frame(int64_t t) const {
    return {rgb.data() + t * rgb_dim, static_cast<size_t>(rgb_dim)};
  }
  std::span<const double> audio_frame(int64_t t) const {
    return {audio.data() + t * audio_dim, static_cast<size_t>(audio_dim)};
  }
};

struct Example {
  std::string video_id;
  std::vector<int64_t> labels;  // sorted, unique
  std::optional<VideoLevel> video_level;
  std::optional<FrameLevel> frame_level;
};

enum class DecodeMode { kVideo, kFrame };

// Frame features travel quantized to one byte; [-2, 2] is the dequantization
// range convention for this feature family (configurable at the dataset
// loader level, see DatasetOptions).
double dequantize(uint8_t byte);
double dequantize_range(uint8_t byte, double lo, double hi);
uint8_t quantize_range(double v, double lo, double hi);

// Decodes the protobuf-wire-format subset: video mode reads an Example-style
// payload (features -> feature map with mean_rgb/mean_audio/labels and
// video_id or id); frame mode reads a SequenceExample-style payload (context
// labels/id and feature_lists rgb/audio holding per-frame quantized bytes).
// Unknown fields and keys are skipped.
Example decode_example(std::span<const uint8_t> payload, DecodeMode mode,
                       double dequant_lo = -2.0, double dequant_hi = 2.0);

// Encodes a SequenceExample-style payload whose context carries id, labels
// and (when present) mean_rgb/mean_audio, and whose feature_lists carry the
// quantized frame features. Because context and Example.features share field
// number 1, the same payload decodes in both modes.
std::vector<uint8_t> encode_example(const Example& ex, double quant_lo = -2.0,
                                    double quant_hi = 2.0);

}  // namespace vtag
