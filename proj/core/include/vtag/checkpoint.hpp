#pragma once

#include <string>

#include "vtag/tensor.hpp"

namespace vtag {

// Checkpoint file layout: magic "CSTK", format version u32, count u32, then
// per parameter {name length u16, UTF-8 name, rank u8, extents as u32s,
// values as little-endian f64s}. Round trips are bit-exact.
inline constexpr uint32_t kCheckpointVersion = 1;

void save_checkpoint(const std::string& path, const ParamList& params);

// Loads into freshly allocated tensors (requires_grad off).
ParamList load_checkpoint(const std::string& path);

// Loads and copies values into an existing parameter list. Every destination
// parameter must be present with an identical shape; extras in the file fail.
void restore_checkpoint(const std::string& path, const ParamList& params);

}  // namespace vtag
