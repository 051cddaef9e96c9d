#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "vtag/common.hpp"

namespace vtag {

// CRC32C (Castagnoli), reflected polynomial 0x82f63b78.
uint32_t crc32c(std::span<const uint8_t> data);
// Mask used by the record framing: rotate right by 15 plus a constant.
uint32_t crc32c_mask(uint32_t crc);

// Record framing, per record:
//   length        u64 little-endian
//   masked crc32c of the length bytes   u32
//   payload bytes
//   masked crc32c of the payload        u32
std::vector<std::vector<uint8_t>> parse_record_stream(
    std::span<const uint8_t> bytes);
std::vector<uint8_t> write_record_stream(
    const std::vector<std::vector<uint8_t>>& payloads);

std::vector<uint8_t> read_file_bytes(const std::string& path);
void write_file_bytes(const std::string& path,
                      std::span<const uint8_t> bytes);

}  // namespace vtag
