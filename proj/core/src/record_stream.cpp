#include "vtag/record_stream.hpp"

#include <array>
#include <fstream>

namespace vtag {

namespace {

std::array<uint32_t, 256> make_crc_table() {
  std::array<uint32_t, 256> table{};
  for (uint32_t i = 0; i < 256; ++i) {
    uint32_t c = i;
    for (int k = 0; k < 8; ++k)
      c = (c & 1) ? (0x82f63b78u ^ (c >> 1)) : (c >> 1);
    table[i] = c;
  }
  return table;
}

const std::array<uint32_t, 256>& crc_table() {
  static const auto table = make_crc_table();
  return table;
}

uint32_t le32(const uint8_t* p) {
  return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
         (static_cast<uint32_t>(p[2]) << 16) |
         (static_cast<uint32_t>(p[3]) << 24);
}

uint64_t le64(const uint8_t* p) {
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(p[i]) << (8 * i);
  return v;
}

void append_le32(std::vector<uint8_t>& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

void append_le64(std::vector<uint8_t>& out, uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<uint8_t>(v >> (8 * i)));
}

}  // namespace

uint32_t crc32c(std::span<const uint8_t> data) {
  const auto& table = crc_table();
  uint32_t c = 0xffffffffu;
  for (uint8_t b : data) c = table[(c ^ b) & 0xff] ^ (c >> 8);
  return c ^ 0xffffffffu;
}

uint32_t crc32c_mask(uint32_t crc) {
  return ((crc >> 15) | (crc << 17)) + 0xa282ead8u;
}

std::vector<std::vector<uint8_t>> parse_record_stream(
    std::span<const uint8_t> bytes) {
  std::vector<std::vector<uint8_t>> payloads;
  size_t pos = 0;
  size_t index = 0;
  while (pos < bytes.size()) {
    check(bytes.size() - pos >= 12, "truncated record header at byte offset ",
          pos);
    uint64_t length = le64(bytes.data() + pos);
    uint32_t stored_len_crc = le32(bytes.data() + pos + 8);
    uint32_t expect_len_crc =
        crc32c_mask(crc32c(bytes.subspan(pos, 8)));
    check(stored_len_crc == expect_len_crc, "record ", index,
          ": length CRC mismatch");
    pos += 12;
    check(bytes.size() - pos >= length + 4,
          "truncated record payload at byte offset ", pos);
    auto payload = bytes.subspan(pos, length);
    uint32_t stored_crc = le32(bytes.data() + pos + length);
    uint32_t expect_crc = crc32c_mask(crc32c(payload));
    check(stored_crc == expect_crc, "record ", index,
          ": payload CRC mismatch");
    payloads.emplace_back(payload.begin(), payload.end());
    pos += length + 4;
    ++index;
  }
  return payloads;
}

std::vector<uint8_t> write_record_stream(
    const std::vector<std::vector<uint8_t>>& payloads) {
  std::vector<uint8_t> out;
  for (const auto& p : payloads) {
    std::vector<uint8_t> header;
    append_le64(header, p.size());
    out.insert(out.end(), header.begin(), header.end());
    append_le32(out, crc32c_mask(crc32c(header)));
    out.insert(out.end(), p.begin(), p.end());
    append_le32(out, crc32c_mask(crc32c(p)));
  }
  return out;
}

std::vector<uint8_t> read_file_bytes(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  check(f.good(), "cannot open file: ", path);
  std::vector<uint8_t> data((std::istreambuf_iterator<char>(f)),
                            std::istreambuf_iterator<char>());
  return data;
}

void write_file_bytes(const std::string& path,
                      std::span<const uint8_t> bytes) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  check(f.good(), "cannot open file for writing: ", path);
  f.write(reinterpret_cast<const char*>(bytes.data()),
          static_cast<std::streamsize>(bytes.size()));
  check(f.good(), "failed writing file: ", path);
}

}  // namespace vtag
