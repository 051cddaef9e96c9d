#include "vtag/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>

namespace vtag {

namespace {

void put_u16(std::string& out, uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}

void put_u32(std::string& out, uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f64(std::string& out, double v) {
  uint64_t bits;
  std::memcpy(&bits, &v, 8);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

struct Cursor {
  const std::string& data;
  size_t pos = 0;

  void need(size_t n, const char* what) {
    check(pos + n <= data.size(), "checkpoint truncated at offset ", pos,
          " while reading ", what);
  }
  uint8_t u8(const char* what) {
    need(1, what);
    return static_cast<uint8_t>(data[pos++]);
  }
  uint16_t u16(const char* what) {
    need(2, what);
    uint16_t v = static_cast<uint8_t>(data[pos]) |
                 (static_cast<uint16_t>(static_cast<uint8_t>(data[pos + 1])) << 8);
    pos += 2;
    return v;
  }
  uint32_t u32(const char* what) {
    need(4, what);
    uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<uint32_t>(static_cast<uint8_t>(data[pos + i])) << (8 * i);
    pos += 4;
    return v;
  }
  double f64(const char* what) {
    need(8, what);
    uint64_t bits = 0;
    for (int i = 0; i < 8; ++i)
      bits |= static_cast<uint64_t>(static_cast<uint8_t>(data[pos + i])) << (8 * i);
    pos += 8;
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }
  std::string bytes(size_t n, const char* what) {
    need(n, what);
    std::string s = data.substr(pos, n);
    pos += n;
    return s;
  }
};

}  // namespace

void save_checkpoint(const std::string& path, const ParamList& params) {
  std::string out;
  out += "CSTK";
  put_u32(out, kCheckpointVersion);
  put_u32(out, static_cast<uint32_t>(params.size()));
  for (const auto& p : params) {
    const Tensor& t = *p.tensor;
    check(p.name.size() <= 0xffff, "parameter name too long: ", p.name);
    put_u16(out, static_cast<uint16_t>(p.name.size()));
    out += p.name;
    check(t.shape.size() <= 0xff, "parameter rank too large: ", p.name);
    out.push_back(static_cast<char>(t.shape.size()));
    for (int64_t e : t.shape) put_u32(out, static_cast<uint32_t>(e));
    for (double v : t.values) put_f64(out, v);
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  check(f.good(), "cannot open checkpoint for writing: ", path);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  check(f.good(), "failed writing checkpoint: ", path);
}

ParamList load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  check(f.good(), "cannot open checkpoint: ", path);
  std::string data((std::istreambuf_iterator<char>(f)),
                   std::istreambuf_iterator<char>());
  Cursor c{data};
  check(c.bytes(4, "magic") == "CSTK", "not a checkpoint file (bad magic): ",
        path);
  uint32_t version = c.u32("version");
  check(version == kCheckpointVersion, "unsupported checkpoint version ",
        version, " at offset 4 in ", path);
  uint32_t count = c.u32("count");
  ParamList params;
  params.reserve(count);
  for (uint32_t i = 0; i < count; ++i) {
    uint16_t name_len = c.u16("name length");
    std::string name = c.bytes(name_len, "name");
    uint8_t rank = c.u8("rank");
    Shape shape(rank);
    for (auto& e : shape) e = c.u32("extent");
    int64_t n = shape_size(shape);
    std::vector<double> values(static_cast<size_t>(n));
    for (auto& v : values) v = c.f64("value");
    params.push_back({std::move(name), make_tensor(std::move(shape), std::move(values))});
  }
  check(c.pos == data.size(), "trailing bytes at offset ", c.pos, " in ", path);
  return params;
}

void restore_checkpoint(const std::string& path, const ParamList& params) {
  ParamList loaded = load_checkpoint(path);
  std::map<std::string, const NamedParam*> by_name;
  for (const auto& p : loaded) by_name[p.name] = &p;
  check(loaded.size() == params.size(), "checkpoint ", path, " holds ",
        loaded.size(), " parameters, model expects ", params.size());
  for (const auto& p : params) {
    auto it = by_name.find(p.name);
    check(it != by_name.end(), "checkpoint ", path, " is missing parameter ",
          p.name);
    const Tensor& src = *it->second->tensor;
    check(src.shape == p.tensor->shape, "checkpoint shape mismatch for ",
          p.name, ": file has ", shape_str(src.shape), ", model expects ",
          shape_str(p.tensor->shape));
    p.tensor->values = src.values;
  }
}

}  // namespace vtag
