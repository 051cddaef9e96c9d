#include "vtag/prediction_matrix.hpp"

#include <cstring>
#include <fstream>

namespace vtag {

namespace {

void put_u32(std::ofstream& f, uint32_t v) {
  char buf[4];
  for (int i = 0; i < 4; ++i) buf[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  f.write(buf, 4);
}

uint32_t get_u32(std::ifstream& f, const std::string& path, const char* what) {
  unsigned char buf[4];
  f.read(reinterpret_cast<char*>(buf), 4);
  check(f.gcount() == 4, "prediction matrix ", path, ": truncated ", what);
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(buf[i]) << (8 * i);
  return v;
}

}  // namespace

void save_prediction_matrix(const std::string& path,
                            const PredictionMatrix& m) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  check(f.good(), "cannot open prediction matrix for writing: ", path);
  f.write("PRED", 4);
  put_u32(f, kPredictionMatrixVersion);
  put_u32(f, static_cast<uint32_t>(m.num_examples));
  put_u32(f, static_cast<uint32_t>(m.num_labels));
  for (float v : m.values) {
    uint32_t bits;
    std::memcpy(&bits, &v, 4);
    put_u32(f, bits);
  }
  check(f.good(), "failed writing prediction matrix: ", path);
}

PredictionMatrix load_prediction_matrix(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  check(f.good(), "cannot open prediction matrix: ", path);
  char magic[4];
  f.read(magic, 4);
  check(f.gcount() == 4 && std::memcmp(magic, "PRED", 4) == 0,
        "not a prediction matrix (bad magic): ", path);
  uint32_t version = get_u32(f, path, "version");
  check(version == kPredictionMatrixVersion,
        "unsupported prediction matrix version ", version, " in ", path);
  PredictionMatrix m;
  m.num_examples = get_u32(f, path, "example count");
  m.num_labels = get_u32(f, path, "label count");
  m.values.resize(static_cast<size_t>(m.num_examples * m.num_labels));
  for (float& v : m.values) {
    uint32_t bits = get_u32(f, path, "values");
    std::memcpy(&v, &bits, 4);
  }
  return m;
}

void save_manifest(const std::string& matrix_path,
                   const PredictionManifest& m) {
  std::ofstream f(matrix_path + ".manifest", std::ios::trunc);
  check(f.good(), "cannot write manifest for ", matrix_path);
  f << "model=" << m.model_name << "\n"
    << "checkpoint=" << m.source_checkpoint << "\n"
    << "part=" << m.dataset_part << "\n"
    << "gap=" << m.gap << "\n";
}

}  // namespace vtag
