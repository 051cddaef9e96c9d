#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "vtag/common.hpp"

namespace vtag {

// Five-way partition of a shard set by file-name pattern:
//   train??      -> train1     (single-model training)
//   validate a?  -> validate1  (single-model early stopping)
//   validate ??  -> train2     (ensemble training; first char not 'a'/digit)
//   validate 0-9?-> validate2  (ensemble early stopping)
//   test??       -> test
enum class DatasetPart { kTrain1, kValidate1, kTrain2, kValidate2, kTest };

inline constexpr std::array<DatasetPart, 5> kAllParts = {
    DatasetPart::kTrain1, DatasetPart::kValidate1, DatasetPart::kTrain2,
    DatasetPart::kValidate2, DatasetPart::kTest};

const char* part_name(DatasetPart part);
std::optional<DatasetPart> parse_part_name(const std::string& name);

// Classification of a single file name (directories and extension ignored);
// nullopt when no rule matches.
std::optional<DatasetPart> classify_file(const std::string& name);

struct SplitResult {
  std::array<std::vector<std::string>, 5> parts;  // indexed by DatasetPart
  std::vector<std::string> rejects;

  std::vector<std::string>& part(DatasetPart p) {
    return parts[static_cast<size_t>(p)];
  }
  const std::vector<std::string>& part(DatasetPart p) const {
    return parts[static_cast<size_t>(p)];
  }
};

SplitResult split_files(const std::vector<std::string>& names);

}  // namespace vtag
