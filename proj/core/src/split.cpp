#include "vtag/split.hpp"

namespace vtag {

const char* part_name(DatasetPart part) {
  switch (part) {
    case DatasetPart::kTrain1: return "train1";
    case DatasetPart::kValidate1: return "validate1";
    case DatasetPart::kTrain2: return "train2";
    case DatasetPart::kValidate2: return "validate2";
    case DatasetPart::kTest: return "test";
  }
  return "?";
}

std::optional<DatasetPart> parse_part_name(const std::string& name) {
  for (DatasetPart p : kAllParts)
    if (name == part_name(p)) return p;
  return std::nullopt;
}

std::optional<DatasetPart> classify_file(const std::string& name) {
  size_t slash = name.find_last_of('/');
  std::string base = slash == std::string::npos ? name : name.substr(slash + 1);
  size_t dot = base.find('.');
  std::string stem = dot == std::string::npos ? base : base.substr(0, dot);

  auto suffix_after = [&](const std::string& prefix) -> std::optional<std::string> {
    if (stem.size() == prefix.size() + 2 && stem.compare(0, prefix.size(), prefix) == 0)
      return stem.substr(prefix.size());
    return std::nullopt;
  };

  if (suffix_after("train")) return DatasetPart::kTrain1;
  if (suffix_after("test")) return DatasetPart::kTest;
  if (auto s = suffix_after("validate")) {
    char c = (*s)[0];
    if (c == 'a') return DatasetPart::kValidate1;
    if (c >= '0' && c <= '9') return DatasetPart::kValidate2;
    return DatasetPart::kTrain2;
  }
  return std::nullopt;
}

SplitResult split_files(const std::vector<std::string>& names) {
  SplitResult result;
  for (const auto& name : names) {
    if (auto part = classify_file(name))
      result.part(*part).push_back(name);
    else
      result.rejects.push_back(name);
  }
  return result;
}

}  // namespace vtag
