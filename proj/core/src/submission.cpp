#include "vtag/submission.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace vtag {

void write_submission(const std::string& path, const PredictionMatrix& preds,
                      const std::vector<std::string>& ids, int64_t top_k) {
  check(static_cast<int64_t>(ids.size()) == preds.num_examples,
        "submission: ", ids.size(), " ids for ", preds.num_examples, " rows");
  std::set<std::string> seen;
  for (const auto& id : ids)
    check(seen.insert(id).second, "submission: duplicate video id \"", id, "\"");

  std::ofstream f(path, std::ios::trunc);
  check(f.good(), "cannot open submission for writing: ", path);
  f << "VideoId,LabelConfidencePairs\n";
  int64_t k = std::min<int64_t>(top_k, preds.num_labels);
  std::vector<int64_t> idx(static_cast<size_t>(preds.num_labels));
  for (int64_t v = 0; v < preds.num_examples; ++v) {
    auto row = preds.row(v);
    for (size_t i = 0; i < idx.size(); ++i) idx[i] = static_cast<int64_t>(i);
    std::partial_sort(idx.begin(), idx.begin() + k, idx.end(),
                      [&](int64_t a, int64_t b) {
                        if (row[a] != row[b]) return row[a] > row[b];
                        return a < b;
                      });
    f << ids[v] << ',';
    for (int64_t i = 0; i < k; ++i) {
      char buf[40];
      std::snprintf(buf, sizeof buf, "%lld %.6f",
                    static_cast<long long>(idx[i]),
                    static_cast<double>(row[idx[i]]));
      if (i) f << ' ';
      f << buf;
    }
    f << '\n';
  }
  check(f.good(), "failed writing submission: ", path);
}

std::vector<SubmissionRow> read_submission(const std::string& path) {
  std::ifstream f(path);
  check(f.good(), "cannot open submission: ", path);
  std::string line;
  check(static_cast<bool>(std::getline(f, line)), "empty submission: ", path);
  check(line == "VideoId,LabelConfidencePairs", "bad submission header: ", line);
  std::vector<SubmissionRow> rows;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    size_t comma = line.find(',');
    check(comma != std::string::npos, "bad submission row: ", line);
    SubmissionRow row;
    row.video_id = line.substr(0, comma);
    std::istringstream rest(line.substr(comma + 1));
    int64_t label;
    double conf;
    while (rest >> label >> conf) row.pairs.push_back({label, conf});
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace vtag
