#include "vtag/metrics.hpp"

#include <algorithm>
#include <cmath>

namespace vtag {

namespace {

struct ScoredPrediction {
  double confidence;
  int64_t video;
  int64_t label;
};

bool is_positive(const std::vector<int64_t>& labels, int64_t label) {
  return std::binary_search(labels.begin(), labels.end(), label);
}

// Indices of the top-k entries of row, ordered by (confidence desc, label asc).
std::vector<int64_t> top_k_labels(std::span<const float> row, int64_t k) {
  std::vector<int64_t> idx(row.size());
  for (size_t i = 0; i < row.size(); ++i) idx[i] = static_cast<int64_t>(i);
  auto cmp = [&](int64_t a, int64_t b) {
    if (row[a] != row[b]) return row[a] > row[b];
    return a < b;
  };
  int64_t keep = std::min<int64_t>(k, static_cast<int64_t>(row.size()));
  std::partial_sort(idx.begin(), idx.begin() + keep, idx.end(), cmp);
  idx.resize(keep);
  return idx;
}

}  // namespace

double global_average_precision(const PredictionMatrix& preds,
                                const LabelSets& labels, int64_t top_k) {
  check(static_cast<int64_t>(labels.size()) == preds.num_examples,
        "gap: ", labels.size(), " label rows for ", preds.num_examples,
        " prediction rows");
  check(top_k > 0, "gap: top_k must be positive");

  std::vector<ScoredPrediction> pool;
  pool.reserve(static_cast<size_t>(preds.num_examples) *
               std::min<int64_t>(top_k, preds.num_labels));
  int64_t total_positives = 0;
  for (int64_t v = 0; v < preds.num_examples; ++v) {
    total_positives +=
        std::min<int64_t>(static_cast<int64_t>(labels[v].size()), top_k);
    for (int64_t l : top_k_labels(preds.row(v), top_k))
      pool.push_back({static_cast<double>(preds.at(v, l)), v, l});
  }
  check(total_positives > 0,
        "gap: undefined, no positive labels in the evaluation set");

  std::sort(pool.begin(), pool.end(), [](const ScoredPrediction& a,
                                         const ScoredPrediction& b) {
    if (a.confidence != b.confidence) return a.confidence > b.confidence;
    if (a.video != b.video) return a.video < b.video;
    return a.label < b.label;
  });

  double ap = 0.0;
  int64_t hits = 0;
  for (size_t i = 0; i < pool.size(); ++i) {
    if (is_positive(labels[pool[i].video], pool[i].label)) {
      ++hits;
      double precision = static_cast<double>(hits) / static_cast<double>(i + 1);
      ap += precision / static_cast<double>(total_positives);
    }
  }
  return ap;
}

double perr_row(std::span<const float> row,
                const std::vector<int64_t>& labels) {
  int64_t g = static_cast<int64_t>(labels.size());
  check(g > 0, "perr: example has no ground-truth labels, skip it");
  int64_t correct = 0;
  for (int64_t l : top_k_labels(row, g))
    if (is_positive(labels, l)) ++correct;
  return static_cast<double>(correct) / static_cast<double>(g);
}

int hit_at_one_row(std::span<const float> row,
                   const std::vector<int64_t>& labels) {
  check(!labels.empty(), "hit@1: example has no ground-truth labels");
  int64_t best = 0;
  for (size_t i = 1; i < row.size(); ++i)
    if (row[i] > row[best]) best = static_cast<int64_t>(i);
  return is_positive(labels, best) ? 1 : 0;
}

EvalReport evaluate(const PredictionMatrix& preds, const LabelSets& labels,
                    int64_t top_k) {
  EvalReport r;
  r.n_examples = preds.num_examples;
  r.gap = global_average_precision(preds, labels, top_k);
  double perr_sum = 0.0;
  int64_t hit_sum = 0;
  int64_t labeled = 0;
  for (int64_t v = 0; v < preds.num_examples; ++v) {
    r.n_positives += static_cast<int64_t>(labels[v].size());
    if (labels[v].empty()) continue;
    perr_sum += perr_row(preds.row(v), labels[v]);
    hit_sum += hit_at_one_row(preds.row(v), labels[v]);
    ++labeled;
  }
  if (labeled > 0) {
    r.perr = perr_sum / static_cast<double>(labeled);
    r.hit_at_one = static_cast<double>(hit_sum) / static_cast<double>(labeled);
  }
  return r;
}

std::string format_report(const EvalReport& report) {
  std::ostringstream os;
  os.precision(6);
  os << "gap=" << report.gap << "\n"
     << "perr=" << report.perr << "\n"
     << "hit_at_one=" << report.hit_at_one << "\n"
     << "n_examples=" << report.n_examples << "\n"
     << "n_positives=" << report.n_positives << "\n";
  return os.str();
}

}  // namespace vtag
