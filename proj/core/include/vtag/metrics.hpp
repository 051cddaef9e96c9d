#pragma once

#include "vtag/prediction_matrix.hpp"

namespace vtag {

// Label sets per example, aligned with prediction matrix rows.
using LabelSets = std::vector<std::vector<int64_t>>;

// Global Average Precision at top_k: per video the top_k most confident
// (label, confidence) pairs enter one global list, sorted by confidence
// descending (ties: video index, then label index ascending), and the list's
// average precision is returned. Each video's positives count toward recall
// capped at top_k, so a perfect predictor scores exactly 1.
double global_average_precision(const PredictionMatrix& preds,
                                const LabelSets& labels, int64_t top_k = 20);

// Precision-equal-recall rate for one example: with g ground-truth labels,
// the fraction of the top-g predictions that are correct. Fails when g == 0
// (callers skip those examples).
double perr_row(std::span<const float> row, const std::vector<int64_t>& labels);

// 1 iff the most confident label (ties: lowest label index) is correct.
int hit_at_one_row(std::span<const float> row,
                   const std::vector<int64_t>& labels);

struct EvalReport {
  double gap = 0.0;
  double perr = 0.0;
  double hit_at_one = 0.0;
  int64_t n_examples = 0;
  int64_t n_positives = 0;
};

// Zero-label examples are excluded from the PERR and Hit@1 aggregates but
// still contribute their predictions to GAP.
EvalReport evaluate(const PredictionMatrix& preds, const LabelSets& labels,
                    int64_t top_k = 20);

std::string format_report(const EvalReport& report);

}  // namespace vtag
