#pragma once

#include "vtag/prediction_matrix.hpp"

namespace vtag {

// Competition-style CSV: header "VideoId,LabelConfidencePairs", then one row
// per video with the top-k "label confidence" pairs in descending confidence
// (ties broken toward the lowest label index), confidences printed with six
// digits after the decimal point. Duplicate video ids fail.
void write_submission(const std::string& path, const PredictionMatrix& preds,
                      const std::vector<std::string>& ids, int64_t top_k = 20);

struct SubmissionRow {
  std::string video_id;
  std::vector<std::pair<int64_t, double>> pairs;
};

std::vector<SubmissionRow> read_submission(const std::string& path);

}  // namespace vtag
