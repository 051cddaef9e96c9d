#pragma once

#include "vtag/common.hpp"

#include <cstdint>
#include <vector>

namespace vtag {

// n uniform draws with replacement from [0, n), deterministic per seed.
std::vector<int64_t> bootstrap_sample(int64_t n, uint64_t seed);

// Per-example boosting weights; mean stays 1 after every update.
struct SampleWeights {
  std::vector<double> w;
  int64_t round = 0;

  static SampleWeights initial(int64_t n) {
    return SampleWeights{std::vector<double>(n, 1.0), 0};
  }
};

// Multiplicative reweighting that raises the weight of badly classified
// examples: w' = (N / Z) * w * exp(alpha * r * err) with r the log-odds of
// the round's mean error, then clipping at the ceiling and redistributing the
// clipped-off mass so the total stays N without breaching the ceiling.
// Fails when the mean error is 0 or 1 (degenerate round, boosting terminates).
SampleWeights boosting_update(const SampleWeights& weights,
                              const std::vector<double>& per_example_err,
                              double alpha = 1.0, double clip = 5.0);

}  // namespace vtag
