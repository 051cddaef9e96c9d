#pragma once

#include <vector>

#include "vtag/example.hpp"

namespace vtag {

// Synthetic correlated-label dataset generator. Labels come from a Gaussian
// copula thresholded against the marginal rate, so co-occurrence follows the
// given correlation matrix in sign. Each active label stamps its prototype
// onto a random contiguous window of the frame sequence; video-level features
// are the exact frame means.
struct SynthSpec {
  uint64_t seed = 1;
  int64_t num_examples = 1000;
  int64_t num_labels = 25;
  int64_t rgb_dim = 32;
  int64_t audio_dim = 8;
  int64_t max_frames = 30;
  // L x L row-major, symmetric, unit diagonal, entries in [-1, 1].
  // Empty means identity (independent labels).
  std::vector<double> correlation;
  double mean_labels_per_example = 3.4;
  // L x rgb_dim / L x audio_dim; empty means drawn from the seed.
  std::vector<double> rgb_prototypes;
  std::vector<double> audio_prototypes;
  double prototype_scale = 1.0;
  // Evidence window length range, clamped to the sequence length.
  int64_t window_min_frames = 3;
  int64_t window_max_frames = 30;
  double noise_level = 0.1;
};

struct SynthDataset {
  SynthSpec spec;
  std::vector<Example> examples;
};

// Convenience: identity correlation with disjoint pairs (0,1), (2,3), ...
// raised to r.
std::vector<double> pairwise_correlation(int64_t num_labels, double r);

SynthDataset synth_generate(const SynthSpec& spec);

// Standard normal inverse CDF (Acklam's rational approximation).
double inverse_normal_cdf(double p);

}  // namespace vtag
