#pragma once

#include "vtag/tensor.hpp"

namespace vtag {

struct AdamConfig {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Per-parameter first/second moment accumulators, shape-congruent with the
// parameters they track.
struct AdamState {
  AdamConfig config;
  int64_t step = 0;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;

  AdamState(AdamConfig cfg, const ParamList& params);
};

// Standard Adam update with bias correction, applied in place. Gradients are
// read from each parameter's grad buffer.
void adam_step(AdamState& state, const ParamList& params);

}  // namespace vtag
