#pragma once

#include <functional>

#include "vtag/graph.hpp"

namespace vtag {

// Builds a scalar loss from the current values of some parameter set.
using LossBuilder = std::function<TensorPtr(Graph&)>;

// Compares the analytic gradient of f against central differences for every
// entry of every parameter. Returns the maximum of
//   |analytic - numeric| / max(1, |analytic|).
double grad_check(const LossBuilder& f, const ParamList& params,
                  double h = 1e-5);

}  // namespace vtag
