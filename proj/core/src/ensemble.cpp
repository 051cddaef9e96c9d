#include "vtag/ensemble.hpp"

#include <cmath>

namespace vtag {

std::vector<int64_t> bootstrap_sample(int64_t n, uint64_t seed) {
  check(n >= 1, "bootstrap_sample: n must be >= 1");
  Rng rng(seed);
  std::vector<int64_t> out(static_cast<size_t>(n));
  for (auto& v : out) v = rng.uniform_index(n);
  return out;
}

SampleWeights boosting_update(const SampleWeights& weights,
                              const std::vector<double>& per_example_err,
                              double alpha, double clip) {
  const int64_t n = static_cast<int64_t>(weights.w.size());
  check(n >= 1, "boosting_update: empty weight vector");
  check(static_cast<int64_t>(per_example_err.size()) == n,
        "boosting_update: ", per_example_err.size(), " errors for ", n,
        " weights");
  check(clip >= 1.0, "boosting_update: clip ceiling must be >= 1");

  double mean_err = 0.0;
  for (double e : per_example_err) {
    check(e >= 0.0 && e <= 1.0, "boosting_update: error ", e,
          " outside [0, 1]");
    mean_err += e;
  }
  mean_err /= static_cast<double>(n);
  check(mean_err > 0.0 && mean_err < 1.0,
        "boosting terminated: round mean error ", mean_err,
        " makes the log-odds infinite");

  double r = std::log((1.0 - mean_err) / mean_err);
  SampleWeights next;
  next.round = weights.round + 1;
  next.w.resize(static_cast<size_t>(n));
  double z = 0.0;
  for (int64_t i = 0; i < n; ++i) {
    next.w[i] = weights.w[i] * std::exp(alpha * r * per_example_err[i]);
    z += next.w[i];
  }
  double target = static_cast<double>(n);
  for (double& w : next.w) w *= target / z;

  // Clip at the ceiling, redistributing the excess over unclipped entries so
  // the total returns to N without pushing anything back over the ceiling.
  std::vector<bool> fixed(static_cast<size_t>(n), false);
  while (true) {
    double fixed_mass = 0.0;
    double free_mass = 0.0;
    for (int64_t i = 0; i < n; ++i) {
      if (fixed[i])
        fixed_mass += clip;
      else
        free_mass += next.w[i];
    }
    if (free_mass <= 0.0) {  // only reachable when clip == 1 exactly
      for (int64_t i = 0; i < n; ++i) next.w[i] = clip;
      break;
    }
    double scale = (target - fixed_mass) / free_mass;
    bool newly_fixed = false;
    for (int64_t i = 0; i < n; ++i) {
      if (!fixed[i] && next.w[i] * scale > clip) {
        fixed[i] = true;
        newly_fixed = true;
      }
    }
    if (!newly_fixed) {
      for (int64_t i = 0; i < n; ++i)
        next.w[i] = fixed[i] ? clip : next.w[i] * scale;
      break;
    }
  }
  return next;
}

}  // namespace vtag
