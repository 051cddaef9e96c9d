#include "vtag/adam.hpp"

#include <cmath>

namespace vtag {

AdamState::AdamState(AdamConfig cfg, const ParamList& params) : config(cfg) {
  m.reserve(params.size());
  v.reserve(params.size());
  for (const auto& p : params) {
    m.emplace_back(p.tensor->values.size(), 0.0);
    v.emplace_back(p.tensor->values.size(), 0.0);
  }
}

void adam_step(AdamState& state, const ParamList& params) {
  check(state.m.size() == params.size(),
        "adam_step: state tracks ", state.m.size(), " parameters, got ",
        params.size());
  state.step += 1;
  const AdamConfig& c = state.config;
  double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
  double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));
  for (size_t p = 0; p < params.size(); ++p) {
    Tensor& t = *params[p].tensor;
    check(t.requires_grad && t.grad.size() == t.values.size(),
          "adam_step: parameter ", params[p].name, " has no gradient");
    check(state.m[p].size() == t.values.size(),
          "adam_step: moment shape mismatch for ", params[p].name);
    auto& m = state.m[p];
    auto& v = state.v[p];
    for (size_t i = 0; i < t.values.size(); ++i) {
      double g = t.grad[i];
      check(!std::isnan(g), "adam_step: NaN gradient in parameter ",
            params[p].name);
      m[i] = c.beta1 * m[i] + (1.0 - c.beta1) * g;
      v[i] = c.beta2 * v[i] + (1.0 - c.beta2) * g * g;
      double mhat = m[i] / bc1;
      double vhat = v[i] / bc2;
      t.values[i] -= c.learning_rate * mhat / (std::sqrt(vhat) + c.epsilon);
    }
  }
}

}  // namespace vtag
