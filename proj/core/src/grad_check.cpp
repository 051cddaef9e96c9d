#include "vtag/grad_check.hpp"

#include <cmath>

namespace vtag {

double grad_check(const LossBuilder& f, const ParamList& params, double h) {
  check(h > 0, "grad_check: step must be positive");
  std::vector<std::vector<double>> analytic;
  {
    Graph g;
    TensorPtr loss = f(g);
    g.backward(loss);
    for (const auto& p : params) analytic.push_back(p.tensor->grad);
  }
  auto eval = [&]() {
    Graph g;
    return f(g)->scalar_value();
  };
  double worst = 0.0;
  for (size_t p = 0; p < params.size(); ++p) {
    Tensor& t = *params[p].tensor;
    for (size_t i = 0; i < t.values.size(); ++i) {
      double saved = t.values[i];
      t.values[i] = saved + h;
      double up = eval();
      t.values[i] = saved - h;
      double down = eval();
      t.values[i] = saved;
      double numeric = (up - down) / (2.0 * h);
      double a = analytic[p][i];
      double err = std::fabs(a - numeric) / std::max(1.0, std::fabs(a));
      worst = std::max(worst, err);
    }
  }
  return worst;
}

}  // namespace vtag
