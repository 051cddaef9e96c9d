#include "vtag/tensor.hpp"

#include <cmath>

namespace vtag {

int64_t shape_size(const Shape& s) {
  int64_t n = 1;
  for (int64_t e : s) n *= e;
  return n;
}

std::string shape_str(const Shape& s) {
  std::string out = "[";
  for (size_t i = 0; i < s.size(); ++i) {
    if (i) out += ", ";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

TensorPtr make_tensor(Shape shape, std::vector<double> values,
                      bool requires_grad) {
  for (int64_t e : shape) check(e > 0, "tensor extents must be positive, got ", shape_str(shape));
  check(shape_size(shape) == static_cast<int64_t>(values.size()),
        "tensor shape ", shape_str(shape), " does not match ", values.size(),
        " values");
  auto t = std::make_shared<Tensor>();
  t->shape = std::move(shape);
  t->values = std::move(values);
  t->set_requires_grad(requires_grad);
  return t;
}

TensorPtr full(Shape shape, double fill, bool requires_grad) {
  std::vector<double> v(static_cast<size_t>(shape_size(shape)), fill);
  return make_tensor(std::move(shape), std::move(v), requires_grad);
}

TensorPtr zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), 0.0, requires_grad);
}

TensorPtr scalar_tensor(double v) { return make_tensor({}, {v}); }

TensorPtr xavier_param(Shape shape, Rng& rng) {
  check(!shape.empty(), "parameter needs rank >= 1");
  int64_t fan_in, fan_out;
  if (shape.size() == 1) {
    fan_in = fan_out = shape[0];
  } else {
    fan_in = shape[shape.size() - 2];
    fan_out = shape[shape.size() - 1];
  }
  double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::vector<double> v(static_cast<size_t>(shape_size(shape)));
  for (double& x : v) x = rng.uniform(-bound, bound);
  return make_tensor(std::move(shape), std::move(v), true);
}

TensorPtr zeros_param(Shape shape) { return zeros(std::move(shape), true); }

int64_t param_count(const ParamList& params) {
  int64_t n = 0;
  for (const auto& p : params) n += p.tensor->size();
  return n;
}

void zero_all_grads(const ParamList& params) {
  for (const auto& p : params) p.tensor->zero_grad();
}

}  // namespace vtag
