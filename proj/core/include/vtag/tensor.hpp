#pragma once

#include <algorithm>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "vtag/common.hpp"

namespace vtag {

// Row-major dense tensor. A rank-0 shape holds exactly one value (a scalar).
using Shape = std::vector<int64_t>;

int64_t shape_size(const Shape& s);
std::string shape_str(const Shape& s);

struct Tensor {
  Shape shape;
  std::vector<double> values;
  std::vector<double> grad;  // same length as values iff requires_grad
  bool requires_grad = false;

  int64_t size() const { return static_cast<int64_t>(values.size()); }
  bool is_scalar() const { return values.size() == 1; }
  double scalar_value() const {
    check(is_scalar(), "expected scalar tensor, got shape ", shape_str(shape));
    return values[0];
  }
  void set_requires_grad(bool on) {
    requires_grad = on;
    grad.assign(on ? values.size() : 0, 0.0);
  }
  void zero_grad() { std::fill(grad.begin(), grad.end(), 0.0); }
};

using TensorPtr = std::shared_ptr<Tensor>;

TensorPtr make_tensor(Shape shape, std::vector<double> values,
                      bool requires_grad = false);
TensorPtr full(Shape shape, double fill, bool requires_grad = false);
TensorPtr zeros(Shape shape, bool requires_grad = false);
TensorPtr scalar_tensor(double v);

// Xavier/Glorot uniform init over the last two extents (fan_in, fan_out);
// rank-1 tensors use fan_in = extent.
TensorPtr xavier_param(Shape shape, Rng& rng);
TensorPtr zeros_param(Shape shape);

struct NamedParam {
  std::string name;
  TensorPtr tensor;
};
using ParamList = std::vector<NamedParam>;

int64_t param_count(const ParamList& params);
void zero_all_grads(const ParamList& params);

}  // namespace vtag
