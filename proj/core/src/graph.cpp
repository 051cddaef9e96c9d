#include "vtag/graph.hpp"

#include <cmath>

namespace vtag {

namespace {

constexpr double kL2NormFloor = 1e-12;

struct AxisSplit {
  int64_t outer;
  int64_t n;
  int64_t inner;
};

AxisSplit axis_split(const Shape& s, int64_t axis) {
  AxisSplit sp{1, s[axis], 1};
  for (int64_t i = 0; i < axis; ++i) sp.outer *= s[i];
  for (size_t i = axis + 1; i < s.size(); ++i) sp.inner *= s[i];
  return sp;
}

void require_axis(Op op, const Shape& s, int64_t axis) {
  check(!s.empty() && axis >= 0 && axis < static_cast<int64_t>(s.size()),
        op_name(op), ": axis ", axis, " out of range for shape ",
        shape_str(s));
}

void require_same_shape(Op op, const Tensor& a, const Tensor& b) {
  check(a.shape == b.shape, op_name(op), ": shape mismatch ",
        shape_str(a.shape), " vs ", shape_str(b.shape));
}

double sigmoid_scalar(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

const char* op_name(Op op) {
  switch (op) {
    case Op::kMatmul: return "matmul";
    case Op::kAdd: return "add";
    case Op::kSub: return "sub";
    case Op::kMul: return "elementwise-mul";
    case Op::kConcat: return "concat";
    case Op::kSigmoid: return "sigmoid";
    case Op::kTanh: return "tanh";
    case Op::kRelu: return "relu";
    case Op::kSoftmax: return "softmax";
    case Op::kL2Normalize: return "l2-normalize";
    case Op::kMean: return "mean";
    case Op::kMax: return "max";
    case Op::kSlice: return "slice";
    case Op::kReshape: return "reshape";
    case Op::kEmbeddingLookup: return "embedding-lookup";
    case Op::kClip: return "clip";
    case Op::kLog: return "log";
    case Op::kCrossEntropyWithLogits: return "cross-entropy-with-logits";
    case Op::kBroadcastAddBias: return "broadcast-add-bias";
  }
  return "?";
}

TensorPtr Graph::apply(Op op, const std::vector<TensorPtr>& inputs,
                       const OpAttrs& attrs) {
  check(!inputs.empty(), op_name(op), ": no inputs");
  Shape out_shape;
  std::vector<double> out;

  switch (op) {
    case Op::kMatmul: {
      check(inputs.size() == 2, "matmul: expects 2 inputs");
      const Tensor& a = *inputs[0];
      const Tensor& b = *inputs[1];
      check(a.shape.size() == 2 && b.shape.size() == 2 &&
                a.shape[1] == b.shape[0],
            "matmul: incompatible shapes ", shape_str(a.shape), " and ",
            shape_str(b.shape));
      int64_t m = a.shape[0], k = a.shape[1], n = b.shape[1];
      out_shape = {m, n};
      out.assign(static_cast<size_t>(m * n), 0.0);
      for (int64_t i = 0; i < m; ++i) {
        const double* arow = a.values.data() + i * k;
        double* orow = out.data() + i * n;
        for (int64_t kk = 0; kk < k; ++kk) {
          double av = arow[kk];
          if (av == 0.0) continue;
          const double* brow = b.values.data() + kk * n;
          for (int64_t j = 0; j < n; ++j) orow[j] += av * brow[j];
        }
      }
      break;
    }
    case Op::kAdd:
    case Op::kSub:
    case Op::kMul: {
      check(inputs.size() == 2, op_name(op), ": expects 2 inputs");
      const Tensor& a = *inputs[0];
      const Tensor& b = *inputs[1];
      require_same_shape(op, a, b);
      out_shape = a.shape;
      out.resize(a.values.size());
      if (op == Op::kAdd)
        for (size_t i = 0; i < out.size(); ++i) out[i] = a.values[i] + b.values[i];
      else if (op == Op::kSub)
        for (size_t i = 0; i < out.size(); ++i) out[i] = a.values[i] - b.values[i];
      else
        for (size_t i = 0; i < out.size(); ++i) out[i] = a.values[i] * b.values[i];
      break;
    }
    case Op::kConcat: {
      const Shape& first = inputs[0]->shape;
      require_axis(op, first, attrs.axis);
      int64_t total = 0;
      for (const auto& t : inputs) {
        const Shape& s = t->shape;
        check(s.size() == first.size(), "concat: rank mismatch ",
              shape_str(s), " vs ", shape_str(first));
        for (size_t d = 0; d < s.size(); ++d) {
          if (static_cast<int64_t>(d) == attrs.axis) continue;
          check(s[d] == first[d], "concat: shape mismatch ", shape_str(s),
                " vs ", shape_str(first), " on axis ", d);
        }
        total += s[attrs.axis];
      }
      out_shape = first;
      out_shape[attrs.axis] = total;
      out.resize(static_cast<size_t>(shape_size(out_shape)));
      auto sp = axis_split(out_shape, attrs.axis);
      int64_t dst_block = sp.n * sp.inner;
      for (int64_t o = 0; o < sp.outer; ++o) {
        int64_t off = 0;
        for (const auto& t : inputs) {
          int64_t nb = t->shape[attrs.axis] * sp.inner;
          const double* src = t->values.data() + o * nb;
          double* dst = out.data() + o * dst_block + off;
          std::copy(src, src + nb, dst);
          off += nb;
        }
      }
      break;
    }
    case Op::kSigmoid:
    case Op::kTanh:
    case Op::kRelu:
    case Op::kLog:
    case Op::kClip: {
      const Tensor& x = *inputs[0];
      out_shape = x.shape;
      out.resize(x.values.size());
      switch (op) {
        case Op::kSigmoid:
          for (size_t i = 0; i < out.size(); ++i) out[i] = sigmoid_scalar(x.values[i]);
          break;
        case Op::kTanh:
          for (size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(x.values[i]);
          break;
        case Op::kRelu:
          for (size_t i = 0; i < out.size(); ++i) out[i] = x.values[i] > 0 ? x.values[i] : 0.0;
          break;
        case Op::kLog:
          for (size_t i = 0; i < out.size(); ++i) {
            check(x.values[i] > 0, "log: non-positive input ", x.values[i]);
            out[i] = std::log(x.values[i]);
          }
          break;
        default:
          check(attrs.lo <= attrs.hi, "clip: lo ", attrs.lo, " > hi ", attrs.hi);
          for (size_t i = 0; i < out.size(); ++i)
            out[i] = std::min(attrs.hi, std::max(attrs.lo, x.values[i]));
          break;
      }
      break;
    }
    case Op::kSoftmax: {
      const Tensor& x = *inputs[0];
      require_axis(op, x.shape, attrs.axis);
      out_shape = x.shape;
      out.resize(x.values.size());
      auto sp = axis_split(x.shape, attrs.axis);
      for (int64_t o = 0; o < sp.outer; ++o) {
        for (int64_t in = 0; in < sp.inner; ++in) {
          int64_t base = o * sp.n * sp.inner + in;
          double mx = -HUGE_VAL;
          for (int64_t i = 0; i < sp.n; ++i)
            mx = std::max(mx, x.values[base + i * sp.inner]);
          double z = 0.0;
          for (int64_t i = 0; i < sp.n; ++i) {
            double e = std::exp(x.values[base + i * sp.inner] - mx);
            out[base + i * sp.inner] = e;
            z += e;
          }
          for (int64_t i = 0; i < sp.n; ++i) out[base + i * sp.inner] /= z;
        }
      }
      break;
    }
    case Op::kL2Normalize: {
      const Tensor& x = *inputs[0];
      require_axis(op, x.shape, attrs.axis);
      out_shape = x.shape;
      out.resize(x.values.size());
      auto sp = axis_split(x.shape, attrs.axis);
      for (int64_t o = 0; o < sp.outer; ++o) {
        for (int64_t in = 0; in < sp.inner; ++in) {
          int64_t base = o * sp.n * sp.inner + in;
          double ss = 0.0;
          for (int64_t i = 0; i < sp.n; ++i) {
            double v = x.values[base + i * sp.inner];
            ss += v * v;
          }
          double denom = std::max(std::sqrt(ss), kL2NormFloor);
          for (int64_t i = 0; i < sp.n; ++i)
            out[base + i * sp.inner] = x.values[base + i * sp.inner] / denom;
        }
      }
      break;
    }
    case Op::kMean:
    case Op::kMax: {
      const Tensor& x = *inputs[0];
      require_axis(op, x.shape, attrs.axis);
      out_shape = x.shape;
      out_shape.erase(out_shape.begin() + attrs.axis);
      out.resize(static_cast<size_t>(shape_size(out_shape)));
      auto sp = axis_split(x.shape, attrs.axis);
      for (int64_t o = 0; o < sp.outer; ++o) {
        for (int64_t in = 0; in < sp.inner; ++in) {
          int64_t base = o * sp.n * sp.inner + in;
          if (op == Op::kMean) {
            double acc = 0.0;
            for (int64_t i = 0; i < sp.n; ++i) acc += x.values[base + i * sp.inner];
            out[o * sp.inner + in] = acc / static_cast<double>(sp.n);
          } else {
            double best = x.values[base];
            for (int64_t i = 1; i < sp.n; ++i)
              best = std::max(best, x.values[base + i * sp.inner]);
            out[o * sp.inner + in] = best;
          }
        }
      }
      break;
    }
    case Op::kSlice: {
      const Tensor& x = *inputs[0];
      require_axis(op, x.shape, attrs.axis);
      check(attrs.start >= 0 && attrs.length > 0 &&
                attrs.start + attrs.length <= x.shape[attrs.axis],
            "slice: range [", attrs.start, ", ", attrs.start + attrs.length,
            ") out of bounds for shape ", shape_str(x.shape), " axis ",
            attrs.axis);
      out_shape = x.shape;
      out_shape[attrs.axis] = attrs.length;
      out.resize(static_cast<size_t>(shape_size(out_shape)));
      auto sp = axis_split(x.shape, attrs.axis);
      for (int64_t o = 0; o < sp.outer; ++o) {
        const double* src =
            x.values.data() + (o * sp.n + attrs.start) * sp.inner;
        double* dst = out.data() + o * attrs.length * sp.inner;
        std::copy(src, src + attrs.length * sp.inner, dst);
      }
      break;
    }
    case Op::kReshape: {
      const Tensor& x = *inputs[0];
      check(shape_size(attrs.target_shape) == x.size(),
            "reshape: cannot reshape ", shape_str(x.shape), " to ",
            shape_str(attrs.target_shape));
      out_shape = attrs.target_shape;
      out = x.values;
      break;
    }
    case Op::kEmbeddingLookup: {
      const Tensor& table = *inputs[0];
      check(table.shape.size() == 2, "embedding-lookup: table must be rank 2, got ",
            shape_str(table.shape));
      int64_t rows = table.shape[0], dim = table.shape[1];
      int64_t n = static_cast<int64_t>(attrs.indices.size());
      check(n > 0, "embedding-lookup: empty index list");
      out_shape = {n, dim};
      out.resize(static_cast<size_t>(n * dim));
      for (int64_t i = 0; i < n; ++i) {
        int64_t idx = attrs.indices[i];
        check(idx >= 0 && idx < rows, "embedding-lookup: index ", idx,
              " out of range [0, ", rows, ")");
        std::copy(table.values.begin() + idx * dim,
                  table.values.begin() + (idx + 1) * dim,
                  out.begin() + i * dim);
      }
      break;
    }
    case Op::kCrossEntropyWithLogits: {
      check(inputs.size() == 2, "cross-entropy-with-logits: expects 2 inputs");
      const Tensor& z = *inputs[0];
      const Tensor& y = *inputs[1];
      require_same_shape(op, z, y);
      out_shape = z.shape;
      out.resize(z.values.size());
      for (size_t i = 0; i < out.size(); ++i) {
        double zv = z.values[i], yv = y.values[i];
        out[i] = std::max(zv, 0.0) - zv * yv + std::log1p(std::exp(-std::fabs(zv)));
      }
      break;
    }
    case Op::kBroadcastAddBias: {
      check(inputs.size() == 2, "broadcast-add-bias: expects 2 inputs");
      const Tensor& x = *inputs[0];
      const Tensor& b = *inputs[1];
      check(!x.shape.empty() && b.shape.size() == 1 &&
                b.shape[0] == x.shape.back(),
            "broadcast-add-bias: shape mismatch ", shape_str(x.shape), " vs ",
            shape_str(b.shape));
      out_shape = x.shape;
      out.resize(x.values.size());
      int64_t d = b.shape[0];
      for (size_t i = 0; i < out.size(); ++i)
        out[i] = x.values[i] + b.values[i % d];
      break;
    }
  }

  bool needs_grad = false;
  for (const auto& t : inputs) needs_grad = needs_grad || t->requires_grad;
  auto result = make_tensor(std::move(out_shape), std::move(out), needs_grad);
  if (needs_grad) {
    producer_[result.get()] = static_cast<int>(nodes_.size());
    nodes_.push_back(Node{op, attrs, inputs, result});
  }
  return result;
}

namespace {

void backward_node(const Node& node) {
  const Tensor& y = *node.output;
  const std::vector<double>& g = y.grad;
  auto wants = [](const TensorPtr& t) { return t->requires_grad; };

  switch (node.op) {
    case Op::kMatmul: {
      Tensor& a = *node.inputs[0];
      Tensor& b = *node.inputs[1];
      int64_t m = a.shape[0], k = a.shape[1], n = b.shape[1];
      if (wants(node.inputs[0])) {
        for (int64_t i = 0; i < m; ++i) {
          const double* grow = g.data() + i * n;
          double* garow = a.grad.data() + i * k;
          for (int64_t kk = 0; kk < k; ++kk) {
            const double* brow = b.values.data() + kk * n;
            double acc = 0.0;
            for (int64_t j = 0; j < n; ++j) acc += grow[j] * brow[j];
            garow[kk] += acc;
          }
        }
      }
      if (wants(node.inputs[1])) {
        for (int64_t i = 0; i < m; ++i) {
          const double* arow = a.values.data() + i * k;
          const double* grow = g.data() + i * n;
          for (int64_t kk = 0; kk < k; ++kk) {
            double av = arow[kk];
            if (av == 0.0) continue;
            double* gbrow = b.grad.data() + kk * n;
            for (int64_t j = 0; j < n; ++j) gbrow[j] += av * grow[j];
          }
        }
      }
      break;
    }
    case Op::kAdd: {
      for (int s = 0; s < 2; ++s)
        if (wants(node.inputs[s])) {
          auto& gi = node.inputs[s]->grad;
          for (size_t i = 0; i < g.size(); ++i) gi[i] += g[i];
        }
      break;
    }
    case Op::kSub: {
      if (wants(node.inputs[0])) {
        auto& ga = node.inputs[0]->grad;
        for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
      }
      if (wants(node.inputs[1])) {
        auto& gb = node.inputs[1]->grad;
        for (size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
      }
      break;
    }
    case Op::kMul: {
      const Tensor& a = *node.inputs[0];
      const Tensor& b = *node.inputs[1];
      if (wants(node.inputs[0])) {
        auto& ga = node.inputs[0]->grad;
        for (size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * b.values[i];
      }
      if (wants(node.inputs[1])) {
        auto& gb = node.inputs[1]->grad;
        for (size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * a.values[i];
      }
      break;
    }
    case Op::kConcat: {
      auto sp = axis_split(y.shape, node.attrs.axis);
      int64_t src_block = sp.n * sp.inner;
      for (int64_t o = 0; o < sp.outer; ++o) {
        int64_t off = 0;
        for (const auto& t : node.inputs) {
          int64_t nb = t->shape[node.attrs.axis] * sp.inner;
          if (t->requires_grad) {
            double* dst = t->grad.data() + o * nb;
            const double* src = g.data() + o * src_block + off;
            for (int64_t i = 0; i < nb; ++i) dst[i] += src[i];
          }
          off += nb;
        }
      }
      break;
    }
    case Op::kSigmoid: {
      auto& gx = node.inputs[0]->grad;
      for (size_t i = 0; i < g.size(); ++i)
        gx[i] += g[i] * y.values[i] * (1.0 - y.values[i]);
      break;
    }
    case Op::kTanh: {
      auto& gx = node.inputs[0]->grad;
      for (size_t i = 0; i < g.size(); ++i)
        gx[i] += g[i] * (1.0 - y.values[i] * y.values[i]);
      break;
    }
    case Op::kRelu: {
      const Tensor& x = *node.inputs[0];
      auto& gx = node.inputs[0]->grad;
      for (size_t i = 0; i < g.size(); ++i)
        if (x.values[i] > 0) gx[i] += g[i];
      break;
    }
    case Op::kSoftmax: {
      auto& gx = node.inputs[0]->grad;
      auto sp = axis_split(y.shape, node.attrs.axis);
      for (int64_t o = 0; o < sp.outer; ++o) {
        for (int64_t in = 0; in < sp.inner; ++in) {
          int64_t base = o * sp.n * sp.inner + in;
          double dot = 0.0;
          for (int64_t i = 0; i < sp.n; ++i) {
            int64_t ix = base + i * sp.inner;
            dot += g[ix] * y.values[ix];
          }
          for (int64_t i = 0; i < sp.n; ++i) {
            int64_t ix = base + i * sp.inner;
            gx[ix] += y.values[ix] * (g[ix] - dot);
          }
        }
      }
      break;
    }
    case Op::kL2Normalize: {
      const Tensor& x = *node.inputs[0];
      auto& gx = node.inputs[0]->grad;
      auto sp = axis_split(x.shape, node.attrs.axis);
      for (int64_t o = 0; o < sp.outer; ++o) {
        for (int64_t in = 0; in < sp.inner; ++in) {
          int64_t base = o * sp.n * sp.inner + in;
          double ss = 0.0;
          for (int64_t i = 0; i < sp.n; ++i) {
            double v = x.values[base + i * sp.inner];
            ss += v * v;
          }
          double norm = std::sqrt(ss);
          if (norm > kL2NormFloor) {
            double dot = 0.0;
            for (int64_t i = 0; i < sp.n; ++i) {
              int64_t ix = base + i * sp.inner;
              dot += g[ix] * y.values[ix];
            }
            for (int64_t i = 0; i < sp.n; ++i) {
              int64_t ix = base + i * sp.inner;
              gx[ix] += (g[ix] - y.values[ix] * dot) / norm;
            }
          } else {
            for (int64_t i = 0; i < sp.n; ++i) {
              int64_t ix = base + i * sp.inner;
              gx[ix] += g[ix] / kL2NormFloor;
            }
          }
        }
      }
      break;
    }
    case Op::kMean: {
      const Tensor& x = *node.inputs[0];
      auto& gx = node.inputs[0]->grad;
      auto sp = axis_split(x.shape, node.attrs.axis);
      double inv = 1.0 / static_cast<double>(sp.n);
      for (int64_t o = 0; o < sp.outer; ++o)
        for (int64_t in = 0; in < sp.inner; ++in) {
          double gv = g[o * sp.inner + in] * inv;
          int64_t base = o * sp.n * sp.inner + in;
          for (int64_t i = 0; i < sp.n; ++i) gx[base + i * sp.inner] += gv;
        }
      break;
    }
    case Op::kMax: {
      const Tensor& x = *node.inputs[0];
      auto& gx = node.inputs[0]->grad;
      auto sp = axis_split(x.shape, node.attrs.axis);
      for (int64_t o = 0; o < sp.outer; ++o)
        for (int64_t in = 0; in < sp.inner; ++in) {
          int64_t base = o * sp.n * sp.inner + in;
          int64_t best = 0;
          for (int64_t i = 1; i < sp.n; ++i)
            if (x.values[base + i * sp.inner] > x.values[base + best * sp.inner])
              best = i;
          gx[base + best * sp.inner] += g[o * sp.inner + in];
        }
      break;
    }
    case Op::kSlice: {
      const Tensor& x = *node.inputs[0];
      auto& gx = node.inputs[0]->grad;
      auto sp = axis_split(x.shape, node.attrs.axis);
      for (int64_t o = 0; o < sp.outer; ++o) {
        double* dst = gx.data() + (o * sp.n + node.attrs.start) * sp.inner;
        const double* src = g.data() + o * node.attrs.length * sp.inner;
        for (int64_t i = 0; i < node.attrs.length * sp.inner; ++i)
          dst[i] += src[i];
      }
      break;
    }
    case Op::kReshape: {
      auto& gx = node.inputs[0]->grad;
      for (size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
      break;
    }
    case Op::kEmbeddingLookup: {
      const Tensor& table = *node.inputs[0];
      auto& gt = node.inputs[0]->grad;
      int64_t dim = table.shape[1];
      for (size_t i = 0; i < node.attrs.indices.size(); ++i) {
        int64_t idx = node.attrs.indices[i];
        const double* src = g.data() + i * dim;
        double* dst = gt.data() + idx * dim;
        for (int64_t j = 0; j < dim; ++j) dst[j] += src[j];
      }
      break;
    }
    case Op::kClip: {
      const Tensor& x = *node.inputs[0];
      auto& gx = node.inputs[0]->grad;
      for (size_t i = 0; i < g.size(); ++i)
        if (x.values[i] > node.attrs.lo && x.values[i] < node.attrs.hi)
          gx[i] += g[i];
      break;
    }
    case Op::kLog: {
      const Tensor& x = *node.inputs[0];
      auto& gx = node.inputs[0]->grad;
      for (size_t i = 0; i < g.size(); ++i) gx[i] += g[i] / x.values[i];
      break;
    }
    case Op::kCrossEntropyWithLogits: {
      const Tensor& z = *node.inputs[0];
      const Tensor& t = *node.inputs[1];
      if (wants(node.inputs[0])) {
        auto& gz = node.inputs[0]->grad;
        for (size_t i = 0; i < g.size(); ++i)
          gz[i] += g[i] * (sigmoid_scalar(z.values[i]) - t.values[i]);
      }
      if (wants(node.inputs[1])) {
        auto& gt = node.inputs[1]->grad;
        for (size_t i = 0; i < g.size(); ++i) gt[i] += g[i] * (-z.values[i]);
      }
      break;
    }
    case Op::kBroadcastAddBias: {
      if (wants(node.inputs[0])) {
        auto& gx = node.inputs[0]->grad;
        for (size_t i = 0; i < g.size(); ++i) gx[i] += g[i];
      }
      if (wants(node.inputs[1])) {
        auto& gb = node.inputs[1]->grad;
        int64_t d = node.inputs[1]->shape[0];
        for (size_t i = 0; i < g.size(); ++i) gb[i % d] += g[i];
      }
      break;
    }
  }
}

}  // namespace

void Graph::backward(const TensorPtr& loss) {
  check(loss != nullptr, "backward: null loss");
  check(loss->is_scalar(), "backward: loss must be scalar, got shape ",
        shape_str(loss->shape));
  if (!loss->requires_grad) return;  // constant loss: nothing depends on it
  auto it = producer_.find(loss.get());
  check(it != producer_.end(), "backward: loss does not belong to this graph");

  for (const auto& n : nodes_) {
    n.output->zero_grad();
    for (const auto& t : n.inputs)
      if (t->requires_grad) t->zero_grad();
  }
  loss->grad[0] = 1.0;
  for (size_t k = nodes_.size(); k-- > 0;) backward_node(nodes_[k]);
}

TensorPtr Graph::matmul(const TensorPtr& a, const TensorPtr& b) {
  return apply(Op::kMatmul, {a, b});
}
TensorPtr Graph::add(const TensorPtr& a, const TensorPtr& b) {
  return apply(Op::kAdd, {a, b});
}
TensorPtr Graph::sub(const TensorPtr& a, const TensorPtr& b) {
  return apply(Op::kSub, {a, b});
}
TensorPtr Graph::mul(const TensorPtr& a, const TensorPtr& b) {
  return apply(Op::kMul, {a, b});
}
TensorPtr Graph::concat(const std::vector<TensorPtr>& xs, int64_t axis) {
  OpAttrs at;
  at.axis = axis;
  return apply(Op::kConcat, xs, at);
}
TensorPtr Graph::sigmoid(const TensorPtr& x) { return apply(Op::kSigmoid, {x}); }
TensorPtr Graph::tanh(const TensorPtr& x) { return apply(Op::kTanh, {x}); }
TensorPtr Graph::relu(const TensorPtr& x) { return apply(Op::kRelu, {x}); }
TensorPtr Graph::softmax(const TensorPtr& x, int64_t axis) {
  OpAttrs at;
  at.axis = axis;
  return apply(Op::kSoftmax, {x}, at);
}
TensorPtr Graph::l2_normalize(const TensorPtr& x, int64_t axis) {
  OpAttrs at;
  at.axis = axis;
  return apply(Op::kL2Normalize, {x}, at);
}
TensorPtr Graph::mean(const TensorPtr& x, int64_t axis) {
  OpAttrs at;
  at.axis = axis;
  return apply(Op::kMean, {x}, at);
}
TensorPtr Graph::max(const TensorPtr& x, int64_t axis) {
  OpAttrs at;
  at.axis = axis;
  return apply(Op::kMax, {x}, at);
}
TensorPtr Graph::slice(const TensorPtr& x, int64_t axis, int64_t start,
                       int64_t length) {
  OpAttrs at;
  at.axis = axis;
  at.start = start;
  at.length = length;
  return apply(Op::kSlice, {x}, at);
}
TensorPtr Graph::reshape(const TensorPtr& x, Shape shape) {
  OpAttrs at;
  at.target_shape = std::move(shape);
  return apply(Op::kReshape, {x}, at);
}
TensorPtr Graph::embedding_lookup(const TensorPtr& table,
                                  std::vector<int64_t> indices) {
  OpAttrs at;
  at.indices = std::move(indices);
  return apply(Op::kEmbeddingLookup, {table}, at);
}
TensorPtr Graph::clip(const TensorPtr& x, double lo, double hi) {
  OpAttrs at;
  at.lo = lo;
  at.hi = hi;
  return apply(Op::kClip, {x}, at);
}
TensorPtr Graph::log(const TensorPtr& x) { return apply(Op::kLog, {x}); }
TensorPtr Graph::cross_entropy_with_logits(const TensorPtr& logits,
                                           const TensorPtr& targets) {
  return apply(Op::kCrossEntropyWithLogits, {logits, targets});
}
TensorPtr Graph::broadcast_add_bias(const TensorPtr& x, const TensorPtr& bias) {
  return apply(Op::kBroadcastAddBias, {x, bias});
}

TensorPtr Graph::scale(const TensorPtr& x, double c) {
  return mul(x, full(x->shape, c));
}

TensorPtr Graph::mean_all(const TensorPtr& x) {
  TensorPtr flat = x->shape.size() == 1 ? x : reshape(x, {x->size()});
  return mean(flat, 0);
}

TensorPtr Graph::sum(const TensorPtr& x, int64_t axis) {
  require_axis(Op::kMean, x->shape, axis);
  return scale(mean(x, axis), static_cast<double>(x->shape[axis]));
}

int Graph::node_of(const Tensor* t) const {
  auto it = producer_.find(t);
  return it == producer_.end() ? -1 : it->second;
}

std::vector<int> Graph::input_node_ids(size_t k) const {
  std::vector<int> ids;
  for (const auto& t : nodes_[k].inputs) ids.push_back(node_of(t.get()));
  return ids;
}

}  // namespace vtag
