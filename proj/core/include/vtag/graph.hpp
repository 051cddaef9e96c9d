#pragma once

#include <unordered_map>
#include <vector>

#include "vtag/tensor.hpp"

namespace vtag {

enum class Op {
  kMatmul,
  kAdd,
  kSub,
  kMul,
  kConcat,
  kSigmoid,
  kTanh,
  kRelu,
  kSoftmax,
  kL2Normalize,
  kMean,
  kMax,
  kSlice,
  kReshape,
  kEmbeddingLookup,
  kClip,
  kLog,
  kCrossEntropyWithLogits,
  kBroadcastAddBias,
};

const char* op_name(Op op);

struct OpAttrs {
  int64_t axis = 0;
  int64_t start = 0;
  int64_t length = 0;
  double lo = 0.0;
  double hi = 0.0;
  Shape target_shape;
  std::vector<int64_t> indices;
};

struct Node {
  Op op;
  OpAttrs attrs;
  std::vector<TensorPtr> inputs;
  TensorPtr output;
};

// Append-only forward tape. Ops execute eagerly; a node is recorded only when
// some input requires a gradient, so inference on frozen parameters records
// nothing. Topological order equals append order by construction.
class Graph {
 public:
  TensorPtr apply(Op op, const std::vector<TensorPtr>& inputs,
                  const OpAttrs& attrs = {});

  TensorPtr matmul(const TensorPtr& a, const TensorPtr& b);
  TensorPtr add(const TensorPtr& a, const TensorPtr& b);
  TensorPtr sub(const TensorPtr& a, const TensorPtr& b);
  TensorPtr mul(const TensorPtr& a, const TensorPtr& b);
  TensorPtr concat(const std::vector<TensorPtr>& xs, int64_t axis);
  TensorPtr sigmoid(const TensorPtr& x);
  TensorPtr tanh(const TensorPtr& x);
  TensorPtr relu(const TensorPtr& x);
  TensorPtr softmax(const TensorPtr& x, int64_t axis);
  TensorPtr l2_normalize(const TensorPtr& x, int64_t axis);
  TensorPtr mean(const TensorPtr& x, int64_t axis);
  TensorPtr max(const TensorPtr& x, int64_t axis);
  TensorPtr slice(const TensorPtr& x, int64_t axis, int64_t start,
                  int64_t length);
  TensorPtr reshape(const TensorPtr& x, Shape shape);
  TensorPtr embedding_lookup(const TensorPtr& table,
                             std::vector<int64_t> indices);
  TensorPtr clip(const TensorPtr& x, double lo, double hi);
  TensorPtr log(const TensorPtr& x);
  TensorPtr cross_entropy_with_logits(const TensorPtr& logits,
                                      const TensorPtr& targets);
  TensorPtr broadcast_add_bias(const TensorPtr& x, const TensorPtr& bias);

  // Conveniences composed from the op set above.
  TensorPtr scale(const TensorPtr& x, double c);   // mul by a constant
  TensorPtr mean_all(const TensorPtr& x);          // reshape + mean -> scalar
  TensorPtr sum(const TensorPtr& x, int64_t axis); // mean * extent

  // Fills grad of every requires_grad tensor reachable from loss with
  // d(loss)/d(tensor); grads of graph tensors not on the path become zero.
  void backward(const TensorPtr& loss);

  size_t num_nodes() const { return nodes_.size(); }
  const Node& node(size_t k) const { return nodes_[k]; }
  // Producing node of t, or -1 when t is a leaf of this graph.
  int node_of(const Tensor* t) const;
  std::vector<int> input_node_ids(size_t k) const;

 private:
  std::vector<Node> nodes_;
  std::unordered_map<const Tensor*, int> producer_;
};

}  // namespace vtag
