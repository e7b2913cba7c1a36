#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "crosstag/array.hpp"
#include "crosstag/rng.hpp"

namespace crosstag {

struct Param;

class ShapeError : public std::runtime_error {
 public:
  ShapeError(const std::string& op, const Shape& a, const Shape& b);
};

enum class Op : std::uint8_t {
  kLeaf,
  kParam,
  kMatVec,
  kAdd,
  kMul,
  kSMul,      // scalar node * vector node
  kConcat,    // rank-1 inputs, along the only axis
  kRelu,
  kTanh,
  kSigmoid,
  kSoftmax,   // over the last axis
  kLog,
  kScale,     // constant factor
  kBilinear,  // out[k] = m^T G_k h, G stored [K, d, d]
  kDropout,
  kNll,       // -log(probs[label])
  kGradReverse,
  kSum,
  kSelectRow,
  kIndex,     // single element of a vector, kept as shape [1]
};

const char* op_name(Op op);

struct Node {
  std::uint32_t id = UINT32_MAX;
  bool valid() const { return id != UINT32_MAX; }
};

struct NodeRec {
  Op op = Op::kLeaf;
  bool requires_grad = false;
  Array value;
  Array grad;  // allocated on first accumulation; empty means untouched
  std::vector<std::uint32_t> inputs;
  // op-specific extras
  std::int64_t index = -1;   // kNll label, kSelectRow row, kIndex position
  double scalar = 0.0;       // kScale factor, kGradReverse lambda
  bool transposed = false;   // kBilinear: use G_k^T
  Array mask;                // kDropout keep mask, already scaled by 1/keep
  Param* param = nullptr;    // kParam backing store
};

// Define-by-run reverse-mode graph over dense arrays. Rebuilt per batch;
// node ids are creation-ordered, which fixes the accumulation order.
class Graph {
 public:
  explicit Graph(Dtype dtype, bool training = false, Rng* dropout_rng = nullptr);

  Dtype dtype() const { return dtype_; }
  bool training() const { return training_; }
  std::size_t size() const { return nodes_.size(); }

  Node input(Array v);
  Node input(Shape shape, const std::vector<double>& vals);
  Node scalar_input(double v);
  Node param(Param& p);         // one node per Param per graph
  Node detach(Node x);          // constant copy of x's current value

  Node matvec(Node w, Node x);
  Node add(Node a, Node b);
  Node mul(Node a, Node b);
  Node smul(Node scalar, Node vec);
  Node concat(const std::vector<Node>& xs);
  Node relu(Node x);
  Node tanh_(Node x);
  Node sigmoid(Node x);
  Node softmax(Node x);
  Node log_(Node x);
  Node scale(Node x, double s);
  Node bilinear(Node m, Node g, Node h, bool transposed = false);
  Node dropout(Node x, double rate);
  Node nll(Node probs, std::int64_t label);
  Node grad_reverse(Node x, double lambda);
  Node sum(Node x);
  Node select_row(Node matrix, std::size_t row);
  Node index(Node vec, std::size_t i);

  // Populates grads of every requires_grad node reachable from root and
  // accumulates into the backing Param buffers. Root must be scalar.
  void backward(Node root);

  const Array& value(Node n) const { return rec(n).value; }
  bool has_grad(Node n) const { return !rec(n).grad.empty(); }
  const Array& grad(Node n) const;
  double scalar_value(Node n) const;

  // Diagnostic for the NaN guard: first node (lowest id) holding a
  // non-finite value, if any.
  std::optional<std::pair<std::uint32_t, Op>> first_nonfinite() const;

 private:
  const NodeRec& rec(Node n) const { return nodes_.at(n.id); }
  NodeRec& rec(Node n) { return nodes_.at(n.id); }
  Node push(NodeRec&& r);
  Node unary(Op op, Node x);
  void ensure_grad(NodeRec& r);
  template <typename T>
  void backward_node(NodeRec& r);

  Dtype dtype_;
  bool training_;
  Rng* dropout_rng_;
  std::vector<NodeRec> nodes_;
  std::unordered_map<const Param*, Node> param_nodes_;
};

}  // namespace crosstag
