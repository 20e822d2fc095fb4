#pragma once

// A small reverse-mode differentiation tape over double vectors. Nodes live
// in flat arenas; parameters are referenced directly and receive their
// gradients when Backward() runs.

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace xsem::kernel {

// A named parameter matrix (rows x cols, row-major) with its gradient.
struct Tensor {
  std::string name;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> value;
  std::vector<double> grad;

  Tensor() = default;
  Tensor(std::string n, std::size_t r, std::size_t c)
      : name(std::move(n)), rows(r), cols(c), value(r * c, 0.0),
        grad(r * c, 0.0) {}
  std::size_t size() const { return value.size(); }
};

using NodeId = int;

class Tape {
 public:
  Tape();

  void Clear();

  NodeId Constant(std::span<const double> values);
  NodeId Zeros(std::size_t n);
  // Row `row` of `table`.
  NodeId Lookup(Tensor* table, std::size_t row);
  // W x + b; `b` may be null.
  NodeId Affine(Tensor* w, Tensor* b, NodeId x);
  NodeId Concat(std::span<const NodeId> parts);
  NodeId Tanh(NodeId x);
  NodeId Add(NodeId a, NodeId b);
  NodeId Mul(NodeId a, NodeId b);
  NodeId Scale(NodeId x, double s);
  // LSTM cell from preactivations z = [i f g o] (4H) and the previous cell.
  NodeId LstmCell(NodeId z, NodeId c_prev);
  NodeId LstmHidden(NodeId z, NodeId c);
  // softmax_i(keys_i . query) weighted sum of values_i. Weights are kept and
  // readable through AttentionWeights().
  NodeId Attention(NodeId query, std::span<const NodeId> keys,
                   std::span<const NodeId> values);
  // w . x, with w a parameter vector of x's size.
  NodeId DotParam(Tensor* w, NodeId x);
  // Concatenates scalar nodes into one vector.
  NodeId Stack(std::span<const NodeId> scalars);
  // -log softmax(x)[target] as a scalar node.
  NodeId NegLogSoftmaxPick(NodeId logits, std::size_t target);
  // Sum of scalar nodes.
  NodeId Sum(std::span<const NodeId> scalars);

  std::span<const double> Value(NodeId n) const;
  std::span<const double> AttentionWeights(NodeId n) const;
  std::size_t Size(NodeId n) const { return nodes_[n].size; }
  std::size_t node_count() const { return nodes_.size(); }

  // Seeds d(root) = 1 for a scalar root and propagates to every parameter.
  void Backward(NodeId root);

 private:
  enum class Op {
    kConstant,
    kLookup,
    kAffine,
    kConcat,
    kTanh,
    kAdd,
    kMul,
    kScale,
    kLstmCell,
    kLstmHidden,
    kAttention,
    kDotParam,
    kStack,
    kNegLogSoftmaxPick,
    kSum,
  };

  struct Node {
    Op op;
    std::size_t size = 0;
    std::size_t val = 0;  // offset into values_/grads_
    std::size_t aux = 0;  // offset into aux_
    NodeId a = -1;
    NodeId b = -1;
    Tensor* p = nullptr;
    Tensor* q = nullptr;
    std::size_t index = 0;
    double scalar = 0.0;
    std::size_t list = 0;  // offset into lists_
    std::size_t list_len = 0;
  };

  NodeId Push(Node n);
  double* V(NodeId n) { return values_.data() + nodes_[n].val; }
  const double* V(NodeId n) const { return values_.data() + nodes_[n].val; }
  double* G(NodeId n) { return grads_.data() + nodes_[n].val; }
  void BackwardNode(const Node& n, NodeId id);

  std::vector<Node> nodes_;
  std::vector<double> values_;
  std::vector<double> grads_;
  std::vector<double> aux_;
  std::vector<NodeId> lists_;
};

}  // namespace xsem::kernel
