#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "fairsense/tensor.hpp"

namespace fairsense {

struct NodeId {
  std::size_t index = 0;
  friend bool operator==(NodeId, NodeId) = default;
};

enum class LeafKind {
  kWeight,    // differentiable model parameter
  kInput,     // differentiable model input
  kConstant,  // recorded value, never differentiated
};

enum class OpKind {
  kLeaf,
  kMatVec,
  kAdd,
  kScale,
  kRelu,
  kSigmoid,
  kBce,
  kBceWithLogits,
  kMean,
};

class Gradients;

// Reverse-mode tape. Nodes are appended in evaluation order, so every operand
// id is strictly smaller than the id of the node that consumes it. Local
// partials are captured when a node is recorded; backward() only multiplies
// and accumulates.
//
// A Tape has a single owner while recording. Batch work gives each worker its
// own Tape.
class Tape {
 public:
  Tape() = default;

  NodeId leaf(Tensor value, LeafKind kind);
  NodeId weight(Tensor value) { return leaf(std::move(value), LeafKind::kWeight); }
  NodeId input(Tensor value) { return leaf(std::move(value), LeafKind::kInput); }
  NodeId constant(Tensor value) { return leaf(std::move(value), LeafKind::kConstant); }

  // W[m x n] . x[n] -> [m]
  NodeId matvec(NodeId w, NodeId x);
  NodeId add(NodeId a, NodeId b);
  NodeId scale(NodeId a, double factor);
  NodeId relu(NodeId a);
  NodeId sigmoid(NodeId a);
  // -[y ln p + (1-y) ln(1-p)] for a scalar probability node. p must lie
  // strictly inside (0, 1).
  NodeId bce(NodeId p, int label);
  // Same loss evaluated from a scalar logit z with p = sigmoid(z); finite for
  // every finite z.
  NodeId bce_with_logits(NodeId z, int label);
  // Arithmetic mean of scalar nodes.
  NodeId mean(std::span<const NodeId> scalars);

  const Tensor& value(NodeId id) const;
  OpKind op(NodeId id) const { return node(id).op; }
  bool is_leaf(NodeId id) const { return node(id).op == OpKind::kLeaf; }
  LeafKind leaf_kind(NodeId id) const;
  bool requires_grad(NodeId id) const { return node(id).requires_grad; }
  std::size_t size() const { return nodes_.size(); }

  // Adjoints of every differentiable leaf w.r.t. a scalar output node.
  Gradients backward(NodeId output) const;

 private:
  struct Node {
    OpKind op = OpKind::kLeaf;
    LeafKind leaf = LeafKind::kConstant;
    std::vector<NodeId> inputs;
    Tensor value;
    // Elementwise local derivative (relu mask, sigmoid slope, loss slope) or
    // the scale factor; empty for ops that read their operands' values.
    Tensor partial;
    bool requires_grad = false;
  };

  const Node& node(NodeId id) const;
  NodeId push(Node n);

  std::vector<Node> nodes_;
};

// Adjoint map keyed by leaf id. Immutable once produced.
class Gradients {
 public:
  bool contains(NodeId leaf) const;
  const Tensor& of(NodeId leaf) const;

 private:
  friend class Tape;
  std::vector<std::optional<Tensor>> by_node_;
};

// Numerically stable logistic function.
double sigmoid(double z);
// ln(1 + e^z) without overflow.
double softplus(double z);

}  // namespace fairsense
