#include "fairsense/tape.hpp"

#include <cmath>
#include <string>

#include "fairsense/error.hpp"

namespace fairsense {

double sigmoid(double z) {
  if (z >= 0.0) {
    return 1.0 / (1.0 + std::exp(-z));
  }
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double softplus(double z) {
  // max(z, 0) + ln(1 + e^-|z|)
  return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)));
}

const Tape::Node& Tape::node(NodeId id) const {
  if (id.index >= nodes_.size()) {
    throw Error(ErrorKind::kContract, "node id " + std::to_string(id.index) +
                                          " is not on this tape (size " +
                                          std::to_string(nodes_.size()) + ")");
  }
  return nodes_[id.index];
}

NodeId Tape::push(Node n) {
  nodes_.push_back(std::move(n));
  return NodeId{nodes_.size() - 1};
}

const Tensor& Tape::value(NodeId id) const { return node(id).value; }

LeafKind Tape::leaf_kind(NodeId id) const {
  const Node& n = node(id);
  if (n.op != OpKind::kLeaf) {
    throw Error(ErrorKind::kContract, "node " + std::to_string(id.index) + " is not a leaf");
  }
  return n.leaf;
}

NodeId Tape::leaf(Tensor value, LeafKind kind) {
  Node n;
  n.op = OpKind::kLeaf;
  n.leaf = kind;
  n.value = std::move(value);
  n.requires_grad = kind != LeafKind::kConstant;
  return push(std::move(n));
}

NodeId Tape::matvec(NodeId w, NodeId x) {
  const Tensor& wv = node(w).value;
  const Tensor& xv = node(x).value;
  if (wv.rank() != 2 || xv.rank() != 1 || wv.dim(1) != xv.dim(0)) {
    throw Error(ErrorKind::kDimension, "matvec shape mismatch: W" + shape_string(wv.shape()) +
                                           " . x" + shape_string(xv.shape()));
  }
  const std::size_t rows = wv.dim(0);
  const std::size_t cols = wv.dim(1);
  Tensor out({rows});
  const double* wp = wv.data().data();
  const double* xp = xv.data().data();
  for (std::size_t r = 0; r < rows; ++r) {
    double acc = 0.0;
    const double* row = wp + r * cols;
    for (std::size_t c = 0; c < cols; ++c) acc += row[c] * xp[c];
    out[r] = acc;
  }
  Node n;
  n.op = OpKind::kMatVec;
  n.inputs = {w, x};
  n.value = std::move(out);
  n.requires_grad = node(w).requires_grad || node(x).requires_grad;
  return push(std::move(n));
}

NodeId Tape::add(NodeId a, NodeId b) {
  const Tensor& av = node(a).value;
  const Tensor& bv = node(b).value;
  if (!av.same_shape(bv)) {
    throw Error(ErrorKind::kDimension,
                "add shape mismatch: " + shape_string(av.shape()) + " + " + shape_string(bv.shape()));
  }
  Tensor out = av;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  Node n;
  n.op = OpKind::kAdd;
  n.inputs = {a, b};
  n.value = std::move(out);
  n.requires_grad = node(a).requires_grad || node(b).requires_grad;
  return push(std::move(n));
}

NodeId Tape::scale(NodeId a, double factor) {
  Tensor out = node(a).value;
  for (double& v : out.data()) v *= factor;
  Node n;
  n.op = OpKind::kScale;
  n.inputs = {a};
  n.value = std::move(out);
  n.partial = Tensor::scalar(factor);
  n.requires_grad = node(a).requires_grad;
  return push(std::move(n));
}

NodeId Tape::relu(NodeId a) {
  const Tensor& av = node(a).value;
  Tensor out(av.shape());
  Tensor mask(av.shape());
  for (std::size_t i = 0; i < av.size(); ++i) {
    if (av[i] > 0.0) {
      out[i] = av[i];
      mask[i] = 1.0;
    }
  }
  Node n;
  n.op = OpKind::kRelu;
  n.inputs = {a};
  n.value = std::move(out);
  n.partial = std::move(mask);
  n.requires_grad = node(a).requires_grad;
  return push(std::move(n));
}

NodeId Tape::sigmoid(NodeId a) {
  const Tensor& av = node(a).value;
  Tensor out(av.shape());
  Tensor slope(av.shape());
  for (std::size_t i = 0; i < av.size(); ++i) {
    const double s = fairsense::sigmoid(av[i]);
    out[i] = s;
    slope[i] = s * (1.0 - s);
  }
  Node n;
  n.op = OpKind::kSigmoid;
  n.inputs = {a};
  n.value = std::move(out);
  n.partial = std::move(slope);
  n.requires_grad = node(a).requires_grad;
  return push(std::move(n));
}

namespace {

void require_scalar(const Tensor& t, const char* what) {
  if (t.size() != 1) {
    throw Error(ErrorKind::kDimension,
                std::string(what) + " expects a scalar operand, got " + shape_string(t.shape()));
  }
}

void require_label(int label) {
  if (label != 0 && label != 1) {
    throw Error(ErrorKind::kDomain, "label must be 0 or 1, got " + std::to_string(label));
  }
}

}  // namespace

NodeId Tape::bce(NodeId p, int label) {
  const Tensor& pv = node(p).value;
  require_scalar(pv, "bce");
  require_label(label);
  const double prob = pv[0];
  if (!(prob > 0.0 && prob < 1.0)) {
    throw Error(ErrorKind::kDomain, "bce probability must lie strictly inside (0, 1), got " +
                                        std::to_string(prob) + "; use bce_with_logits");
  }
  const double loss = label == 1 ? -std::log(prob) : -std::log1p(-prob);
  const double slope = label == 1 ? -1.0 / prob : 1.0 / (1.0 - prob);
  Node n;
  n.op = OpKind::kBce;
  n.inputs = {p};
  n.value = Tensor::scalar(loss);
  n.partial = Tensor::scalar(slope);
  n.requires_grad = node(p).requires_grad;
  return push(std::move(n));
}

NodeId Tape::bce_with_logits(NodeId z, int label) {
  const Tensor& zv = node(z).value;
  require_scalar(zv, "bce_with_logits");
  require_label(label);
  const double logit = zv[0];
  // -[y ln s(z) + (1-y) ln(1-s(z))] = softplus(z) - y z
  const double loss = softplus(logit) - static_cast<double>(label) * logit;
  Node n;
  n.op = OpKind::kBceWithLogits;
  n.inputs = {z};
  n.value = Tensor::scalar(loss);
  n.partial = Tensor::scalar(fairsense::sigmoid(logit) - static_cast<double>(label));
  n.requires_grad = node(z).requires_grad;
  return push(std::move(n));
}

NodeId Tape::mean(std::span<const NodeId> scalars) {
  if (scalars.empty()) {
    throw Error(ErrorKind::kContract, "mean of zero nodes");
  }
  double sum = 0.0;
  bool grad = false;
  for (NodeId id : scalars) {
    const Node& n = node(id);
    require_scalar(n.value, "mean");
    sum += n.value[0];
    grad = grad || n.requires_grad;
  }
  const double count = static_cast<double>(scalars.size());
  Node n;
  n.op = OpKind::kMean;
  n.inputs.assign(scalars.begin(), scalars.end());
  n.value = Tensor::scalar(sum / count);
  n.partial = Tensor::scalar(1.0 / count);
  n.requires_grad = grad;
  return push(std::move(n));
}

namespace {

Tensor& adjoint_slot(std::vector<Tensor>& adjoints, NodeId id, const Tensor& like) {
  Tensor& slot = adjoints[id.index];
  if (slot.size() == 0 && like.size() != 0) slot = Tensor(like.shape());
  return slot;
}

}  // namespace

Gradients Tape::backward(NodeId output) const {
  const Node& out = node(output);
  if (out.value.size() != 1) {
    throw Error(ErrorKind::kContract,
                "backward needs a scalar output, got " + shape_string(out.value.shape()));
  }
  std::vector<Tensor> adj(output.index + 1);
  adj[output.index] = Tensor(out.value.shape(), 1.0);

  for (std::size_t i = output.index + 1; i-- > 0;) {
    const Node& n = nodes_[i];
    const Tensor& g = adj[i];
    if (!n.requires_grad || g.size() == 0 || n.op == OpKind::kLeaf) continue;

    switch (n.op) {
      case OpKind::kMatVec: {
        const NodeId w = n.inputs[0];
        const NodeId x = n.inputs[1];
        const Tensor& wv = nodes_[w.index].value;
        const Tensor& xv = nodes_[x.index].value;
        const std::size_t rows = wv.dim(0);
        const std::size_t cols = wv.dim(1);
        if (nodes_[w.index].requires_grad) {
          Tensor& gw = adjoint_slot(adj, w, wv);
          double* gwp = gw.data().data();
          const double* xp = xv.data().data();
          for (std::size_t r = 0; r < rows; ++r) {
            const double gr = g[r];
            if (gr == 0.0) continue;
            double* row = gwp + r * cols;
            for (std::size_t c = 0; c < cols; ++c) row[c] += gr * xp[c];
          }
        }
        if (nodes_[x.index].requires_grad) {
          Tensor& gx = adjoint_slot(adj, x, xv);
          const double* wp = wv.data().data();
          for (std::size_t r = 0; r < rows; ++r) {
            const double gr = g[r];
            if (gr == 0.0) continue;
            const double* row = wp + r * cols;
            for (std::size_t c = 0; c < cols; ++c) gx[c] += gr * row[c];
          }
        }
        break;
      }
      case OpKind::kAdd: {
        for (NodeId in : n.inputs) {
          if (!nodes_[in.index].requires_grad) continue;
          Tensor& ga = adjoint_slot(adj, in, nodes_[in.index].value);
          for (std::size_t k = 0; k < g.size(); ++k) ga[k] += g[k];
        }
        break;
      }
      case OpKind::kScale: {
        const NodeId in = n.inputs[0];
        Tensor& ga = adjoint_slot(adj, in, nodes_[in.index].value);
        const double factor = n.partial[0];
        for (std::size_t k = 0; k < g.size(); ++k) ga[k] += factor * g[k];
        break;
      }
      case OpKind::kRelu:
      case OpKind::kSigmoid: {
        const NodeId in = n.inputs[0];
        Tensor& ga = adjoint_slot(adj, in, nodes_[in.index].value);
        for (std::size_t k = 0; k < g.size(); ++k) ga[k] += n.partial[k] * g[k];
        break;
      }
      case OpKind::kBce:
      case OpKind::kBceWithLogits: {
        const NodeId in = n.inputs[0];
        Tensor& ga = adjoint_slot(adj, in, nodes_[in.index].value);
        ga[0] += n.partial[0] * g[0];
        break;
      }
      case OpKind::kMean: {
        const double share = n.partial[0] * g[0];
        for (NodeId in : n.inputs) {
          if (!nodes_[in.index].requires_grad) continue;
          Tensor& ga = adjoint_slot(adj, in, nodes_[in.index].value);
          ga[0] += share;
        }
        break;
      }
      case OpKind::kLeaf:
        break;
    }
  }

  Gradients grads;
  grads.by_node_.resize(output.index + 1);
  for (std::size_t i = 0; i <= output.index; ++i) {
    const Node& n = nodes_[i];
    if (n.op != OpKind::kLeaf || !n.requires_grad) continue;
    // Leaves the output does not depend on get a zero adjoint.
    grads.by_node_[i] = adj[i].size() == 0 ? Tensor(n.value.shape()) : std::move(adj[i]);
  }
  return grads;
}

bool Gradients::contains(NodeId leaf) const {
  return leaf.index < by_node_.size() && by_node_[leaf.index].has_value();
}

const Tensor& Gradients::of(NodeId leaf) const {
  if (!contains(leaf)) {
    throw Error(ErrorKind::kContract,
                "no adjoint for node " + std::to_string(leaf.index) +
                    " (not a differentiable leaf preceding the output)");
  }
  return *by_node_[leaf.index];
}

}  // namespace fairsense
