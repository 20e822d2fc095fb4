#include "xsem/kernel/tape.h"

#include <algorithm>
#include <cmath>

#include "xsem/error.h"
#include "xsem/simd/kernels.h"

namespace xsem::kernel {
namespace {

double Sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void CheckSize(bool ok, const char* what) {
  if (!ok) throw InputError(std::string("shape mismatch in ") + what);
}

}  // namespace

Tape::Tape() {
  nodes_.reserve(4096);
  values_.reserve(1 << 16);
  aux_.reserve(1 << 14);
}

void Tape::Clear() {
  nodes_.clear();
  values_.clear();
  grads_.clear();
  aux_.clear();
  lists_.clear();
}

NodeId Tape::Push(Node n) {
  n.val = values_.size();
  values_.resize(values_.size() + n.size, 0.0);
  nodes_.push_back(n);
  return static_cast<NodeId>(nodes_.size() - 1);
}

std::span<const double> Tape::Value(NodeId n) const {
  return {values_.data() + nodes_[n].val, nodes_[n].size};
}

std::span<const double> Tape::AttentionWeights(NodeId n) const {
  const Node& node = nodes_[n];
  CheckSize(node.op == Op::kAttention, "AttentionWeights");
  return {aux_.data() + node.aux, node.list_len / 2};
}

NodeId Tape::Constant(std::span<const double> values) {
  Node n{Op::kConstant};
  n.size = values.size();
  const NodeId id = Push(n);
  std::copy(values.begin(), values.end(), V(id));
  return id;
}

NodeId Tape::Zeros(std::size_t size) {
  Node n{Op::kConstant};
  n.size = size;
  return Push(n);
}

NodeId Tape::Lookup(Tensor* table, std::size_t row) {
  if (row >= table->rows) {
    throw InputError("id " + std::to_string(row) + " out of range for " +
                     table->name);
  }
  Node n{Op::kLookup};
  n.size = table->cols;
  n.p = table;
  n.index = row;
  const NodeId id = Push(n);
  std::copy_n(table->value.data() + row * table->cols, table->cols, V(id));
  return id;
}

NodeId Tape::Affine(Tensor* w, Tensor* b, NodeId x) {
  CheckSize(w->cols == nodes_[x].size, "Affine");
  CheckSize(b == nullptr || b->size() == w->rows, "Affine bias");
  Node n{Op::kAffine};
  n.size = w->rows;
  n.p = w;
  n.q = b;
  n.a = x;
  const NodeId id = Push(n);
  double* y = V(id);
  if (b != nullptr) std::copy(b->value.begin(), b->value.end(), y);
  simd::Active().gemv(w->value.data(), w->rows, w->cols, V(x), y);
  return id;
}

NodeId Tape::Concat(std::span<const NodeId> parts) {
  Node n{Op::kConcat};
  n.list = lists_.size();
  n.list_len = parts.size();
  for (NodeId p : parts) {
    n.size += nodes_[p].size;
    lists_.push_back(p);
  }
  const NodeId id = Push(n);
  double* y = V(id);
  for (NodeId p : parts) {
    std::copy_n(V(p), nodes_[p].size, y);
    y += nodes_[p].size;
  }
  return id;
}

NodeId Tape::Tanh(NodeId x) {
  Node n{Op::kTanh};
  n.size = nodes_[x].size;
  n.a = x;
  const NodeId id = Push(n);
  const double* in = V(x);
  double* y = V(id);
  for (std::size_t i = 0; i < n.size; ++i) y[i] = std::tanh(in[i]);
  return id;
}

NodeId Tape::Add(NodeId a, NodeId b) {
  CheckSize(nodes_[a].size == nodes_[b].size, "Add");
  Node n{Op::kAdd};
  n.size = nodes_[a].size;
  n.a = a;
  n.b = b;
  const NodeId id = Push(n);
  for (std::size_t i = 0; i < n.size; ++i) V(id)[i] = V(a)[i] + V(b)[i];
  return id;
}

NodeId Tape::Mul(NodeId a, NodeId b) {
  CheckSize(nodes_[a].size == nodes_[b].size, "Mul");
  Node n{Op::kMul};
  n.size = nodes_[a].size;
  n.a = a;
  n.b = b;
  const NodeId id = Push(n);
  for (std::size_t i = 0; i < n.size; ++i) V(id)[i] = V(a)[i] * V(b)[i];
  return id;
}

NodeId Tape::Scale(NodeId x, double s) {
  Node n{Op::kScale};
  n.size = nodes_[x].size;
  n.a = x;
  n.scalar = s;
  const NodeId id = Push(n);
  for (std::size_t i = 0; i < n.size; ++i) V(id)[i] = s * V(x)[i];
  return id;
}

NodeId Tape::LstmCell(NodeId z, NodeId c_prev) {
  const std::size_t h = nodes_[c_prev].size;
  CheckSize(nodes_[z].size == 4 * h, "LstmCell");
  Node n{Op::kLstmCell};
  n.size = h;
  n.a = z;
  n.b = c_prev;
  n.aux = aux_.size();
  aux_.resize(aux_.size() + 3 * h);  // activated i, f, g
  const NodeId id = Push(n);
  const double* zv = V(z);
  const double* cp = V(c_prev);
  double* gates = aux_.data() + n.aux;
  double* c = V(id);
  for (std::size_t k = 0; k < h; ++k) {
    const double i = Sigmoid(zv[k]);
    const double f = Sigmoid(zv[h + k]);
    const double g = std::tanh(zv[2 * h + k]);
    gates[k] = i;
    gates[h + k] = f;
    gates[2 * h + k] = g;
    c[k] = f * cp[k] + i * g;
  }
  return id;
}

NodeId Tape::LstmHidden(NodeId z, NodeId c) {
  const std::size_t h = nodes_[c].size;
  CheckSize(nodes_[z].size == 4 * h, "LstmHidden");
  Node n{Op::kLstmHidden};
  n.size = h;
  n.a = z;
  n.b = c;
  const NodeId id = Push(n);
  const double* zv = V(z);
  const double* cv = V(c);
  double* y = V(id);
  for (std::size_t k = 0; k < h; ++k) {
    y[k] = Sigmoid(zv[3 * h + k]) * std::tanh(cv[k]);
  }
  return id;
}

NodeId Tape::Attention(NodeId query, std::span<const NodeId> keys,
                       std::span<const NodeId> values) {
  CheckSize(!keys.empty() && keys.size() == values.size(), "Attention");
  const std::size_t dq = nodes_[query].size;
  const std::size_t dv = nodes_[values[0]].size;
  for (std::size_t i = 0; i < keys.size(); ++i) {
    CheckSize(nodes_[keys[i]].size == dq && nodes_[values[i]].size == dv,
              "Attention");
  }
  Node n{Op::kAttention};
  n.size = dv;
  n.a = query;
  n.list = lists_.size();
  n.list_len = 2 * keys.size();
  lists_.insert(lists_.end(), keys.begin(), keys.end());
  lists_.insert(lists_.end(), values.begin(), values.end());
  n.aux = aux_.size();
  aux_.resize(aux_.size() + keys.size());
  const NodeId id = Push(n);
  const auto& k = simd::Active();
  double* w = aux_.data() + n.aux;
  double top = -INFINITY;
  for (std::size_t i = 0; i < keys.size(); ++i) {
    w[i] = k.dot(V(keys[i]), V(query), dq);
    top = std::max(top, w[i]);
  }
  double z = 0.0;
  for (std::size_t i = 0; i < keys.size(); ++i) {
    w[i] = std::exp(w[i] - top);
    z += w[i];
  }
  double* y = V(id);
  for (std::size_t i = 0; i < keys.size(); ++i) {
    w[i] /= z;
    k.axpy(w[i], V(values[i]), y, dv);
  }
  return id;
}

NodeId Tape::DotParam(Tensor* w, NodeId x) {
  CheckSize(w->size() == nodes_[x].size, "DotParam");
  Node n{Op::kDotParam};
  n.size = 1;
  n.p = w;
  n.a = x;
  const NodeId id = Push(n);
  V(id)[0] = simd::Active().dot(w->value.data(), V(x), w->size());
  return id;
}

NodeId Tape::Stack(std::span<const NodeId> scalars) {
  Node n{Op::kStack};
  n.size = scalars.size();
  n.list = lists_.size();
  n.list_len = scalars.size();
  for (NodeId s : scalars) {
    CheckSize(nodes_[s].size == 1, "Stack");
    lists_.push_back(s);
  }
  const NodeId id = Push(n);
  for (std::size_t i = 0; i < scalars.size(); ++i) V(id)[i] = V(scalars[i])[0];
  return id;
}

NodeId Tape::NegLogSoftmaxPick(NodeId logits, std::size_t target) {
  const std::size_t m = nodes_[logits].size;
  CheckSize(target < m, "NegLogSoftmaxPick");
  Node n{Op::kNegLogSoftmaxPick};
  n.size = 1;
  n.a = logits;
  n.index = target;
  n.aux = aux_.size();
  aux_.resize(aux_.size() + m);
  const NodeId id = Push(n);
  const double* x = V(logits);
  double* p = aux_.data() + n.aux;
  const double top = *std::max_element(x, x + m);
  double z = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    p[i] = std::exp(x[i] - top);
    z += p[i];
  }
  for (std::size_t i = 0; i < m; ++i) p[i] /= z;
  V(id)[0] = -(x[target] - top - std::log(z));
  return id;
}

NodeId Tape::Sum(std::span<const NodeId> scalars) {
  Node n{Op::kSum};
  n.size = 1;
  n.list = lists_.size();
  n.list_len = scalars.size();
  double s = 0.0;
  for (NodeId x : scalars) {
    CheckSize(nodes_[x].size == 1, "Sum");
    lists_.push_back(x);
    s += V(x)[0];
  }
  const NodeId id = Push(n);
  V(id)[0] = s;
  return id;
}

void Tape::Backward(NodeId root) {
  CheckSize(nodes_[root].size == 1, "Backward");
  grads_.assign(values_.size(), 0.0);
  G(root)[0] = 1.0;
  for (NodeId id = root; id >= 0; --id) BackwardNode(nodes_[id], id);
}

void Tape::BackwardNode(const Node& n, NodeId id) {
  const auto& k = simd::Active();
  const double* dy = grads_.data() + n.val;
  switch (n.op) {
    case Op::kConstant:
      break;
    case Op::kLookup:
      k.axpy(1.0, dy, n.p->grad.data() + n.index * n.p->cols, n.p->cols);
      break;
    case Op::kAffine: {
      Tensor* w = n.p;
      if (n.q != nullptr) k.axpy(1.0, dy, n.q->grad.data(), n.size);
      k.ger(1.0, dy, w->rows, V(n.a), w->cols, w->grad.data());
      k.gemv_t(w->value.data(), w->rows, w->cols, dy, G(n.a));
      break;
    }
    case Op::kConcat: {
      std::size_t off = 0;
      for (std::size_t i = 0; i < n.list_len; ++i) {
        const NodeId p = lists_[n.list + i];
        k.axpy(1.0, dy + off, G(p), nodes_[p].size);
        off += nodes_[p].size;
      }
      break;
    }
    case Op::kTanh: {
      const double* y = V(id);
      double* dx = G(n.a);
      for (std::size_t i = 0; i < n.size; ++i) dx[i] += dy[i] * (1.0 - y[i] * y[i]);
      break;
    }
    case Op::kAdd:
      k.axpy(1.0, dy, G(n.a), n.size);
      k.axpy(1.0, dy, G(n.b), n.size);
      break;
    case Op::kMul: {
      const double* a = V(n.a);
      const double* b = V(n.b);
      double* da = G(n.a);
      for (std::size_t i = 0; i < n.size; ++i) da[i] += dy[i] * b[i];
      double* db = G(n.b);
      for (std::size_t i = 0; i < n.size; ++i) db[i] += dy[i] * a[i];
      break;
    }
    case Op::kScale:
      k.axpy(n.scalar, dy, G(n.a), n.size);
      break;
    case Op::kLstmCell: {
      const std::size_t h = n.size;
      const double* gates = aux_.data() + n.aux;
      const double* cp = V(n.b);
      double* dz = G(n.a);
      double* dcp = G(n.b);
      for (std::size_t j = 0; j < h; ++j) {
        const double i = gates[j];
        const double f = gates[h + j];
        const double g = gates[2 * h + j];
        dz[j] += dy[j] * g * i * (1.0 - i);
        dz[h + j] += dy[j] * cp[j] * f * (1.0 - f);
        dz[2 * h + j] += dy[j] * i * (1.0 - g * g);
        dcp[j] += dy[j] * f;
      }
      break;
    }
    case Op::kLstmHidden: {
      const std::size_t h = n.size;
      const double* z = V(n.a);
      const double* c = V(n.b);
      double* dz = G(n.a);
      double* dc = G(n.b);
      for (std::size_t j = 0; j < h; ++j) {
        const double o = Sigmoid(z[3 * h + j]);
        const double tc = std::tanh(c[j]);
        dz[3 * h + j] += dy[j] * tc * o * (1.0 - o);
        dc[j] += dy[j] * o * (1.0 - tc * tc);
      }
      break;
    }
    case Op::kAttention: {
      const std::size_t len = n.list_len / 2;
      const NodeId* keys = lists_.data() + n.list;
      const NodeId* values = keys + len;
      const double* w = aux_.data() + n.aux;
      const std::size_t dq = nodes_[n.a].size;
      // d weight_i = dy . v_i ; d score_i = w_i (d weight_i - sum_j w_j dw_j)
      std::vector<double> dw(len);
      double mean = 0.0;
      for (std::size_t i = 0; i < len; ++i) {
        dw[i] = k.dot(dy, V(values[i]), n.size);
        mean += w[i] * dw[i];
      }
      for (std::size_t i = 0; i < len; ++i) {
        k.axpy(w[i], dy, G(values[i]), n.size);
        const double ds = w[i] * (dw[i] - mean);
        k.axpy(ds, V(n.a), G(keys[i]), dq);
        k.axpy(ds, V(keys[i]), G(n.a), dq);
      }
      break;
    }
    case Op::kDotParam:
      k.axpy(dy[0], V(n.a), n.p->grad.data(), n.p->size());
      k.axpy(dy[0], n.p->value.data(), G(n.a), n.p->size());
      break;
    case Op::kStack:
      for (std::size_t i = 0; i < n.list_len; ++i) {
        G(lists_[n.list + i])[0] += dy[i];
      }
      break;
    case Op::kNegLogSoftmaxPick: {
      const std::size_t m = nodes_[n.a].size;
      const double* p = aux_.data() + n.aux;
      double* dx = G(n.a);
      for (std::size_t i = 0; i < m; ++i) {
        dx[i] += dy[0] * (p[i] - (i == n.index ? 1.0 : 0.0));
      }
      break;
    }
    case Op::kSum:
      for (std::size_t i = 0; i < n.list_len; ++i) {
        G(lists_[n.list + i])[0] += dy[0];
      }
      break;
  }
}

}  // namespace xsem::kernel
