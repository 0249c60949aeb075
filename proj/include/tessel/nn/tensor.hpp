#pragma once

// Minimal dense 2-D tensor with reverse-mode automatic differentiation.
//
// Only the operations the tiling network needs are provided. Every op that
// reduces over graph neighborhoods sorts its operands into a canonical order
// first, so results are bitwise invariant under node renumbering.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <memory>
#include <numeric>
#include <span>
#include <unordered_set>
#include <vector>

#include "tessel/errors.hpp"

namespace tessel::nn {

namespace detail {
inline thread_local bool grad_enabled = true;
}

// Disables tape recording on this thread for its lifetime.
class NoGradGuard {
public:
  NoGradGuard() : prev_(detail::grad_enabled) { detail::grad_enabled = false; }
  ~NoGradGuard() { detail::grad_enabled = prev_; }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
  bool prev_;
};

template <class T>
struct Node {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<T> value;
  std::vector<T> grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;

  void ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), T(0));
  }
};

template <class T>
class Tensor {
public:
  using value_type = T;

  Tensor() : node_(std::make_shared<Node<T>>()) {}
  Tensor(std::size_t rows, std::size_t cols, T fill = T(0)) : node_(std::make_shared<Node<T>>()) {
    node_->rows = rows;
    node_->cols = cols;
    node_->value.assign(rows * cols, fill);
  }
  Tensor(std::size_t rows, std::size_t cols, std::vector<T> values) : node_(std::make_shared<Node<T>>()) {
    if (values.size() != rows * cols) throw ConfigMismatch("tensor value count does not match shape");
    node_->rows = rows;
    node_->cols = cols;
    node_->value = std::move(values);
  }

  static Tensor parameter(std::size_t rows, std::size_t cols, T fill = T(0)) {
    Tensor t(rows, cols, fill);
    t.node_->requires_grad = true;
    return t;
  }

  std::size_t rows() const { return node_->rows; }
  std::size_t cols() const { return node_->cols; }
  std::size_t size() const { return node_->value.size(); }
  std::array<std::size_t, 2> shape() const { return {node_->rows, node_->cols}; }

  std::vector<T>& value() { return node_->value; }
  const std::vector<T>& value() const { return node_->value; }
  std::vector<T>& grad() { return node_->grad; }
  const std::vector<T>& grad() const { return node_->grad; }
  T& at(std::size_t r, std::size_t c) { return node_->value[r * node_->cols + c]; }
  T at(std::size_t r, std::size_t c) const { return node_->value[r * node_->cols + c]; }

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool v) { node_->requires_grad = v; }
  bool has_tape() const { return static_cast<bool>(node_->backward); }
  void zero_grad() { node_->grad.assign(node_->value.size(), T(0)); }

  Node<T>& node() const { return *node_; }
  const std::shared_ptr<Node<T>>& node_ptr() const { return node_; }

  // Result node for an op over `inputs`; records the tape only when enabled
  // and some input needs gradients.
  static Tensor make_result(std::size_t rows, std::size_t cols, std::initializer_list<const Tensor*> inputs) {
    Tensor out(rows, cols);
    if (!detail::grad_enabled) return out;
    bool any = false;
    for (const Tensor* in : inputs) any = any || in->requires_grad();
    if (!any) return out;
    out.node_->requires_grad = true;
    for (const Tensor* in : inputs) out.node_->parents.push_back(in->node_);
    return out;
  }

  static Tensor make_result(std::size_t rows, std::size_t cols, const std::vector<Tensor>& inputs) {
    Tensor out(rows, cols);
    if (!detail::grad_enabled) return out;
    bool any = false;
    for (const Tensor& in : inputs) any = any || in.requires_grad();
    if (!any) return out;
    out.node_->requires_grad = true;
    for (const Tensor& in : inputs) out.node_->parents.push_back(in.node_);
    return out;
  }

private:
  std::shared_ptr<Node<T>> node_;
};

/// Runs reverse-mode accumulation from a 1x1 tensor. Leaf gradients
/// accumulate until zeroed. Throws NoTape when nothing was recorded.
template <class T>
void backward(const Tensor<T>& loss) {
  if (!loss.requires_grad() || !loss.has_tape()) throw NoTape("loss has no recorded computation");
  if (loss.size() != 1) throw ConfigMismatch("backward expects a scalar loss");

  std::vector<Node<T>*> order;
  std::unordered_set<Node<T>*> visited;
  std::vector<std::pair<Node<T>*, std::size_t>> stack{{&loss.node(), 0}};
  visited.insert(&loss.node());
  while (!stack.empty()) {
    auto& [n, next] = stack.back();
    if (next < n->parents.size()) {
      Node<T>* p = n->parents[next++].get();
      if (p->requires_grad && visited.insert(p).second) stack.emplace_back(p, 0);
    } else {
      order.push_back(n);
      stack.pop_back();
    }
  }
  for (Node<T>* n : order)
    if (n->backward) n->grad.assign(n->value.size(), T(0));
  loss.node().grad.assign(1, T(1));
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node<T>* n = *it;
    if (n->backward) n->backward(*n);
  }
}

// ---------------------------------------------------------------------------
// Ops

template <class T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.cols() != b.rows()) throw ConfigMismatch("matmul shape mismatch");
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  Tensor<T> out = Tensor<T>::make_result(n, m, {&a, &b});
  const T* av = a.value().data();
  const T* bv = b.value().data();
  T* ov = out.value().data();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t p = 0; p < k; ++p) {
      const T s = av[i * k + p];
      const T* brow = bv + p * m;
      T* orow = ov + i * m;
      for (std::size_t j = 0; j < m; ++j) orow[j] += s * brow[j];
    }
  if (out.requires_grad()) {
    out.node().backward = [pa = a.node_ptr().get(), pb = b.node_ptr().get(), n, k, m](Node<T>& self) {
      const T* g = self.grad.data();
      if (pa->requires_grad) {
        pa->ensure_grad();
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t p = 0; p < k; ++p) {
            T acc = 0;
            const T* brow = pb->value.data() + p * m;
            const T* grow = g + i * m;
            for (std::size_t j = 0; j < m; ++j) acc += grow[j] * brow[j];
            pa->grad[i * k + p] += acc;
          }
      }
      if (pb->requires_grad) {
        pb->ensure_grad();
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t p = 0; p < k; ++p) {
            const T s = pa->value[i * k + p];
            T* gb = pb->grad.data() + p * m;
            const T* grow = g + i * m;
            for (std::size_t j = 0; j < m; ++j) gb[j] += s * grow[j];
          }
      }
    };
  }
  return out;
}

template <class T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() != b.shape()) throw ConfigMismatch("add shape mismatch");
  Tensor<T> out = Tensor<T>::make_result(a.rows(), a.cols(), {&a, &b});
  for (std::size_t i = 0; i < a.size(); ++i) out.value()[i] = a.value()[i] + b.value()[i];
  if (out.requires_grad()) {
    out.node().backward = [pa = a.node_ptr().get(), pb = b.node_ptr().get()](Node<T>& self) {
      for (Node<T>* p : {pa, pb}) {
        if (!p->requires_grad) continue;
        p->ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i) p->grad[i] += self.grad[i];
      }
    };
  }
  return out;
}

// a (n x m) + row vector b (1 x m), broadcast over rows.
template <class T>
Tensor<T> add_bias(const Tensor<T>& a, const Tensor<T>& b) {
  if (b.rows() != 1 || b.cols() != a.cols()) throw ConfigMismatch("bias shape mismatch");
  const std::size_t n = a.rows(), m = a.cols();
  Tensor<T> out = Tensor<T>::make_result(n, m, {&a, &b});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) out.value()[i * m + j] = a.value()[i * m + j] + b.value()[j];
  if (out.requires_grad()) {
    out.node().backward = [pa = a.node_ptr().get(), pb = b.node_ptr().get(), n, m](Node<T>& self) {
      if (pa->requires_grad) {
        pa->ensure_grad();
        for (std::size_t i = 0; i < n * m; ++i) pa->grad[i] += self.grad[i];
      }
      if (pb->requires_grad) {
        pb->ensure_grad();
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < m; ++j) pb->grad[j] += self.grad[i * m + j];
      }
    };
  }
  return out;
}

template <class T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() != b.shape()) throw ConfigMismatch("mul shape mismatch");
  Tensor<T> out = Tensor<T>::make_result(a.rows(), a.cols(), {&a, &b});
  for (std::size_t i = 0; i < a.size(); ++i) out.value()[i] = a.value()[i] * b.value()[i];
  if (out.requires_grad()) {
    out.node().backward = [pa = a.node_ptr().get(), pb = b.node_ptr().get()](Node<T>& self) {
      if (pa->requires_grad) {
        pa->ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i) pa->grad[i] += self.grad[i] * pb->value[i];
      }
      if (pb->requires_grad) {
        pb->ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i) pb->grad[i] += self.grad[i] * pa->value[i];
      }
    };
  }
  return out;
}

template <class T>
Tensor<T> leaky_relu(const Tensor<T>& a, T slope) {
  Tensor<T> out = Tensor<T>::make_result(a.rows(), a.cols(), {&a});
  for (std::size_t i = 0; i < a.size(); ++i) {
    const T v = a.value()[i];
    out.value()[i] = v < T(0) ? slope * v : v;
  }
  if (out.requires_grad()) {
    out.node().backward = [pa = a.node_ptr().get(), slope](Node<T>& self) {
      pa->ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i)
        pa->grad[i] += pa->value[i] < T(0) ? slope * self.grad[i] : self.grad[i];
    };
  }
  return out;
}

// Logistic function clamped into the open interval (0, 1): saturated logits
// would otherwise round to exactly 0 or 1. Clamped entries pass no gradient.
// The derivative uses sigma(z) * sigma(-z), which stays accurate when
// 1 - sigma(z) rounds away.
template <class T>
Tensor<T> sigmoid(const Tensor<T>& a) {
  constexpr T lo = std::numeric_limits<T>::min();
  constexpr T hi = T(1) - std::numeric_limits<T>::epsilon() / T(2);
  Tensor<T> out = Tensor<T>::make_result(a.rows(), a.cols(), {&a});
  std::vector<T> slope(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    const T z = a.value()[i];
    const T s = T(1) / (T(1) + std::exp(-z));
    const T c = T(1) / (T(1) + std::exp(z));
    out.value()[i] = std::clamp(s, lo, hi);
    slope[i] = s < lo || s > hi ? T(0) : s * c;
  }
  if (out.requires_grad()) {
    out.node().backward = [pa = a.node_ptr().get(), slope = std::move(slope)](Node<T>& self) {
      pa->ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) pa->grad[i] += self.grad[i] * slope[i];
    };
  }
  return out;
}

// a * (offset + s) with s a learnable 1x1 scalar.
template <class T>
Tensor<T> scale_by(const Tensor<T>& a, const Tensor<T>& s, T offset) {
  if (s.size() != 1) throw ConfigMismatch("scale_by expects a 1x1 scalar");
  Tensor<T> out = Tensor<T>::make_result(a.rows(), a.cols(), {&a, &s});
  const T f = offset + s.value()[0];
  for (std::size_t i = 0; i < a.size(); ++i) out.value()[i] = a.value()[i] * f;
  if (out.requires_grad()) {
    out.node().backward = [pa = a.node_ptr().get(), ps = s.node_ptr().get(), f](Node<T>& self) {
      if (pa->requires_grad) {
        pa->ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i) pa->grad[i] += self.grad[i] * f;
      }
      if (ps->requires_grad) {
        ps->ensure_grad();
        T acc = 0;
        for (std::size_t i = 0; i < self.grad.size(); ++i) acc += self.grad[i] * pa->value[i];
        ps->grad[0] += acc;
      }
    };
  }
  return out;
}

template <class T>
Tensor<T> concat_cols(const std::vector<Tensor<T>>& parts) {
  if (parts.empty()) throw ConfigMismatch("concat of nothing");
  const std::size_t n = parts.front().rows();
  std::size_t total = 0;
  for (const auto& p : parts) {
    if (p.rows() != n) throw ConfigMismatch("concat row mismatch");
    total += p.cols();
  }
  Tensor<T> out = Tensor<T>::make_result(n, total, parts);
  std::size_t off = 0;
  for (const auto& p : parts) {
    const std::size_t m = p.cols();
    for (std::size_t i = 0; i < n; ++i)
      std::copy_n(p.value().data() + i * m, m, out.value().data() + i * total + off);
    off += m;
  }
  if (out.requires_grad()) {
    std::vector<Node<T>*> ps;
    for (const auto& p : parts) ps.push_back(p.node_ptr().get());
    out.node().backward = [ps, n, total](Node<T>& self) {
      std::size_t off = 0;
      for (Node<T>* p : ps) {
        const std::size_t m = p->cols;
        if (p->requires_grad) {
          p->ensure_grad();
          for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < m; ++j) p->grad[i * m + j] += self.grad[i * total + off + j];
        }
        off += m;
      }
    };
  }
  return out;
}

namespace detail {

// Sum rows of `msgs` (count x c) in lexicographic row order into `out`.
template <class T>
void sorted_row_sum(const T* msgs, std::size_t count, std::size_t c, T* out, std::vector<std::size_t>& idx) {
  idx.resize(count);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::sort(idx.begin(), idx.end(), [&](std::size_t x, std::size_t y) {
    return std::lexicographical_compare(msgs + x * c, msgs + x * c + c, msgs + y * c, msgs + y * c + c);
  });
  for (std::size_t r : idx)
    for (std::size_t j = 0; j < c; ++j) out[j] += msgs[r * c + j];
}

}  // namespace detail

// Incoming messages for one node: (source node, row of the edge-weight table).
struct IncomingEdge {
  int src = 0;
  int weight_row = 0;
};

/// out_i = sum over incoming (k, j) of f_k . Phi_j, where Phi holds one
/// C x C matrix per row (row-major, C*C columns).
template <class T>
Tensor<T> edge_conditioned_sum(const Tensor<T>& f, const Tensor<T>& phi,
                               const std::vector<std::vector<IncomingEdge>>& incoming) {
  const std::size_t n = f.rows(), c = f.cols();
  if (incoming.size() != n) throw ConfigMismatch("incoming lists do not match node count");
  if (phi.rows() > 0 && phi.cols() != c * c) throw ConfigMismatch("edge weights must be C x C");
  Tensor<T> out = Tensor<T>::make_result(n, c, {&f, &phi});
  std::vector<T> msgs;
  std::vector<std::size_t> idx;
  const T* fv = f.value().data();
  const T* pv = phi.value().data();
  for (std::size_t i = 0; i < n; ++i) {
    const auto& in = incoming[i];
    if (in.empty()) continue;
    msgs.assign(in.size() * c, T(0));
    for (std::size_t e = 0; e < in.size(); ++e) {
      const T* fk = fv + static_cast<std::size_t>(in[e].src) * c;
      const T* mat = pv + static_cast<std::size_t>(in[e].weight_row) * c * c;
      T* m = msgs.data() + e * c;
      for (std::size_t a = 0; a < c; ++a) {
        const T s = fk[a];
        const T* row = mat + a * c;
        for (std::size_t b = 0; b < c; ++b) m[b] += s * row[b];
      }
    }
    detail::sorted_row_sum(msgs.data(), in.size(), c, out.value().data() + i * c, idx);
  }
  if (out.requires_grad()) {
    out.node().backward = [pf = f.node_ptr().get(), pp = phi.node_ptr().get(), incoming, n, c](Node<T>& self) {
      if (pf->requires_grad) pf->ensure_grad();
      if (pp->requires_grad) pp->ensure_grad();
      for (std::size_t i = 0; i < n; ++i) {
        const T* g = self.grad.data() + i * c;
        for (const auto& e : incoming[i]) {
          const std::size_t k = static_cast<std::size_t>(e.src);
          const std::size_t w = static_cast<std::size_t>(e.weight_row);
          const T* mat = pp->value.data() + w * c * c;
          const T* fk = pf->value.data() + k * c;
          if (pf->requires_grad) {
            T* gk = pf->grad.data() + k * c;
            for (std::size_t a = 0; a < c; ++a) {
              T acc = 0;
              const T* row = mat + a * c;
              for (std::size_t b = 0; b < c; ++b) acc += row[b] * g[b];
              gk[a] += acc;
            }
          }
          if (pp->requires_grad) {
            T* gm = pp->grad.data() + w * c * c;
            for (std::size_t a = 0; a < c; ++a) {
              const T s = fk[a];
              for (std::size_t b = 0; b < c; ++b) gm[a * c + b] += s * g[b];
            }
          }
        }
      }
    };
  }
  return out;
}

/// out_i = sum over k in adjacency[i] of g_k.
template <class T>
Tensor<T> neighbor_sum(const Tensor<T>& g, const std::vector<std::vector<int>>& adjacency) {
  const std::size_t n = g.rows(), c = g.cols();
  if (adjacency.size() != n) throw ConfigMismatch("adjacency does not match node count");
  Tensor<T> out = Tensor<T>::make_result(n, c, {&g});
  std::vector<T> rows;
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < n; ++i) {
    const auto& adj = adjacency[i];
    if (adj.empty()) continue;
    rows.resize(adj.size() * c);
    for (std::size_t e = 0; e < adj.size(); ++e)
      std::copy_n(g.value().data() + static_cast<std::size_t>(adj[e]) * c, c, rows.data() + e * c);
    detail::sorted_row_sum(rows.data(), adj.size(), c, out.value().data() + i * c, idx);
  }
  if (out.requires_grad()) {
    out.node().backward = [pg = g.node_ptr().get(), adjacency, n, c](Node<T>& self) {
      pg->ensure_grad();
      for (std::size_t i = 0; i < n; ++i)
        for (int k : adjacency[i])
          for (std::size_t j = 0; j < c; ++j) pg->grad[static_cast<std::size_t>(k) * c + j] += self.grad[i * c + j];
    };
  }
  return out;
}

/// Scalar-valued function of `x` whose value and gradient are supplied by the
/// caller; backward adds upstream * gradient to x.
template <class T>
Tensor<T> scalar_function(const Tensor<T>& x, T value, std::vector<T> gradient) {
  if (gradient.size() != x.size()) throw ConfigMismatch("gradient size mismatch");
  Tensor<T> out = Tensor<T>::make_result(1, 1, {&x});
  out.value()[0] = value;
  if (out.requires_grad()) {
    out.node().backward = [px = x.node_ptr().get(), gradient = std::move(gradient)](Node<T>& self) {
      px->ensure_grad();
      for (std::size_t i = 0; i < gradient.size(); ++i) px->grad[i] += self.grad[0] * gradient[i];
    };
  }
  return out;
}

}  // namespace tessel::nn
