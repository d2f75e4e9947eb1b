#ifndef UDSSM_TENSOR_HPP
#define UDSSM_TENSOR_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "udssm/common.hpp"

// Dense row-major tensors of 64-bit reals with reverse-mode automatic
// differentiation. Every operation records its inputs on the result node;
// backward() walks the graph once in reverse topological order and
// accumulates gradients additively into the leaves.

namespace udssm {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_numel(const Shape& s) {
  std::size_t n = 1;
  for (std::size_t e : s) n *= e;
  return n;
}

inline std::string shape_str(const Shape& s) {
  std::string out = "[";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

namespace detail {

struct Node {
  Shape shape;
  std::vector<double> value;
  std::vector<double> grad;  // allocated on first use, same length as value
  bool needs_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  // Pulls this node's grad into the parents' grads. Receives *this so the
  // closure never owns its own node (keeps the graph acyclic for shared_ptr).
  std::function<void(Node&)> backprop;

  void ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), 0.0);
  }
};

}  // namespace detail

class Tensor {
 public:
  Tensor() = default;

  Tensor(Shape shape, std::vector<double> data) {
    if (shape_numel(shape) != data.size()) {
      throw DimensionError("tensor: shape " + shape_str(shape) + " wants " +
                           std::to_string(shape_numel(shape)) +
                           " values, got " + std::to_string(data.size()));
    }
    node_ = std::make_shared<detail::Node>();
    node_->shape = std::move(shape);
    node_->value = std::move(data);
  }

  static Tensor zeros(Shape shape) {
    std::size_t n = shape_numel(shape);
    return Tensor(std::move(shape), std::vector<double>(n, 0.0));
  }

  static Tensor full(Shape shape, double v) {
    std::size_t n = shape_numel(shape);
    return Tensor(std::move(shape), std::vector<double>(n, v));
  }

  static Tensor scalar(double v) { return Tensor({1}, {v}); }

  static Tensor uniform(Shape shape, double lo, double hi, Rng& rng) {
    std::size_t n = shape_numel(shape);
    std::vector<double> data(n);
    for (auto& x : data) x = rng.uniform(lo, hi);
    return Tensor(std::move(shape), std::move(data));
  }

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t numel() const { return node_->value.size(); }
  std::size_t extent(std::size_t axis) const { return node_->shape.at(axis); }

  const std::vector<double>& values() const { return node_->value; }
  std::vector<double>& values_mut() { return node_->value; }

  double item() const {
    if (numel() != 1) {
      throw UsageError("item: tensor has " + std::to_string(numel()) +
                       " elements, expected 1");
    }
    return node_->value[0];
  }

  double at(std::size_t i) const { return node_->value.at(i); }

  double at(std::size_t r, std::size_t c) const {
    if (rank() != 2) throw UsageError("at(r,c): tensor is not a matrix");
    return node_->value.at(r * extent(1) + c);
  }

  Tensor& set_requires_grad(bool b) {
    node_->needs_grad = b;
    return *this;
  }
  bool requires_grad() const { return node_->needs_grad; }

  bool has_grad() const { return node_->grad.size() == node_->value.size(); }

  std::vector<double>& grad() {
    node_->ensure_grad();
    return node_->grad;
  }

  void zero_grad() {
    node_->grad.assign(node_->value.size(), 0.0);
  }

  // Value copy detached from any graph.
  Tensor clone_values() const { return Tensor(shape(), values()); }

  static Tensor from_node(std::shared_ptr<detail::Node> n) {
    Tensor t;
    t.node_ = std::move(n);
    return t;
  }
  const std::shared_ptr<detail::Node>& node() const { return node_; }

 private:
  std::shared_ptr<detail::Node> node_;
};

inline Tensor make_op(Shape shape, std::vector<double> value,
                      const std::vector<Tensor>& inputs,
                      std::function<void(detail::Node&)> backprop) {
  auto n = std::make_shared<detail::Node>();
  n->shape = std::move(shape);
  n->value = std::move(value);
  for (const auto& t : inputs) n->needs_grad = n->needs_grad || t.node()->needs_grad;
  if (n->needs_grad) {
    n->parents.reserve(inputs.size());
    for (const auto& t : inputs) n->parents.push_back(t.node());
    n->backprop = std::move(backprop);
  }
  return Tensor::from_node(n);
}

namespace detail {

inline void check_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " +
                         shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  }
}

// Element strides around `axis` for row-major traversal.
struct AxisView {
  std::size_t outer = 1, axis_extent = 1, inner = 1;
};

inline AxisView axis_view(const Shape& s, std::size_t axis) {
  AxisView v;
  v.axis_extent = s[axis];
  for (std::size_t i = 0; i < axis; ++i) v.outer *= s[i];
  for (std::size_t i = axis + 1; i < s.size(); ++i) v.inner *= s[i];
  return v;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Elementwise operations

inline Tensor add(const Tensor& a, const Tensor& b) {
  detail::check_same_shape("add", a, b);
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.at(i) + b.at(i);
  auto an = a.node(), bn = b.node();
  return make_op(a.shape(), std::move(out), {a, b}, [an, bn](detail::Node& self) {
    if (an->needs_grad) {
      an->ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) an->grad[i] += self.grad[i];
    }
    if (bn->needs_grad) {
      bn->ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) bn->grad[i] += self.grad[i];
    }
  });
}

inline Tensor sub(const Tensor& a, const Tensor& b) {
  detail::check_same_shape("sub", a, b);
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.at(i) - b.at(i);
  auto an = a.node(), bn = b.node();
  return make_op(a.shape(), std::move(out), {a, b}, [an, bn](detail::Node& self) {
    if (an->needs_grad) {
      an->ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) an->grad[i] += self.grad[i];
    }
    if (bn->needs_grad) {
      bn->ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) bn->grad[i] -= self.grad[i];
    }
  });
}

inline Tensor mul(const Tensor& a, const Tensor& b) {
  detail::check_same_shape("mul", a, b);
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.at(i) * b.at(i);
  auto an = a.node(), bn = b.node();
  return make_op(a.shape(), std::move(out), {a, b}, [an, bn](detail::Node& self) {
    if (an->needs_grad) {
      an->ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i)
        an->grad[i] += self.grad[i] * bn->value[i];
    }
    if (bn->needs_grad) {
      bn->ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i)
        bn->grad[i] += self.grad[i] * an->value[i];
    }
  });
}

inline Tensor scale(const Tensor& a, double c) {
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = c * a.at(i);
  auto an = a.node();
  return make_op(a.shape(), std::move(out), {a}, [an, c](detail::Node& self) {
    an->ensure_grad();
    for (std::size_t i = 0; i < self.grad.size(); ++i) an->grad[i] += c * self.grad[i];
  });
}

inline Tensor tanh(const Tensor& a) {
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::tanh(a.at(i));
  auto an = a.node();
  return make_op(a.shape(), std::move(out), {a}, [an](detail::Node& self) {
    an->ensure_grad();
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      double y = self.value[i];
      an->grad[i] += self.grad[i] * (1.0 - y * y);
    }
  });
}

// Branches on the sign so exp never overflows.
inline double stable_sigmoid(double x) {
  if (x >= 0.0) {
    double z = std::exp(-x);
    return 1.0 / (1.0 + z);
  }
  double z = std::exp(x);
  return z / (1.0 + z);
}

inline Tensor sigmoid(const Tensor& a) {
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = stable_sigmoid(a.at(i));
  auto an = a.node();
  return make_op(a.shape(), std::move(out), {a}, [an](detail::Node& self) {
    an->ensure_grad();
    for (std::size_t i = 0; i < self.grad.size(); ++i) {
      double y = self.value[i];
      an->grad[i] += self.grad[i] * y * (1.0 - y);
    }
  });
}

// ---------------------------------------------------------------------------
// Linear algebra

inline Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2) {
    throw DimensionError("matmul: expected matrices, got " + shape_str(a.shape()) +
                         " and " + shape_str(b.shape()));
  }
  if (a.extent(1) != b.extent(0)) {
    throw DimensionError("matmul: inner extents disagree: " + shape_str(a.shape()) +
                         " vs " + shape_str(b.shape()));
  }
  const std::size_t m = a.extent(0), k = a.extent(1), n = b.extent(1);
  std::vector<double> out(m * n, 0.0);
  const auto& av = a.values();
  const auto& bv = b.values();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (std::size_t t = 0; t < k; ++t) acc += av[i * k + t] * bv[t * n + j];
      out[i * n + j] = acc;
    }
  auto an = a.node(), bn = b.node();
  return make_op({m, n}, std::move(out), {a, b},
                 [an, bn, m, k, n](detail::Node& self) {
    if (an->needs_grad) {
      an->ensure_grad();
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t t = 0; t < k; ++t) {
          double acc = 0.0;
          for (std::size_t j = 0; j < n; ++j)
            acc += self.grad[i * n + j] * bn->value[t * n + j];
          an->grad[i * k + t] += acc;
        }
    }
    if (bn->needs_grad) {
      bn->ensure_grad();
      for (std::size_t t = 0; t < k; ++t)
        for (std::size_t j = 0; j < n; ++j) {
          double acc = 0.0;
          for (std::size_t i = 0; i < m; ++i)
            acc += an->value[i * k + t] * self.grad[i * n + j];
          bn->grad[t * n + j] += acc;
        }
    }
  });
}

inline Tensor dot(const Tensor& u, const Tensor& v) {
  if (u.rank() != 1 || v.rank() != 1) {
    throw DimensionError("dot: expected vectors, got " + shape_str(u.shape()) +
                         " and " + shape_str(v.shape()));
  }
  if (u.numel() != v.numel()) {
    throw DimensionError("dot: length mismatch " + shape_str(u.shape()) + " vs " +
                         shape_str(v.shape()));
  }
  double acc = 0.0;
  for (std::size_t i = 0; i < u.numel(); ++i) acc += u.at(i) * v.at(i);
  auto un = u.node(), vn = v.node();
  return make_op({1}, {acc}, {u, v}, [un, vn](detail::Node& self) {
    double g = self.grad[0];
    if (un->needs_grad) {
      un->ensure_grad();
      for (std::size_t i = 0; i < un->value.size(); ++i)
        un->grad[i] += g * vn->value[i];
    }
    if (vn->needs_grad) {
      vn->ensure_grad();
      for (std::size_t i = 0; i < vn->value.size(); ++i)
        vn->grad[i] += g * un->value[i];
    }
  });
}

inline Tensor transpose(const Tensor& a) {
  if (a.rank() != 2) {
    throw DimensionError("transpose: expected matrix, got " + shape_str(a.shape()));
  }
  const std::size_t m = a.extent(0), n = a.extent(1);
  std::vector<double> out(m * n);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j * m + i] = a.at(i * n + j);
  auto an = a.node();
  return make_op({n, m}, std::move(out), {a}, [an, m, n](detail::Node& self) {
    an->ensure_grad();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j)
        an->grad[i * n + j] += self.grad[j * m + i];
  });
}

inline Tensor reshape(const Tensor& a, Shape shape) {
  if (shape_numel(shape) != a.numel()) {
    throw DimensionError("reshape: cannot view " + shape_str(a.shape()) + " as " +
                         shape_str(shape));
  }
  auto an = a.node();
  return make_op(std::move(shape), a.values(), {a}, [an](detail::Node& self) {
    an->ensure_grad();
    for (std::size_t i = 0; i < self.grad.size(); ++i) an->grad[i] += self.grad[i];
  });
}

// Adds a length-R bias vector to every column of an RxC matrix. This is the
// only broadcast the library performs.
inline Tensor add_bias(const Tensor& m, const Tensor& bias) {
  if (m.rank() != 2 || bias.rank() != 1 || bias.numel() != m.extent(0)) {
    throw DimensionError("add_bias: incompatible shapes " + shape_str(m.shape()) +
                         " and " + shape_str(bias.shape()));
  }
  const std::size_t rows = m.extent(0), cols = m.extent(1);
  std::vector<double> out(rows * cols);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c)
      out[r * cols + c] = m.at(r * cols + c) + bias.at(r);
  auto mn = m.node(), bn = bias.node();
  return make_op(m.shape(), std::move(out), {m, bias},
                 [mn, bn, rows, cols](detail::Node& self) {
    if (mn->needs_grad) {
      mn->ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) mn->grad[i] += self.grad[i];
    }
    if (bn->needs_grad) {
      bn->ensure_grad();
      for (std::size_t r = 0; r < rows; ++r) {
        double acc = 0.0;
        for (std::size_t c = 0; c < cols; ++c) acc += self.grad[r * cols + c];
        bn->grad[r] += acc;
      }
    }
  });
}

// ---------------------------------------------------------------------------
// Shape surgery

inline Tensor concat(const std::vector<Tensor>& ts, std::size_t axis) {
  if (ts.empty()) throw DimensionError("concat: empty tensor list");
  const Shape& first = ts[0].shape();
  if (axis >= first.size()) {
    throw DimensionError("concat: axis " + std::to_string(axis) +
                         " out of rank " + std::to_string(first.size()));
  }
  std::size_t total_axis = 0;
  for (const auto& t : ts) {
    if (t.rank() != first.size()) {
      throw DimensionError("concat: rank mismatch " + shape_str(t.shape()) +
                           " vs " + shape_str(first));
    }
    for (std::size_t d = 0; d < first.size(); ++d) {
      if (d != axis && t.shape()[d] != first[d]) {
        throw DimensionError("concat: extent mismatch on axis " + std::to_string(d) +
                             ": " + shape_str(t.shape()) + " vs " + shape_str(first));
      }
    }
    total_axis += t.extent(axis);
  }
  Shape out_shape = first;
  out_shape[axis] = total_axis;
  auto view = detail::axis_view(out_shape, axis);
  std::vector<double> out(shape_numel(out_shape));
  std::size_t offset = 0;
  for (const auto& t : ts) {
    const std::size_t e = t.extent(axis);
    const auto& tv = t.values();
    for (std::size_t o = 0; o < view.outer; ++o) {
      const double* src = tv.data() + o * e * view.inner;
      double* dst = out.data() + (o * total_axis + offset) * view.inner;
      std::copy(src, src + e * view.inner, dst);
    }
    offset += e;
  }
  std::vector<std::shared_ptr<detail::Node>> nodes;
  std::vector<std::size_t> extents;
  for (const auto& t : ts) {
    nodes.push_back(t.node());
    extents.push_back(t.extent(axis));
  }
  return make_op(out_shape, std::move(out), ts,
                 [nodes, extents, view, total_axis](detail::Node& self) {
    std::size_t offset = 0;
    for (std::size_t idx = 0; idx < nodes.size(); ++idx) {
      auto& p = nodes[idx];
      const std::size_t e = extents[idx];
      if (p->needs_grad) {
        p->ensure_grad();
        for (std::size_t o = 0; o < view.outer; ++o) {
          const double* src = self.grad.data() + (o * total_axis + offset) * view.inner;
          double* dst = p->grad.data() + o * e * view.inner;
          for (std::size_t i = 0; i < e * view.inner; ++i) dst[i] += src[i];
        }
      }
      offset += e;
    }
  });
}

inline Tensor slice(const Tensor& t, std::size_t axis, std::size_t a, std::size_t b) {
  if (axis >= t.rank()) {
    throw BoundsError("slice: axis " + std::to_string(axis) + " out of rank " +
                      std::to_string(t.rank()));
  }
  const std::size_t e = t.extent(axis);
  if (!(a < b && b <= e)) {
    throw BoundsError("slice: range [" + std::to_string(a) + "," + std::to_string(b) +
                      ") invalid for extent " + std::to_string(e));
  }
  Shape out_shape = t.shape();
  out_shape[axis] = b - a;
  auto view = detail::axis_view(t.shape(), axis);
  std::vector<double> out(shape_numel(out_shape));
  const auto& tv = t.values();
  for (std::size_t o = 0; o < view.outer; ++o) {
    const double* src = tv.data() + (o * e + a) * view.inner;
    double* dst = out.data() + o * (b - a) * view.inner;
    std::copy(src, src + (b - a) * view.inner, dst);
  }
  auto tn = t.node();
  return make_op(out_shape, std::move(out), {t},
                 [tn, view, a, b, e](detail::Node& self) {
    tn->ensure_grad();
    for (std::size_t o = 0; o < view.outer; ++o) {
      const double* src = self.grad.data() + o * (b - a) * view.inner;
      double* dst = tn->grad.data() + (o * e + a) * view.inner;
      for (std::size_t i = 0; i < (b - a) * view.inner; ++i) dst[i] += src[i];
    }
  });
}

// Column j of a matrix as a plain vector.
inline Tensor column(const Tensor& m, std::size_t j) {
  if (m.rank() != 2) throw DimensionError("column: expected matrix");
  return reshape(slice(m, 1, j, j + 1), {m.extent(0)});
}

// ---------------------------------------------------------------------------
// Softmax family (max-subtraction for stability)

inline Tensor softmax(const Tensor& v) {
  if (v.rank() != 1 || v.numel() == 0) {
    throw DimensionError("softmax: expected non-empty vector, got " +
                         shape_str(v.shape()));
  }
  const std::size_t n = v.numel();
  double m = v.at(0);
  for (std::size_t i = 1; i < n; ++i) m = std::max(m, v.at(i));
  std::vector<double> out(n);
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = std::exp(v.at(i) - m);
    sum += out[i];
  }
  for (std::size_t i = 0; i < n; ++i) out[i] /= sum;
  auto vn = v.node();
  return make_op({n}, std::move(out), {v}, [vn, n](detail::Node& self) {
    vn->ensure_grad();
    double gy = 0.0;
    for (std::size_t i = 0; i < n; ++i) gy += self.grad[i] * self.value[i];
    for (std::size_t i = 0; i < n; ++i)
      vn->grad[i] += self.value[i] * (self.grad[i] - gy);
  });
}

inline Tensor log_softmax(const Tensor& v) {
  if (v.rank() != 1 || v.numel() == 0) {
    throw DimensionError("log_softmax: expected non-empty vector, got " +
                         shape_str(v.shape()));
  }
  const std::size_t n = v.numel();
  double m = v.at(0);
  for (std::size_t i = 1; i < n; ++i) m = std::max(m, v.at(i));
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += std::exp(v.at(i) - m);
  const double lse = m + std::log(sum);
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = v.at(i) - lse;
  auto vn = v.node();
  return make_op({n}, std::move(out), {v}, [vn, n](detail::Node& self) {
    vn->ensure_grad();
    double gsum = 0.0;
    for (std::size_t i = 0; i < n; ++i) gsum += self.grad[i];
    for (std::size_t i = 0; i < n; ++i)
      vn->grad[i] += self.grad[i] - std::exp(self.value[i]) * gsum;
  });
}

// ---------------------------------------------------------------------------
// Reductions

inline Tensor sum(const Tensor& t) {
  double acc = 0.0;
  for (std::size_t i = 0; i < t.numel(); ++i) acc += t.at(i);
  auto tn = t.node();
  return make_op({1}, {acc}, {t}, [tn](detail::Node& self) {
    tn->ensure_grad();
    for (std::size_t i = 0; i < tn->value.size(); ++i) tn->grad[i] += self.grad[0];
  });
}

inline Tensor mean(const Tensor& t) {
  if (t.numel() == 0) throw DimensionError("mean: empty tensor");
  const double inv = 1.0 / static_cast<double>(t.numel());
  double acc = 0.0;
  for (std::size_t i = 0; i < t.numel(); ++i) acc += t.at(i);
  auto tn = t.node();
  return make_op({1}, {acc * inv}, {t}, [tn, inv](detail::Node& self) {
    tn->ensure_grad();
    for (std::size_t i = 0; i < tn->value.size(); ++i)
      tn->grad[i] += self.grad[0] * inv;
  });
}

// ---------------------------------------------------------------------------
// Backward pass

inline void backward(const Tensor& root) {
  if (root.numel() != 1) {
    throw UsageError("backward: root must be scalar, got shape " +
                     shape_str(root.shape()));
  }
  detail::Node* rn = root.node().get();
  rn->ensure_grad();
  rn->grad[0] = 1.0;
  if (!rn->needs_grad) return;

  // Reverse post-order DFS = topological order: every consumer is processed
  // before the node it feeds, so each node sees its full gradient exactly once.
  struct Frame {
    detail::Node* n;
    std::size_t next = 0;
  };
  std::vector<detail::Node*> order;
  std::unordered_set<detail::Node*> seen{rn};
  std::vector<Frame> stack{{rn}};
  while (!stack.empty()) {
    Frame& f = stack.back();
    if (f.next < f.n->parents.size()) {
      detail::Node* p = f.n->parents[f.next++].get();
      if (p->needs_grad && !seen.count(p)) {
        seen.insert(p);
        stack.push_back({p});
      }
    } else {
      order.push_back(f.n);
      stack.pop_back();
    }
  }
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    detail::Node* n = *it;
    if (n->backprop) {
      n->ensure_grad();
      n->backprop(*n);
    }
  }
}

// ---------------------------------------------------------------------------
// Finite-difference gradient verification

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::size_t coords_checked = 0;
  bool pass = false;
  std::string worst_param;
  std::size_t worst_index = 0;
};

// Compares analytic gradients of `loss_fn` against central differences.
// `loss_fn` must be deterministic (dropout disabled) and rebuild its graph
// from the given parameter tensors on every call. `sample_per_param` = 0
// checks every coordinate.
inline GradCheckReport finite_diff_check(
    const std::function<Tensor()>& loss_fn,
    const std::vector<std::pair<std::string, Tensor>>& params,
    double step, double tolerance,
    std::size_t sample_per_param = 0, std::uint64_t seed = 0) {
  if (!(step > 0.0 && step <= 1e-3)) {
    throw ConfigError("finite_diff_check: step must be in (0, 1e-3]");
  }
  for (const auto& [name, t] : params) Tensor(t).zero_grad();
  Tensor root = loss_fn();
  backward(root);
  std::vector<std::vector<double>> analytic;
  analytic.reserve(params.size());
  for (const auto& [name, t] : params) {
    Tensor h = t;  // handles share the node
    analytic.push_back(h.has_grad() ? h.grad()
                                    : std::vector<double>(h.numel(), 0.0));
  }

  GradCheckReport report;
  Rng rng(seed);
  for (std::size_t p = 0; p < params.size(); ++p) {
    Tensor t = params[p].second;
    std::vector<std::size_t> idx(t.numel());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    if (sample_per_param > 0 && idx.size() > sample_per_param) {
      rng.shuffle(idx);
      idx.resize(sample_per_param);
    }
    for (std::size_t i : idx) {
      double orig = t.values_mut()[i];
      t.values_mut()[i] = orig + step;
      double lp = loss_fn().item();
      t.values_mut()[i] = orig - step;
      double lm = loss_fn().item();
      t.values_mut()[i] = orig;
      double fd = (lp - lm) / (2.0 * step);
      double an = analytic[p][i];
      double denom = std::max({std::abs(fd), std::abs(an), 1e-6});
      double rel = std::abs(fd - an) / denom;
      ++report.coords_checked;
      if (rel > report.max_rel_error) {
        report.max_rel_error = rel;
        report.worst_param = params[p].first;
        report.worst_index = i;
      }
    }
  }
  report.pass = report.max_rel_error <= tolerance;
  return report;
}

}  // namespace udssm

#endif  // UDSSM_TENSOR_HPP
