#include "intermulti/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_set>
#include <utility>

namespace intermulti {

namespace detail {

struct Node {
  Shape shape;
  std::vector<double> values;
  std::vector<double> grad;  // allocated iff requires_grad
  bool requires_grad = false;
  const char* op = nullptr;  // null for leaves
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward;
};

}  // namespace detail

using detail::Node;

std::size_t numel(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t e : shape) n *= e;
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

namespace {

thread_local bool g_finite_checks = false;

[[noreturn]] void shape_fail(const char* op, const std::string& detail) {
  throw ShapeError(std::string(op) + ": " + detail);
}

void require_rank(const char* op, const Tensor& t, std::size_t rank) {
  if (t.rank() != rank) {
    shape_fail(op, "expected rank-" + std::to_string(rank) + " tensor, got " +
                       shape_str(t.shape()));
  }
}

void require_same_shape(const char* op, const Tensor& a, const Tensor& b) {
  if (a.shape() != b.shape()) {
    shape_fail(op, "shape mismatch " + shape_str(a.shape()) + " vs " +
                       shape_str(b.shape()));
  }
}

// Op node whose requires_grad is inherited from the parents. The backward
// closure receives the finished node and adds into parent grad buffers.
Tensor new_op(const char* name, Shape shape,
              std::initializer_list<Tensor> parents,
              std::function<void(Node&)> backward) {
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->values.assign(numel(node->shape), 0.0);
  node->op = name;
  node->parents.reserve(parents.size());
  for (const Tensor& p : parents) {
    if (!p.defined()) shape_fail(name, "undefined operand");
    node->parents.push_back(p.shared_node());
    if (p.requires_grad()) node->requires_grad = true;
  }
  if (node->requires_grad) {
    node->grad.assign(node->values.size(), 0.0);
    node->backward = std::move(backward);
  }
  return Tensor(std::move(node));
}

Tensor new_op(const char* name, Shape shape, std::vector<Tensor> parents,
              std::function<void(Node&)> backward) {
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->values.assign(numel(node->shape), 0.0);
  node->op = name;
  node->parents.reserve(parents.size());
  for (const Tensor& p : parents) {
    if (!p.defined()) shape_fail(name, "undefined operand");
    node->parents.push_back(p.shared_node());
    if (p.requires_grad()) node->requires_grad = true;
  }
  if (node->requires_grad) {
    node->grad.assign(node->values.size(), 0.0);
    node->backward = std::move(backward);
  }
  return Tensor(std::move(node));
}

void finish(const char* op, const Tensor& t) {
  if (!g_finite_checks) return;
  for (double v : t.values()) {
    if (!std::isfinite(v)) {
      throw NumericError(op, std::string("non-finite value produced by op '") +
                                 op + "'");
    }
  }
}

std::shared_ptr<Node> make_leaf(Shape shape, std::vector<double> values,
                                bool requires_grad) {
  auto node = std::make_shared<Node>();
  node->shape = std::move(shape);
  node->values = std::move(values);
  node->requires_grad = requires_grad;
  if (requires_grad) node->grad.assign(node->values.size(), 0.0);
  return node;
}

// Grad buffer of parent i, or nullptr when that parent takes no gradient.
double* parent_grad(Node& node, std::size_t i) {
  Node& p = *node.parents[i];
  return p.requires_grad ? p.grad.data() : nullptr;
}

}  // namespace

void set_finite_checks(bool enabled) { g_finite_checks = enabled; }

bool finite_checks_enabled() { return g_finite_checks; }

// ---- Tensor -----------------------------------------------------------------

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  std::size_t n = numel(shape);
  return Tensor(make_leaf(std::move(shape), std::vector<double>(n, 0.0),
                          requires_grad));
}

Tensor Tensor::constant(Shape shape, double value) {
  std::size_t n = numel(shape);
  return Tensor(
      make_leaf(std::move(shape), std::vector<double>(n, value), false));
}

Tensor Tensor::from(Shape shape, std::vector<double> values,
                    bool requires_grad) {
  if (numel(shape) != values.size()) {
    throw ShapeError("Tensor::from: " + shape_str(shape) + " needs " +
                     std::to_string(numel(shape)) + " values, got " +
                     std::to_string(values.size()));
  }
  return Tensor(make_leaf(std::move(shape), std::move(values), requires_grad));
}

Tensor Tensor::scalar(double value) { return from({1}, {value}); }

const Shape& Tensor::shape() const { return node_->shape; }

std::size_t Tensor::size() const { return node_->values.size(); }

bool Tensor::requires_grad() const { return node_->requires_grad; }

std::span<const double> Tensor::values() const { return node_->values; }

std::span<double> Tensor::values_mut() const { return node_->values; }

std::span<const double> Tensor::grad() const {
  if (!node_->requires_grad) {
    throw ShapeError("grad() on a tensor that does not require gradients");
  }
  return node_->grad;
}

std::span<double> Tensor::grad_mut() const {
  if (!node_->requires_grad) {
    throw ShapeError("grad_mut() on a tensor that does not require gradients");
  }
  return node_->grad;
}

void Tensor::zero_grad() const {
  if (node_->requires_grad) {
    std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
  }
}

double Tensor::item() const {
  if (size() != 1) {
    throw ShapeError("item() on non-scalar tensor " + shape_str(shape()));
  }
  return node_->values[0];
}

void Tensor::backward() const {
  if (!defined()) throw ShapeError("backward() on empty tensor");
  if (size() != 1) {
    throw ShapeError("backward() requires a scalar root, got " +
                     shape_str(shape()));
  }
  if (!node_->requires_grad) {
    throw ShapeError("backward() on a graph with no gradient-requiring leaves");
  }

  // Iterative post-order DFS; sequence graphs can be deep.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack;
  stack.emplace_back(node_.get(), 0);
  visited.insert(node_.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* parent = node->parents[next++].get();
      if (parent->requires_grad && visited.insert(parent).second) {
        stack.emplace_back(parent, 0);
      }
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  node_->grad[0] = 1.0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* node = *it;
    if (node->backward) node->backward(*node);
  }
}

// ---- linear algebra ---------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank("matmul", a, 2);
  require_rank("matmul", b, 2);
  const std::size_t m = a.shape()[0], k = a.shape()[1];
  const std::size_t k2 = b.shape()[0], n = b.shape()[1];
  if (k != k2) {
    shape_fail("matmul", "inner dimensions disagree: " + shape_str(a.shape()) +
                             " vs " + shape_str(b.shape()));
  }
  Tensor out = new_op("matmul", {m, n}, {a, b}, [m, k, n](Node& self) {
    const double* g = self.grad.data();
    const double* av = self.parents[0]->values.data();
    const double* bv = self.parents[1]->values.data();
    if (double* ag = parent_grad(self, 0)) {
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) {
          const double gij = g[i * n + j];
          for (std::size_t l = 0; l < k; ++l) ag[i * k + l] += gij * bv[l * n + j];
        }
    }
    if (double* bg = parent_grad(self, 1)) {
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t l = 0; l < k; ++l) {
          const double ail = av[i * k + l];
          for (std::size_t j = 0; j < n; ++j) bg[l * n + j] += ail * g[i * n + j];
        }
    }
  });
  double* o = out.values_mut().data();
  const double* av = a.values().data();
  const double* bv = b.values().data();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t l = 0; l < k; ++l) {
      const double ail = av[i * k + l];
      if (ail == 0.0) continue;
      for (std::size_t j = 0; j < n; ++j) o[i * n + j] += ail * bv[l * n + j];
    }
  finish("matmul", out);
  return out;
}

Tensor matvec(const Tensor& w, const Tensor& x) {
  require_rank("matvec", w, 2);
  require_rank("matvec", x, 1);
  const std::size_t m = w.shape()[0], n = w.shape()[1];
  if (n != x.shape()[0]) {
    shape_fail("matvec", "inner dimensions disagree: " + shape_str(w.shape()) +
                             " vs " + shape_str(x.shape()));
  }
  Tensor out = new_op("matvec", {m}, {w, x}, [m, n](Node& self) {
    const double* g = self.grad.data();
    const double* wv = self.parents[0]->values.data();
    const double* xv = self.parents[1]->values.data();
    if (double* wg = parent_grad(self, 0)) {
      for (std::size_t i = 0; i < m; ++i) {
        const double gi = g[i];
        for (std::size_t j = 0; j < n; ++j) wg[i * n + j] += gi * xv[j];
      }
    }
    if (double* xg = parent_grad(self, 1)) {
      for (std::size_t i = 0; i < m; ++i) {
        const double gi = g[i];
        for (std::size_t j = 0; j < n; ++j) xg[j] += gi * wv[i * n + j];
      }
    }
  });
  double* o = out.values_mut().data();
  const double* wv = w.values().data();
  const double* xv = x.values().data();
  for (std::size_t i = 0; i < m; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < n; ++j) acc += wv[i * n + j] * xv[j];
    o[i] = acc;
  }
  finish("matvec", out);
  return out;
}

Tensor outer(const Tensor& a, const Tensor& b) {
  require_rank("outer", a, 1);
  require_rank("outer", b, 1);
  const std::size_t d = a.shape()[0], e = b.shape()[0];
  Tensor out = new_op("outer", {d, e}, {a, b}, [d, e](Node& self) {
    const double* g = self.grad.data();
    const double* av = self.parents[0]->values.data();
    const double* bv = self.parents[1]->values.data();
    if (double* ag = parent_grad(self, 0)) {
      for (std::size_t i = 0; i < d; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < e; ++j) acc += g[i * e + j] * bv[j];
        ag[i] += acc;
      }
    }
    if (double* bg = parent_grad(self, 1)) {
      for (std::size_t j = 0; j < e; ++j) {
        double acc = 0.0;
        for (std::size_t i = 0; i < d; ++i) acc += g[i * e + j] * av[i];
        bg[j] += acc;
      }
    }
  });
  double* o = out.values_mut().data();
  const double* av = a.values().data();
  const double* bv = b.values().data();
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < e; ++j) o[i * e + j] = av[i] * bv[j];
  finish("outer", out);
  return out;
}

Tensor maxpool2x2(const Tensor& t) {
  require_rank("maxpool2x2", t, 2);
  const std::size_t h = t.shape()[0], w = t.shape()[1];
  if (h % 2 != 0 || w % 2 != 0) {
    shape_fail("maxpool2x2",
               "extents must be even, got " + shape_str(t.shape()));
  }
  const std::size_t oh = h / 2, ow = w / 2;
  // Argmax per window, ties broken toward the lowest flat index.
  std::vector<std::size_t> argmax(oh * ow);
  {
    const double* v = t.values().data();
    for (std::size_t i = 0; i < oh; ++i)
      for (std::size_t j = 0; j < ow; ++j) {
        const std::size_t cells[4] = {
            (2 * i) * w + 2 * j, (2 * i) * w + 2 * j + 1,
            (2 * i + 1) * w + 2 * j, (2 * i + 1) * w + 2 * j + 1};
        std::size_t best = cells[0];
        for (int c = 1; c < 4; ++c)
          if (v[cells[c]] > v[best]) best = cells[c];
        argmax[i * ow + j] = best;
      }
  }
  Tensor out =
      new_op("maxpool2x2", {oh, ow}, {t}, [argmax](Node& self) {
        if (double* tg = parent_grad(self, 0)) {
          const double* g = self.grad.data();
          for (std::size_t c = 0; c < argmax.size(); ++c) tg[argmax[c]] += g[c];
        }
      });
  double* o = out.values_mut().data();
  const double* v = t.values().data();
  for (std::size_t c = 0; c < oh * ow; ++c) o[c] = v[argmax[c]];
  finish("maxpool2x2", out);
  return out;
}

// ---- elementwise ------------------------------------------------------------

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape("mul", a, b);
  Tensor out = new_op("mul", a.shape(), {a, b}, [](Node& self) {
    const std::size_t n = self.values.size();
    const double* g = self.grad.data();
    const double* av = self.parents[0]->values.data();
    const double* bv = self.parents[1]->values.data();
    if (double* ag = parent_grad(self, 0))
      for (std::size_t i = 0; i < n; ++i) ag[i] += g[i] * bv[i];
    if (double* bg = parent_grad(self, 1))
      for (std::size_t i = 0; i < n; ++i) bg[i] += g[i] * av[i];
  });
  double* o = out.values_mut().data();
  const double* av = a.values().data();
  const double* bv = b.values().data();
  for (std::size_t i = 0; i < out.size(); ++i) o[i] = av[i] * bv[i];
  finish("mul", out);
  return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape("add", a, b);
  Tensor out = new_op("add", a.shape(), {a, b}, [](Node& self) {
    const std::size_t n = self.values.size();
    const double* g = self.grad.data();
    if (double* ag = parent_grad(self, 0))
      for (std::size_t i = 0; i < n; ++i) ag[i] += g[i];
    if (double* bg = parent_grad(self, 1))
      for (std::size_t i = 0; i < n; ++i) bg[i] += g[i];
  });
  double* o = out.values_mut().data();
  const double* av = a.values().data();
  const double* bv = b.values().data();
  for (std::size_t i = 0; i < out.size(); ++i) o[i] = av[i] + bv[i];
  finish("add", out);
  return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape("sub", a, b);
  Tensor out = new_op("sub", a.shape(), {a, b}, [](Node& self) {
    const std::size_t n = self.values.size();
    const double* g = self.grad.data();
    if (double* ag = parent_grad(self, 0))
      for (std::size_t i = 0; i < n; ++i) ag[i] += g[i];
    if (double* bg = parent_grad(self, 1))
      for (std::size_t i = 0; i < n; ++i) bg[i] -= g[i];
  });
  double* o = out.values_mut().data();
  const double* av = a.values().data();
  const double* bv = b.values().data();
  for (std::size_t i = 0; i < out.size(); ++i) o[i] = av[i] - bv[i];
  finish("sub", out);
  return out;
}

Tensor scale(const Tensor& t, double c) {
  Tensor out = new_op("scale", t.shape(), {t}, [c](Node& self) {
    if (double* tg = parent_grad(self, 0)) {
      const double* g = self.grad.data();
      for (std::size_t i = 0; i < self.values.size(); ++i) tg[i] += c * g[i];
    }
  });
  double* o = out.values_mut().data();
  const double* v = t.values().data();
  for (std::size_t i = 0; i < out.size(); ++i) o[i] = c * v[i];
  finish("scale", out);
  return out;
}

// ---- reductions and reshapes --------------------------------------------------

Tensor mean(const Tensor& t, std::size_t axis) {
  if (axis >= t.rank()) {
    shape_fail("mean", "axis " + std::to_string(axis) + " out of range for " +
                           shape_str(t.shape()));
  }
  const Shape& s = t.shape();
  const std::size_t extent = s[axis];
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= s[i];
  for (std::size_t i = axis + 1; i < s.size(); ++i) inner *= s[i];

  Shape out_shape;
  for (std::size_t i = 0; i < s.size(); ++i)
    if (i != axis) out_shape.push_back(s[i]);
  if (out_shape.empty()) out_shape.push_back(1);

  Tensor out = new_op("mean", out_shape, {t},
                      [outer, inner, extent](Node& self) {
                        if (double* tg = parent_grad(self, 0)) {
                          const double* g = self.grad.data();
                          const double inv = 1.0 / double(extent);
                          for (std::size_t o = 0; o < outer; ++o)
                            for (std::size_t e = 0; e < extent; ++e)
                              for (std::size_t i = 0; i < inner; ++i)
                                tg[(o * extent + e) * inner + i] +=
                                    inv * g[o * inner + i];
                        }
                      });
  double* ov = out.values_mut().data();
  const double* v = t.values().data();
  const double inv = 1.0 / double(extent);
  for (std::size_t o = 0; o < outer; ++o)
    for (std::size_t i = 0; i < inner; ++i) {
      double acc = 0.0;
      for (std::size_t e = 0; e < extent; ++e)
        acc += v[(o * extent + e) * inner + i];
      ov[o * inner + i] = acc * inv;
    }
  finish("mean", out);
  return out;
}

Tensor sum(const Tensor& t) {
  Tensor out = new_op("sum", {1}, {t}, [](Node& self) {
    if (double* tg = parent_grad(self, 0)) {
      const double g = self.grad[0];
      for (std::size_t i = 0; i < self.parents[0]->values.size(); ++i)
        tg[i] += g;
    }
  });
  double acc = 0.0;
  for (double v : t.values()) acc += v;
  out.values_mut()[0] = acc;
  finish("sum", out);
  return out;
}

Tensor flatten(const Tensor& t) {
  Tensor out = new_op("flatten", {t.size()}, {t}, [](Node& self) {
    if (double* tg = parent_grad(self, 0)) {
      const double* g = self.grad.data();
      for (std::size_t i = 0; i < self.values.size(); ++i) tg[i] += g[i];
    }
  });
  std::copy(t.values().begin(), t.values().end(), out.values_mut().begin());
  finish("flatten", out);
  return out;
}

Tensor concat(std::span<const Tensor> parts, std::size_t axis) {
  if (parts.empty()) shape_fail("concat", "empty part list");
  const std::size_t rank = parts[0].rank();
  if (axis >= rank) {
    shape_fail("concat", "axis " + std::to_string(axis) +
                             " out of range for rank " + std::to_string(rank));
  }
  Shape out_shape = parts[0].shape();
  for (std::size_t p = 1; p < parts.size(); ++p) {
    const Shape& s = parts[p].shape();
    if (s.size() != rank) shape_fail("concat", "rank mismatch between parts");
    for (std::size_t i = 0; i < rank; ++i) {
      if (i == axis) continue;
      if (s[i] != out_shape[i]) {
        shape_fail("concat", "part shapes disagree off-axis: " +
                                 shape_str(parts[0].shape()) + " vs " +
                                 shape_str(s));
      }
    }
    out_shape[axis] += s[axis];
  }

  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= out_shape[i];
  for (std::size_t i = axis + 1; i < rank; ++i) inner *= out_shape[i];
  std::vector<std::size_t> extents(parts.size());
  for (std::size_t p = 0; p < parts.size(); ++p)
    extents[p] = parts[p].shape()[axis];
  const std::size_t total_extent = out_shape[axis];

  std::vector<Tensor> parents(parts.begin(), parts.end());
  Tensor out = new_op(
      "concat", out_shape, std::move(parents),
      [outer, inner, extents, total_extent](Node& self) {
        const double* g = self.grad.data();
        std::size_t offset = 0;
        for (std::size_t p = 0; p < extents.size(); ++p) {
          if (double* pg = parent_grad(self, p)) {
            for (std::size_t o = 0; o < outer; ++o)
              for (std::size_t e = 0; e < extents[p]; ++e)
                for (std::size_t i = 0; i < inner; ++i)
                  pg[(o * extents[p] + e) * inner + i] +=
                      g[(o * total_extent + offset + e) * inner + i];
          }
          offset += extents[p];
        }
      });
  double* o = out.values_mut().data();
  std::size_t offset = 0;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    const double* v = parts[p].values().data();
    for (std::size_t ou = 0; ou < outer; ++ou)
      for (std::size_t e = 0; e < extents[p]; ++e)
        for (std::size_t i = 0; i < inner; ++i)
          o[(ou * total_extent + offset + e) * inner + i] =
              v[(ou * extents[p] + e) * inner + i];
    offset += extents[p];
  }
  finish("concat", out);
  return out;
}

Tensor slice(const Tensor& t, std::size_t axis, std::size_t start,
             std::size_t len) {
  if (axis >= t.rank()) {
    shape_fail("slice", "axis " + std::to_string(axis) + " out of range for " +
                            shape_str(t.shape()));
  }
  const Shape& s = t.shape();
  if (start + len > s[axis] || len == 0) {
    shape_fail("slice", "range [" + std::to_string(start) + ", " +
                            std::to_string(start + len) +
                            ") invalid for extent " + std::to_string(s[axis]));
  }
  std::size_t outer = 1, inner = 1;
  for (std::size_t i = 0; i < axis; ++i) outer *= s[i];
  for (std::size_t i = axis + 1; i < s.size(); ++i) inner *= s[i];
  const std::size_t extent = s[axis];

  Shape out_shape = s;
  out_shape[axis] = len;
  Tensor out = new_op("slice", out_shape, {t},
                      [outer, inner, extent, start, len](Node& self) {
                        if (double* tg = parent_grad(self, 0)) {
                          const double* g = self.grad.data();
                          for (std::size_t o = 0; o < outer; ++o)
                            for (std::size_t e = 0; e < len; ++e)
                              for (std::size_t i = 0; i < inner; ++i)
                                tg[(o * extent + start + e) * inner + i] +=
                                    g[(o * len + e) * inner + i];
                        }
                      });
  double* o = out.values_mut().data();
  const double* v = t.values().data();
  for (std::size_t ou = 0; ou < outer; ++ou)
    for (std::size_t e = 0; e < len; ++e)
      for (std::size_t i = 0; i < inner; ++i)
        o[(ou * len + e) * inner + i] = v[(ou * extent + start + e) * inner + i];
  finish("slice", out);
  return out;
}

// ---- activations and losses ---------------------------------------------------

Tensor sigmoid(const Tensor& t) {
  Tensor out = new_op("sigmoid", t.shape(), {t}, [](Node& self) {
    if (double* tg = parent_grad(self, 0)) {
      const double* g = self.grad.data();
      const double* y = self.values.data();
      for (std::size_t i = 0; i < self.values.size(); ++i)
        tg[i] += g[i] * y[i] * (1.0 - y[i]);
    }
  });
  double* o = out.values_mut().data();
  const double* v = t.values().data();
  for (std::size_t i = 0; i < out.size(); ++i) o[i] = 1.0 / (1.0 + std::exp(-v[i]));
  finish("sigmoid", out);
  return out;
}

Tensor tanh(const Tensor& t) {
  Tensor out = new_op("tanh", t.shape(), {t}, [](Node& self) {
    if (double* tg = parent_grad(self, 0)) {
      const double* g = self.grad.data();
      const double* y = self.values.data();
      for (std::size_t i = 0; i < self.values.size(); ++i)
        tg[i] += g[i] * (1.0 - y[i] * y[i]);
    }
  });
  double* o = out.values_mut().data();
  const double* v = t.values().data();
  for (std::size_t i = 0; i < out.size(); ++i) o[i] = std::tanh(v[i]);
  finish("tanh", out);
  return out;
}

Tensor relu(const Tensor& t) {
  Tensor out = new_op("relu", t.shape(), {t}, [](Node& self) {
    if (double* tg = parent_grad(self, 0)) {
      const double* g = self.grad.data();
      const double* x = self.parents[0]->values.data();
      for (std::size_t i = 0; i < self.values.size(); ++i)
        if (x[i] > 0.0) tg[i] += g[i];
    }
  });
  double* o = out.values_mut().data();
  const double* v = t.values().data();
  for (std::size_t i = 0; i < out.size(); ++i) o[i] = v[i] > 0.0 ? v[i] : 0.0;
  finish("relu", out);
  return out;
}

Tensor softmax_cross_entropy(const Tensor& logits, std::size_t target_class) {
  require_rank("softmax_cross_entropy", logits, 1);
  const std::size_t k = logits.shape()[0];
  if (target_class >= k) {
    throw ShapeError("softmax_cross_entropy: class " +
                     std::to_string(target_class) + " out of range for " +
                     std::to_string(k) + " logits");
  }
  // Max-shifted log-sum-exp; the backward uses the cached softmax.
  const double* v = logits.values().data();
  double mx = v[0];
  for (std::size_t i = 1; i < k; ++i) mx = std::max(mx, v[i]);
  double z = 0.0;
  for (std::size_t i = 0; i < k; ++i) z += std::exp(v[i] - mx);
  std::vector<double> softmax(k);
  for (std::size_t i = 0; i < k; ++i) softmax[i] = std::exp(v[i] - mx) / z;
  const double loss = std::log(z) + mx - v[target_class];

  Tensor out = new_op("softmax_cross_entropy", {1}, {logits},
                      [softmax, target_class](Node& self) {
                        if (double* lg = parent_grad(self, 0)) {
                          const double g = self.grad[0];
                          for (std::size_t i = 0; i < softmax.size(); ++i)
                            lg[i] += g * (softmax[i] -
                                          (i == target_class ? 1.0 : 0.0));
                        }
                      });
  out.values_mut()[0] = loss;
  finish("softmax_cross_entropy", out);
  return out;
}

Tensor mse(const Tensor& pred, const Tensor& target) {
  require_same_shape("mse", pred, target);
  const std::size_t n = pred.size();
  Tensor out = new_op("mse", {1}, {pred, target}, [n](Node& self) {
    const double g = self.grad[0];
    const double* pv = self.parents[0]->values.data();
    const double* tv = self.parents[1]->values.data();
    const double c = 2.0 * g / double(n);
    if (double* pg = parent_grad(self, 0))
      for (std::size_t i = 0; i < n; ++i) pg[i] += c * (pv[i] - tv[i]);
    if (double* tg = parent_grad(self, 1))
      for (std::size_t i = 0; i < n; ++i) tg[i] -= c * (pv[i] - tv[i]);
  });
  double acc = 0.0;
  const double* pv = pred.values().data();
  const double* tv = target.values().data();
  for (std::size_t i = 0; i < n; ++i) {
    const double d = pv[i] - tv[i];
    acc += d * d;
  }
  out.values_mut()[0] = acc / double(n);
  finish("mse", out);
  return out;
}

// ---- gradient checking --------------------------------------------------------

GradCheckResult grad_check(const std::function<Tensor()>& f,
                           std::span<const Tensor> inputs, double eps) {
  if (!(eps >= 1e-6 && eps <= 1e-4)) {
    throw ShapeError("grad_check: eps must lie in [1e-6, 1e-4]");
  }
  for (const Tensor& in : inputs) {
    if (!in.requires_grad()) {
      throw ShapeError("grad_check: every input must require gradients");
    }
  }

  auto eval = [&]() {
    Tensor out = f();
    if (out.size() != 1) {
      throw ShapeError("grad_check: f must produce a scalar, got " +
                       shape_str(out.shape()));
    }
    return out;
  };

  // Analytic pass.
  std::vector<std::vector<double>> analytic;
  {
    for (const Tensor& in : inputs) in.zero_grad();
    Tensor out = eval();
    out.backward();
    for (const Tensor& in : inputs)
      analytic.emplace_back(in.grad().begin(), in.grad().end());
  }
  const double f0 = eval().item();

  GradCheckResult result;
  // One-sided differences that disagree mean the perturbation straddles a
  // non-differentiable point (max tie, relu kink); those coordinates are
  // excluded from the reported max.
  const double kink_tol = 1e-2;
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    auto vals = inputs[t].values_mut();
    for (std::size_t i = 0; i < vals.size(); ++i) {
      const double saved = vals[i];
      vals[i] = saved + eps;
      const double fp = eval().item();
      vals[i] = saved - eps;
      const double fm = eval().item();
      vals[i] = saved;

      const double d_c = (fp - fm) / (2.0 * eps);
      const double d_f = (fp - f0) / eps;
      const double d_b = (f0 - fm) / eps;
      if (std::abs(d_f - d_b) >
          kink_tol * std::max({1.0, std::abs(d_f), std::abs(d_b)})) {
        ++result.skipped;
        continue;
      }
      const double a = analytic[t][i];
      const double rel =
          std::abs(a - d_c) / std::max({1.0, std::abs(a), std::abs(d_c)});
      result.max_rel_err = std::max(result.max_rel_err, rel);
      ++result.checked;
    }
  }
  return result;
}

}  // namespace intermulti
