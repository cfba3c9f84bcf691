#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "intermulti/errors.hpp"

namespace intermulti {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string shape_str(const Shape& shape);

namespace detail {
struct Node;  // defined in tensor.cpp
}

// Dense n-dimensional f64 array participating in a define-by-run reverse-mode
// graph. A Tensor is a shared handle: copies alias the same node, so
// parameters keep their identity across forward passes while each pass
// builds a fresh graph of intermediate nodes on top of them.
//
// Storage is row-major. No broadcasting: every op requires explicit shape
// agreement. Gradient accumulation across fan-out is additive.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor constant(Shape shape, double value);
  static Tensor from(Shape shape, std::vector<double> values,
                     bool requires_grad = false);
  static Tensor scalar(double value);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t size() const;
  bool requires_grad() const;

  // A Tensor is a handle; the buffers behind it stay mutable through a
  // const handle (leaf values are edited by the optimizer and grad_check).
  std::span<const double> values() const;
  std::span<double> values_mut() const;
  std::span<const double> grad() const;
  std::span<double> grad_mut() const;
  void zero_grad() const;

  // Scalar (size-1) tensors only.
  double item() const;

  // Reverse-mode sweep from a scalar node. Seeds d(out)/d(out) = 1 and
  // accumulates into the grad buffer of every reachable node that requires
  // gradients. Call once per graph.
  void backward() const;

  const std::shared_ptr<detail::Node>& shared_node() const { return node_; }

 private:
  std::shared_ptr<detail::Node> node_;
};

// When enabled (per thread), every op checks its output for NaN/Inf and
// throws NumericError naming the op. The trainer turns it on for the
// duration of a run.
void set_finite_checks(bool enabled);
bool finite_checks_enabled();

// ---- ops ------------------------------------------------------------------

Tensor matmul(const Tensor& a, const Tensor& b);           // [MxK]*[KxN]
Tensor matvec(const Tensor& w, const Tensor& x);           // [MxN]*[N] -> [M]
Tensor outer(const Tensor& a, const Tensor& b);            // [D] x [E] -> [DxE]
Tensor maxpool2x2(const Tensor& t);                        // [HxW] -> [H/2xW/2]
Tensor mul(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& t, double c);
Tensor mean(const Tensor& t, std::size_t axis);
Tensor sum(const Tensor& t);                               // all elements -> scalar
Tensor flatten(const Tensor& t);
Tensor concat(std::span<const Tensor> parts, std::size_t axis);
Tensor slice(const Tensor& t, std::size_t axis, std::size_t start,
             std::size_t len);
Tensor sigmoid(const Tensor& t);
Tensor tanh(const Tensor& t);
Tensor relu(const Tensor& t);
Tensor softmax_cross_entropy(const Tensor& logits, std::size_t target_class);
Tensor mse(const Tensor& pred, const Tensor& target);

// ---- gradient checking ----------------------------------------------------

struct GradCheckResult {
  double max_rel_err = 0.0;   // max over checked coordinates
  std::size_t checked = 0;
  std::size_t skipped = 0;    // coordinates near a kink / max tie
};

// Compares the analytic gradient of the scalar-valued builder `f` against
// central finite differences over every coordinate of `inputs`. Relative
// error per coordinate is |analytic - numeric| / max(1, |analytic|,
// |numeric|). Coordinates where forward and backward one-sided differences
// disagree (the perturbation straddles a max tie or a relu kink) are skipped
// rather than reported.
//
// `f` must be deterministic and read the current values of `inputs`;
// `eps` must lie in [1e-6, 1e-4].
GradCheckResult grad_check(const std::function<Tensor()>& f,
                           std::span<const Tensor> inputs, double eps = 1e-5);

}  // namespace intermulti
