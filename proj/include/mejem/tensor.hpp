#pragma once

// Dense float64 tensors with define-by-run reverse-mode differentiation.
//
// Every operation below records its inputs and a local backward rule on the
// output node. backward() walks the graph reachable from a scalar root in
// reverse topological order (the tape), so each recorded operation runs its
// backward rule exactly once per call. Leaf gradients accumulate across calls;
// intermediate gradients are reset at the start of every call.

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace mejem {

using Shape = std::vector<std::size_t>;

std::string shape_to_string(const Shape& shape);
std::size_t shape_numel(const Shape& shape);

namespace detail {

struct Node {
  Shape shape;
  std::vector<double> data;
  std::vector<double> grad;  // empty until first accumulation
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  // Reads this->grad and accumulates into parents' grads.
  std::function<void(Node&)> backward_fn;
  std::string op;  // recorded op name, "" for leaves

  bool is_leaf() const { return !backward_fn; }
  void ensure_grad();
};

}  // namespace detail

class Tensor {
 public:
  Tensor();

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<double> values, bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);
  /// [rows.size() x rows[0].size()] matrix; rows must be rectangular.
  static Tensor matrix(const std::vector<std::vector<double>>& rows, bool requires_grad = false);
  static Tensor vector(std::vector<double> values, bool requires_grad = false);

  const Shape& shape() const;
  std::size_t ndim() const { return shape().size(); }
  std::size_t numel() const;
  /// Leading dimension for matrices and vectors.
  std::size_t rows() const;
  /// Trailing dimension of a matrix.
  std::size_t cols() const;

  std::span<const double> data() const;
  /// Mutable payload. Writing into a non-leaf invalidates its recorded backward rule.
  std::span<double> mutable_data();
  double item() const;
  double at(std::size_t i) const;
  double at(std::size_t r, std::size_t c) const;

  bool requires_grad() const;
  Tensor& set_requires_grad(bool on);
  bool has_grad() const;
  /// Gradient buffer; zeros of the right shape if nothing accumulated yet.
  std::vector<double> grad() const;
  void zero_grad();

  bool is_leaf() const;
  bool is_finite() const;
  const std::string& op_name() const;

  /// Accumulates d(this)/d(leaf) into every requires_grad tensor reachable
  /// from this scalar.
  void backward() const;

  /// Same values, no graph history, no gradient tracking.
  Tensor detach() const;
  Tensor clone(bool requires_grad = false) const;

  bool same_node(const Tensor& other) const { return node_ == other.node_; }

  // Used by op implementations.
  explicit Tensor(std::shared_ptr<detail::Node> node);
  const std::shared_ptr<detail::Node>& node() const { return node_; }

 private:
  std::shared_ptr<detail::Node> node_;
};

/// Topologically ordered list of the recorded nodes reachable from a root.
/// Inputs always precede the operations that consume them.
class ComputationTape {
 public:
  explicit ComputationTape(const Tensor& root);

  const std::vector<detail::Node*>& order() const { return order_; }
  std::size_t size() const { return order_.size(); }

  /// Number of recorded (non-leaf) operations on the tape.
  std::size_t op_count() const;

 private:
  std::vector<detail::Node*> order_;
};

// Primitive operations. All accept any mix of tracked and untracked inputs.

/// [m x k] . [k x n] -> [m x n]
Tensor matmul(const Tensor& a, const Tensor& b);
/// Elementwise a + b (identical shapes).
Tensor add(const Tensor& a, const Tensor& b);
/// [n x k] + [k], bias broadcast over rows.
Tensor add_bias(const Tensor& x, const Tensor& bias);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, double c);
Tensor add_scalar(const Tensor& x, double c);
Tensor neg(const Tensor& x);
Tensor square(const Tensor& x);
/// max(x, 0); subgradient at 0 is 0.
Tensor relu(const Tensor& x);
/// max(x - c, 0); subgradient at the kink is 0.
Tensor hinge(const Tensor& x, double c);
/// Row-wise logsumexp over the last axis: [n x K] -> [n], [K] -> [].
Tensor logsumexp(const Tensor& x);
/// Row-wise sum over the last axis: [n x K] -> [n], [K] -> [].
Tensor row_sum(const Tensor& x);
/// out[i] = x[i, index[i]] for x of shape [n x K].
Tensor gather(const Tensor& x, std::span<const int> index);
/// Sum of all elements -> scalar.
Tensor sum(const Tensor& x);
/// Mean of all elements -> scalar. Mean of an empty tensor is a DimensionError.
Tensor mean(const Tensor& x);

Tensor operator+(const Tensor& a, const Tensor& b);
Tensor operator-(const Tensor& a, const Tensor& b);
Tensor operator*(const Tensor& a, const Tensor& b);
Tensor operator*(double c, const Tensor& x);
Tensor operator-(const Tensor& x);

/// Row-wise softmax of [n x K] (no gradient tracking).
Tensor softmax_rows(const Tensor& logits);

}  // namespace mejem
