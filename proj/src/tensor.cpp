#include "mejem/tensor.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <unordered_set>
#include <utility>

#include "mejem/errors.hpp"

namespace mejem {

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMajor>;
using MutMap = Eigen::Map<RowMajor>;

using NodePtr = std::shared_ptr<detail::Node>;

NodePtr new_node(Shape shape, std::vector<double> data, bool requires_grad) {
  auto n = std::make_shared<detail::Node>();
  n->shape = std::move(shape);
  n->data = std::move(data);
  n->requires_grad = requires_grad;
  return n;
}

// Builds the output node. The backward rule is attached only when some input
// is tracked, so untracked computations leave no graph behind.
Tensor record(Shape shape, std::vector<double> data, std::vector<NodePtr> parents,
              const char* op, std::function<void(detail::Node&)> backward_fn) {
  const bool tracked = std::any_of(parents.begin(), parents.end(),
                                   [](const NodePtr& p) { return p->requires_grad; });
  auto out = new_node(std::move(shape), std::move(data), tracked);
  if (tracked) {
    out->parents = std::move(parents);
    out->backward_fn = std::move(backward_fn);
    out->op = op;
  }
  return Tensor(std::move(out));
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_to_string(a.shape()) +
                         " vs " + shape_to_string(b.shape()));
  }
}

void require_matrix(const Tensor& x, const char* op) {
  if (x.ndim() != 2) {
    throw DimensionError(std::string(op) + ": expected a matrix, got shape " +
                         shape_to_string(x.shape()));
  }
}

// Shape info for ops that reduce over the last axis.
struct LastAxis {
  std::size_t rows;
  std::size_t cols;
  Shape out_shape;
};

LastAxis last_axis(const Tensor& x, const char* op) {
  if (x.ndim() == 1) return {1, x.shape()[0], Shape{}};
  if (x.ndim() == 2) return {x.shape()[0], x.shape()[1], Shape{x.shape()[0]}};
  throw DimensionError(std::string(op) + ": expected rank 1 or 2, got shape " +
                       shape_to_string(x.shape()));
}

template <typename F>
Tensor unary_elementwise(const Tensor& x, const char* op, F value, std::function<double(double)> deriv) {
  std::vector<double> out(x.numel());
  auto in = x.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = value(in[i]);
  return record(x.shape(), std::move(out), {x.node()}, op,
                [deriv = std::move(deriv)](detail::Node& self) {
                  auto& p = *self.parents[0];
                  p.ensure_grad();
                  for (std::size_t i = 0; i < self.grad.size(); ++i) {
                    p.grad[i] += self.grad[i] * deriv(p.data[i]);
                  }
                });
}

}  // namespace

std::string shape_to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto s : shape) n *= s;
  return n;
}

void detail::Node::ensure_grad() {
  if (grad.size() != data.size()) grad.assign(data.size(), 0.0);
}

Tensor::Tensor() : node_(new_node(Shape{0}, {}, false)) {}

Tensor::Tensor(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}

Tensor Tensor::zeros(Shape shape, bool requires_grad) { return full(std::move(shape), 0.0, requires_grad); }

Tensor Tensor::full(Shape shape, double value, bool requires_grad) {
  const auto n = shape_numel(shape);
  return Tensor(new_node(std::move(shape), std::vector<double>(n, value), requires_grad));
}

Tensor Tensor::from(Shape shape, std::vector<double> values, bool requires_grad) {
  if (shape_numel(shape) != values.size()) {
    throw DimensionError("Tensor::from: shape " + shape_to_string(shape) + " needs " +
                         std::to_string(shape_numel(shape)) + " values, got " +
                         std::to_string(values.size()));
  }
  return Tensor(new_node(std::move(shape), std::move(values), requires_grad));
}

Tensor Tensor::scalar(double value, bool requires_grad) { return from(Shape{}, {value}, requires_grad); }

Tensor Tensor::matrix(const std::vector<std::vector<double>>& rows, bool requires_grad) {
  const std::size_t r = rows.size();
  const std::size_t c = r ? rows[0].size() : 0;
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw DimensionError("Tensor::matrix: ragged rows");
    data.insert(data.end(), row.begin(), row.end());
  }
  return from(Shape{r, c}, std::move(data), requires_grad);
}

Tensor Tensor::vector(std::vector<double> values, bool requires_grad) {
  const auto n = values.size();
  return from(Shape{n}, std::move(values), requires_grad);
}

const Shape& Tensor::shape() const { return node_->shape; }
std::size_t Tensor::numel() const { return node_->data.size(); }

std::size_t Tensor::rows() const {
  if (shape().empty()) throw DimensionError("rows() of a scalar");
  return shape()[0];
}

std::size_t Tensor::cols() const {
  require_matrix(*this, "cols()");
  return shape()[1];
}

std::span<const double> Tensor::data() const { return node_->data; }
std::span<double> Tensor::mutable_data() { return node_->data; }

double Tensor::item() const {
  if (numel() != 1) throw DimensionError("item() on tensor of shape " + shape_to_string(shape()));
  return node_->data[0];
}

double Tensor::at(std::size_t i) const { return node_->data.at(i); }

double Tensor::at(std::size_t r, std::size_t c) const {
  require_matrix(*this, "at(r, c)");
  return node_->data.at(r * shape()[1] + c);
}

bool Tensor::requires_grad() const { return node_->requires_grad; }

Tensor& Tensor::set_requires_grad(bool on) {
  if (!is_leaf()) throw ContractError("set_requires_grad on a non-leaf tensor");
  node_->requires_grad = on;
  return *this;
}

bool Tensor::has_grad() const { return !node_->grad.empty(); }

std::vector<double> Tensor::grad() const {
  if (node_->grad.empty()) return std::vector<double>(numel(), 0.0);
  return node_->grad;
}

void Tensor::zero_grad() {
  if (!node_->grad.empty()) std::fill(node_->grad.begin(), node_->grad.end(), 0.0);
}

bool Tensor::is_leaf() const { return node_->is_leaf(); }

bool Tensor::is_finite() const {
  return std::all_of(node_->data.begin(), node_->data.end(), [](double v) { return std::isfinite(v); });
}

const std::string& Tensor::op_name() const { return node_->op; }

Tensor Tensor::detach() const { return Tensor(new_node(shape(), node_->data, false)); }

Tensor Tensor::clone(bool requires_grad) const { return Tensor(new_node(shape(), node_->data, requires_grad)); }

ComputationTape::ComputationTape(const Tensor& root) {
  // Iterative post-order DFS; a node is emitted after all of its parents.
  std::unordered_set<const detail::Node*> visited;
  std::vector<std::pair<detail::Node*, std::size_t>> stack;
  stack.emplace_back(root.node().get(), 0);
  visited.insert(root.node().get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      detail::Node* parent = node->parents[next++].get();
      if (parent->requires_grad && visited.insert(parent).second) stack.emplace_back(parent, 0);
    } else {
      order_.push_back(node);
      stack.pop_back();
    }
  }
}

std::size_t ComputationTape::op_count() const {
  return static_cast<std::size_t>(
      std::count_if(order_.begin(), order_.end(), [](const detail::Node* n) { return !n->is_leaf(); }));
}

void Tensor::backward() const {
  if (!shape().empty()) {
    throw ContractError("backward: root must be a scalar, got shape " + shape_to_string(shape()));
  }
  if (!requires_grad()) return;
  ComputationTape tape(*this);
  for (auto* n : tape.order()) {
    if (!n->is_leaf()) n->grad.assign(n->data.size(), 0.0);
  }
  node_->ensure_grad();
  node_->grad[0] += 1.0;
  const auto& order = tape.order();
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if (!(*it)->is_leaf()) (*it)->backward_fn(**it);
  }
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.ndim() != 2 || b.ndim() != 2 || a.shape()[1] != b.shape()[0]) {
    throw DimensionError("matmul: incompatible shapes " + shape_to_string(a.shape()) + " and " +
                         shape_to_string(b.shape()));
  }
  const auto m = a.shape()[0], k = a.shape()[1], n = b.shape()[1];
  std::vector<double> out(m * n);
  MutMap(out.data(), m, n).noalias() = ConstMap(a.data().data(), m, k) * ConstMap(b.data().data(), k, n);
  return record(Shape{m, n}, std::move(out), {a.node(), b.node()}, "matmul",
                [m, k, n](detail::Node& self) {
                  auto& pa = *self.parents[0];
                  auto& pb = *self.parents[1];
                  ConstMap g(self.grad.data(), m, n);
                  if (pa.requires_grad) {
                    pa.ensure_grad();
                    MutMap(pa.grad.data(), m, k).noalias() += g * ConstMap(pb.data.data(), k, n).transpose();
                  }
                  if (pb.requires_grad) {
                    pb.ensure_grad();
                    MutMap(pb.grad.data(), k, n).noalias() += ConstMap(pa.data.data(), m, k).transpose() * g;
                  }
                });
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] + b.data()[i];
  return record(a.shape(), std::move(out), {a.node(), b.node()}, "add", [](detail::Node& self) {
    for (auto& p : self.parents) {
      if (!p->requires_grad) continue;
      p->ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) p->grad[i] += self.grad[i];
    }
  });
}

Tensor add_bias(const Tensor& x, const Tensor& bias) {
  require_matrix(x, "add_bias");
  if (bias.ndim() != 1 || bias.shape()[0] != x.shape()[1]) {
    throw DimensionError("add_bias: bias shape " + shape_to_string(bias.shape()) +
                         " does not match rows of " + shape_to_string(x.shape()));
  }
  const auto n = x.shape()[0], k = x.shape()[1];
  std::vector<double> out(x.data().begin(), x.data().end());
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < k; ++c) out[r * k + c] += bias.data()[c];
  return record(x.shape(), std::move(out), {x.node(), bias.node()}, "add_bias",
                [n, k](detail::Node& self) {
                  auto& px = *self.parents[0];
                  auto& pb = *self.parents[1];
                  if (px.requires_grad) {
                    px.ensure_grad();
                    for (std::size_t i = 0; i < self.grad.size(); ++i) px.grad[i] += self.grad[i];
                  }
                  if (pb.requires_grad) {
                    pb.ensure_grad();
                    for (std::size_t r = 0; r < n; ++r)
                      for (std::size_t c = 0; c < k; ++c) pb.grad[c] += self.grad[r * k + c];
                  }
                });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] - b.data()[i];
  return record(a.shape(), std::move(out), {a.node(), b.node()}, "sub", [](detail::Node& self) {
    const double sign[2] = {1.0, -1.0};
    for (std::size_t j = 0; j < 2; ++j) {
      auto& p = *self.parents[j];
      if (!p.requires_grad) continue;
      p.ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) p.grad[i] += sign[j] * self.grad[i];
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.data()[i] * b.data()[i];
  return record(a.shape(), std::move(out), {a.node(), b.node()}, "mul", [](detail::Node& self) {
    auto& pa = *self.parents[0];
    auto& pb = *self.parents[1];
    if (pa.requires_grad) {
      pa.ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) pa.grad[i] += self.grad[i] * pb.data[i];
    }
    if (pb.requires_grad) {
      pb.ensure_grad();
      for (std::size_t i = 0; i < self.grad.size(); ++i) pb.grad[i] += self.grad[i] * pa.data[i];
    }
  });
}

Tensor scale(const Tensor& x, double c) {
  return unary_elementwise(x, "scale", [c](double v) { return c * v; }, [c](double) { return c; });
}

Tensor add_scalar(const Tensor& x, double c) {
  return unary_elementwise(x, "add_scalar", [c](double v) { return v + c; }, [](double) { return 1.0; });
}

Tensor neg(const Tensor& x) { return scale(x, -1.0); }

Tensor square(const Tensor& x) {
  return unary_elementwise(x, "square", [](double v) { return v * v; }, [](double v) { return 2.0 * v; });
}

Tensor relu(const Tensor& x) {
  return unary_elementwise(
      x, "relu", [](double v) { return v > 0.0 ? v : 0.0; }, [](double v) { return v > 0.0 ? 1.0 : 0.0; });
}

Tensor hinge(const Tensor& x, double c) {
  return unary_elementwise(
      x, "hinge", [c](double v) { return v > c ? v - c : 0.0; }, [c](double v) { return v > c ? 1.0 : 0.0; });
}

Tensor logsumexp(const Tensor& x) {
  const auto ax = last_axis(x, "logsumexp");
  if (ax.cols == 0) throw DimensionError("logsumexp: empty reduction axis");
  std::vector<double> out(ax.rows);
  auto in = x.data();
  for (std::size_t r = 0; r < ax.rows; ++r) {
    const double* row = in.data() + r * ax.cols;
    const double m = *std::max_element(row, row + ax.cols);
    if (!std::isfinite(m)) {
      out[r] = m;
      continue;
    }
    double s = 0.0;
    for (std::size_t c = 0; c < ax.cols; ++c) s += std::exp(row[c] - m);
    out[r] = m + std::log(s);
  }
  return record(ax.out_shape, std::move(out), {x.node()}, "logsumexp", [ax](detail::Node& self) {
    auto& p = *self.parents[0];
    p.ensure_grad();
    for (std::size_t r = 0; r < ax.rows; ++r) {
      const double lse = self.data[r];
      for (std::size_t c = 0; c < ax.cols; ++c) {
        const std::size_t i = r * ax.cols + c;
        p.grad[i] += self.grad[r] * std::exp(p.data[i] - lse);
      }
    }
  });
}

Tensor row_sum(const Tensor& x) {
  const auto ax = last_axis(x, "row_sum");
  std::vector<double> out(ax.rows, 0.0);
  for (std::size_t r = 0; r < ax.rows; ++r)
    for (std::size_t c = 0; c < ax.cols; ++c) out[r] += x.data()[r * ax.cols + c];
  return record(ax.out_shape, std::move(out), {x.node()}, "row_sum", [ax](detail::Node& self) {
    auto& p = *self.parents[0];
    p.ensure_grad();
    for (std::size_t r = 0; r < ax.rows; ++r)
      for (std::size_t c = 0; c < ax.cols; ++c) p.grad[r * ax.cols + c] += self.grad[r];
  });
}

Tensor gather(const Tensor& x, std::span<const int> index) {
  require_matrix(x, "gather");
  const auto n = x.shape()[0], k = x.shape()[1];
  if (index.size() != n) {
    throw DimensionError("gather: " + std::to_string(index.size()) + " indices for " + std::to_string(n) +
                         " rows");
  }
  std::vector<std::size_t> flat(n);
  std::vector<double> out(n);
  for (std::size_t r = 0; r < n; ++r) {
    if (index[r] < 0 || static_cast<std::size_t>(index[r]) >= k) {
      throw DimensionError("gather: index " + std::to_string(index[r]) + " out of range [0," +
                           std::to_string(k) + ") at row " + std::to_string(r));
    }
    flat[r] = r * k + static_cast<std::size_t>(index[r]);
    out[r] = x.data()[flat[r]];
  }
  return record(Shape{n}, std::move(out), {x.node()}, "gather", [flat = std::move(flat)](detail::Node& self) {
    auto& p = *self.parents[0];
    p.ensure_grad();
    for (std::size_t r = 0; r < flat.size(); ++r) p.grad[flat[r]] += self.grad[r];
  });
}

Tensor sum(const Tensor& x) {
  double s = 0.0;
  for (double v : x.data()) s += v;
  return record(Shape{}, {s}, {x.node()}, "sum", [](detail::Node& self) {
    auto& p = *self.parents[0];
    p.ensure_grad();
    for (auto& g : p.grad) g += self.grad[0];
  });
}

Tensor mean(const Tensor& x) {
  if (x.numel() == 0) throw DimensionError("mean of an empty tensor");
  const double inv = 1.0 / static_cast<double>(x.numel());
  double s = 0.0;
  for (double v : x.data()) s += v;
  return record(Shape{}, {s * inv}, {x.node()}, "mean", [inv](detail::Node& self) {
    auto& p = *self.parents[0];
    p.ensure_grad();
    for (auto& g : p.grad) g += self.grad[0] * inv;
  });
}

Tensor operator+(const Tensor& a, const Tensor& b) { return add(a, b); }
Tensor operator-(const Tensor& a, const Tensor& b) { return sub(a, b); }
Tensor operator*(const Tensor& a, const Tensor& b) { return mul(a, b); }
Tensor operator*(double c, const Tensor& x) { return scale(x, c); }
Tensor operator-(const Tensor& x) { return neg(x); }

Tensor softmax_rows(const Tensor& logits) {
  require_matrix(logits, "softmax_rows");
  const auto n = logits.shape()[0], k = logits.shape()[1];
  const Tensor lse = logsumexp(logits.detach());
  std::vector<double> out(n * k);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < k; ++c) out[r * k + c] = std::exp(logits.data()[r * k + c] - lse.data()[r]);
  return Tensor::from(Shape{n, k}, std::move(out));
}

}  // namespace mejem
