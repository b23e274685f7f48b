#include "trajrest/tensor.hpp"

#include <cmath>
#include <sstream>

namespace trajrest {

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return n;
}

std::string shape_to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ']';
  return os.str();
}

namespace {

void validate_shape(const Shape& shape) {
  if (shape.empty()) throw ShapeError("tensor shape must have at least one extent");
  for (std::size_t d : shape) {
    if (d == 0) throw ShapeError("tensor extents must be positive: " + shape_to_string(shape));
  }
}

}  // namespace

template <typename T>
Tensor<T> Tensor<T>::zeros(Shape shape, bool requires_grad) {
  return full(std::move(shape), T(0), requires_grad);
}

template <typename T>
Tensor<T> Tensor<T>::full(Shape shape, T value, bool requires_grad) {
  validate_shape(shape);
  const std::size_t n = shape_numel(shape);
  return from_values(std::move(shape), std::vector<T>(n, value), requires_grad);
}

template <typename T>
Tensor<T> Tensor<T>::from_values(Shape shape, std::vector<T> values, bool requires_grad) {
  validate_shape(shape);
  if (shape_numel(shape) != values.size()) {
    throw ShapeError("value count " + std::to_string(values.size()) + " does not match shape " +
                     shape_to_string(shape));
  }
  check_finite<T>(values, "tensor construction");
  auto node = std::make_shared<TensorNode<T>>();
  node->shape = std::move(shape);
  node->values = std::make_shared<std::vector<T>>(std::move(values));
  node->requires_grad = requires_grad;
  return Tensor(std::move(node));
}

template <typename T>
Tensor<T> Tensor<T>::scalar(T value, bool requires_grad) {
  return from_values({1}, {value}, requires_grad);
}

template <typename T>
T Tensor<T>::item() const {
  if (numel() != 1) throw ShapeError("item() on tensor of shape " + shape_to_string(shape()));
  return (*node_->values)[0];
}

template <typename T>
std::span<T> Tensor<T>::mutable_grad() {
  if (node_->grad.empty()) node_->grad.assign(numel(), T(0));
  return node_->grad;
}

template <typename T>
void Tensor<T>::zero_grad() {
  node_->grad.clear();
}

template <typename T>
Tensor<T> Tensor<T>::alias_with_own_grad() const {
  auto node = std::make_shared<TensorNode<T>>();
  node->shape = node_->shape;
  node->values = node_->values;
  node->requires_grad = node_->requires_grad;
  return Tensor(std::move(node));
}

template <typename T>
Tensor<T> Tensor<T>::clone() const {
  return from_values(shape(), std::vector<T>(values().begin(), values().end()), false);
}

namespace {

template <typename T>
Tape<T>*& active_tape() {
  thread_local Tape<T>* tape = nullptr;
  return tape;
}

}  // namespace

template <typename T>
Tape<T>::Tape() : previous_(active_tape<T>()) {
  active_tape<T>() = this;
}

template <typename T>
Tape<T>::~Tape() {
  active_tape<T>() = previous_;
}

template <typename T>
Tape<T>* Tape<T>::active() {
  return active_tape<T>();
}

template <typename T>
void Tape<T>::record(std::shared_ptr<TensorNode<T>> output, BackwardFn fn) {
  entries_.push_back({std::move(output), std::move(fn)});
  consumed_ = false;
}

template <typename T>
void Tape<T>::backward(const Tensor<T>& loss, RetainGraph retain) {
  if (loss.numel() != 1) {
    throw GraphError("backward() needs a scalar loss, got shape " + shape_to_string(loss.shape()));
  }
  if (consumed_ || entries_.empty()) {
    throw GraphError("backward() called on a consumed graph; record again or retain the graph");
  }
  if (!loss.requires_grad()) throw GraphError("loss does not depend on any tensor requiring grad");

  // Intermediate gradients are per-pass; leaves accumulate.
  for (auto& e : entries_) e.output->grad.clear();
  loss.node()->grad.assign(1, T(1));
  for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) {
    if (it->output->grad.empty()) continue;
    it->fn();
  }
  for (auto& e : entries_) {
    if (e.output != loss.node()) e.output->grad.clear();
  }
  if (retain == RetainGraph::kNo) {
    entries_.clear();
    consumed_ = true;
  }
}

template <typename T>
void accumulate_grad(TensorNode<T>& node, std::span<const T> g) {
  if (!node.requires_grad) return;
  if (node.grad.empty()) {
    node.grad.assign(g.begin(), g.end());
    return;
  }
  for (std::size_t i = 0; i < g.size(); ++i) node.grad[i] += g[i];
}

template <typename T>
void check_finite(std::span<const T> values, const char* where) {
  for (T v : values) {
    if (!std::isfinite(v)) throw NumericError(std::string("non-finite value produced by ") + where);
  }
}

template class Tensor<float>;
template class Tensor<double>;
template class Tape<float>;
template class Tape<double>;
template void accumulate_grad<float>(TensorNode<float>&, std::span<const float>);
template void accumulate_grad<double>(TensorNode<double>&, std::span<const double>);
template void check_finite<float>(std::span<const float>, const char*);
template void check_finite<double>(std::span<const double>, const char*);

}  // namespace trajrest
