#pragma once
// Dense tensors with tape-based reverse-mode differentiation.
//
// A Tensor is a cheap handle onto a shared node. Values of a node are never
// mutated by primitives; only the optimizer writes parameter values in place,
// and only between steps. Primitives record onto the thread's active Tape when
// any input requires a gradient. Without an active tape nothing is recorded,
// which is how inference runs.

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace trajrest {

using Shape = std::vector<std::size_t>;

class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Raised when a primitive produces NaN or Inf, or an update would.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class GraphError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

std::size_t shape_numel(const Shape& shape);
std::string shape_to_string(const Shape& shape);

template <typename T>
struct TensorNode {
  Shape shape;
  std::shared_ptr<std::vector<T>> values;
  std::vector<T> grad;  // empty until a gradient flows in
  bool requires_grad = false;
};

template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, T value, bool requires_grad = false);
  static Tensor from_values(Shape shape, std::vector<T> values, bool requires_grad = false);
  static Tensor scalar(T value, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t numel() const { return node_->values->size(); }

  std::span<const T> values() const { return *node_->values; }
  // Writable view for optimizer updates. Callers must not hold a graph that
  // still references these values.
  std::span<T> mutable_values() { return *node_->values; }
  T item() const;

  bool requires_grad() const { return node_->requires_grad; }
  bool has_grad() const { return !node_->grad.empty(); }
  std::span<const T> grad() const { return node_->grad; }
  std::span<T> mutable_grad();
  void zero_grad();

  // Shares values with this tensor but owns a separate gradient buffer, so
  // several workers can differentiate through the same parameters at once.
  Tensor alias_with_own_grad() const;
  // Deep copy of the values, no graph, no grad.
  Tensor clone() const;

  const std::shared_ptr<TensorNode<T>>& node() const { return node_; }
  explicit Tensor(std::shared_ptr<TensorNode<T>> node) : node_(std::move(node)) {}

 private:
  std::shared_ptr<TensorNode<T>> node_;
};

enum class RetainGraph { kNo, kYes };

template <typename T>
class Tape {
 public:
  using BackwardFn = std::function<void()>;

  // Installs this tape as the thread's active tape until destruction.
  Tape();
  ~Tape();
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  static Tape* active();

  void record(std::shared_ptr<TensorNode<T>> output, BackwardFn fn);

  // Replays the recorded primitives in reverse. Leaf gradients accumulate.
  // With RetainGraph::kNo the recording is released and a second call raises
  // GraphError until new primitives are recorded.
  void backward(const Tensor<T>& loss, RetainGraph retain = RetainGraph::kNo);

  std::size_t size() const { return entries_.size(); }

 private:
  struct Entry {
    std::shared_ptr<TensorNode<T>> output;
    BackwardFn fn;
  };
  std::vector<Entry> entries_;
  bool consumed_ = false;
  Tape* previous_ = nullptr;
};

// Adds g into node's gradient, allocating it on first use. No-op for nodes
// that do not require a gradient.
template <typename T>
void accumulate_grad(TensorNode<T>& node, std::span<const T> g);

// Throws NumericError naming `where` if any value is NaN or Inf.
template <typename T>
void check_finite(std::span<const T> values, const char* where);

extern template class Tensor<float>;
extern template class Tensor<double>;
extern template class Tape<float>;
extern template class Tape<double>;

}  // namespace trajrest
