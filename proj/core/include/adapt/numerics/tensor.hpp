// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <memory>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "adapt/error.hpp"

namespace adapt::nn {

using Shape = std::vector<std::size_t>;

inline std::size_t element_count(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>{});
}

inline std::string to_string(const Shape& shape) {
  std::string out = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(shape[i]);
  }
  return out + ")";
}

template <typename T>
class Tape;

namespace detail {

template <typename T>
struct Node {
  Shape shape;
  std::shared_ptr<std::vector<T>> values;
  std::vector<T> grad;
  bool requires_grad = false;
  // Number of gradient slabs accumulated into this node during backward.
  std::size_t grad_accumulations = 0;
  const Tape<T>* tape = nullptr;

  std::span<T> grad_slab(std::size_t slabs = 1) {
    if (grad.empty()) grad.assign(values->size(), T{});
    grad_accumulations += slabs;
    return grad;
  }
};

}  // namespace detail

/// Dense row-major tensor handle. Copies share storage; values are never
/// modified after construction except through mutable_data() on leaves
/// (parameters updated by an optimizer).
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;

  Tensor(Shape shape, std::vector<T> values, bool requires_grad = false)
      : node_(std::make_shared<detail::Node<T>>()) {
    if (element_count(shape) != values.size()) {
      throw DimensionError("tensor shape " + to_string(shape) + " does not match " +
                           std::to_string(values.size()) + " values");
    }
    node_->shape = std::move(shape);
    node_->values = std::make_shared<std::vector<T>>(std::move(values));
    node_->requires_grad = requires_grad;
  }

  static Tensor zeros(Shape shape, bool requires_grad = false) {
    const auto n = element_count(shape);
    return Tensor(std::move(shape), std::vector<T>(n, T{}), requires_grad);
  }

  static Tensor full(Shape shape, T value, bool requires_grad = false) {
    const auto n = element_count(shape);
    return Tensor(std::move(shape), std::vector<T>(n, value), requires_grad);
  }

  static Tensor scalar(T value, bool requires_grad = false) {
    return Tensor(Shape{}, std::vector<T>{value}, requires_grad);
  }

  /// View over an existing value buffer (used by reshape).
  static Tensor from_shared(Shape shape, std::shared_ptr<std::vector<T>> values,
                            bool requires_grad) {
    if (element_count(shape) != values->size()) {
      throw DimensionError("tensor shape " + to_string(shape) + " does not match " +
                           std::to_string(values->size()) + " values");
    }
    Tensor out;
    out.node_ = std::make_shared<detail::Node<T>>();
    out.node_->shape = std::move(shape);
    out.node_->values = std::move(values);
    out.node_->requires_grad = requires_grad;
    return out;
  }

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t dim(std::size_t axis) const { return node_->shape.at(axis); }
  std::size_t numel() const { return node_->values->size(); }

  std::span<const T> data() const { return *node_->values; }
  std::span<T> mutable_data() { return *node_->values; }

  T item() const {
    if (numel() != 1) throw DimensionError("item() on tensor of shape " + to_string(shape()));
    return (*node_->values)[0];
  }

  bool requires_grad() const { return node_->requires_grad; }
  bool has_grad() const { return !node_->grad.empty(); }
  std::span<const T> grad() const { return node_->grad; }
  std::size_t grad_accumulations() const { return node_->grad_accumulations; }

  void zero_grad() {
    node_->grad.clear();
    node_->grad_accumulations = 0;
  }

  /// Same values, independent gradient slot. Used to give each worker thread
  /// its own view of shared parameters.
  Tensor alias() const {
    Tensor out;
    out.node_ = std::make_shared<detail::Node<T>>();
    out.node_->shape = node_->shape;
    out.node_->values = node_->values;
    out.node_->requires_grad = node_->requires_grad;
    return out;
  }

  Tensor detach() const {
    Tensor out = alias();
    out.node_->requires_grad = false;
    return out;
  }

  Tensor clone(bool requires_grad = false) const {
    return Tensor(node_->shape, *node_->values, requires_grad);
  }

  template <typename U>
  Tensor<U> cast(bool requires_grad = false) const {
    std::vector<U> converted(numel());
    std::transform(data().begin(), data().end(), converted.begin(),
                   [](T v) { return static_cast<U>(v); });
    return Tensor<U>(shape(), std::move(converted), requires_grad);
  }

  bool shares_storage_with(const Tensor& other) const {
    return node_->values == other.node_->values;
  }

  detail::Node<T>& node() const { return *node_; }
  const std::shared_ptr<detail::Node<T>>& node_ptr() const { return node_; }

 private:
  std::shared_ptr<detail::Node<T>> node_;
};

/// Records differentiable operations executed on the current thread while
/// active, in execution order, so reverse traversal is a topological order.
template <typename T>
class Tape {
 public:
  class Scope {
   public:
    explicit Scope(Tape* tape) : previous_(active_) { active_ = tape; }
    ~Scope() { active_ = previous_; }
    Scope(const Scope&) = delete;
    Scope& operator=(const Scope&) = delete;

   private:
    Tape* previous_;
  };

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  [[nodiscard]] Scope activate() { return Scope(this); }

  static Tape* active() { return active_; }

  std::size_t size() const { return entries_.size(); }
  bool consumed() const { return consumed_; }

  void reset() {
    entries_.clear();
    consumed_ = false;
  }

  void record(std::function<void()> backward) { entries_.push_back(std::move(backward)); }

  void backward(const Tensor<T>& loss) {
    if (consumed_) throw TapeError("backward called twice on the same tape without reset");
    if (loss.numel() != 1 || loss.rank() != 0) {
      throw TapeError("backward requires a scalar loss, got shape " + to_string(loss.shape()));
    }
    if (!loss.requires_grad() || loss.node().tape != this) {
      throw TapeError("loss was not produced on this tape");
    }
    consumed_ = true;
    auto& node = loss.node();
    node.grad_slab()[0] += T{1};
    for (auto it = entries_.rbegin(); it != entries_.rend(); ++it) (*it)();
    entries_.clear();
  }

 private:
  std::vector<std::function<void()>> entries_;
  bool consumed_ = false;
  static inline thread_local Tape* active_ = nullptr;
};

}  // namespace adapt::nn
