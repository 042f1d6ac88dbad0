#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "panolayout/projection.hpp"

namespace panolayout::ad {

using Shape = std::vector<int>;

std::size_t element_count(const Shape& shape);
std::string shape_string(const Shape& shape);

template <typename T>
struct Node {
  Shape shape;
  std::vector<T> value;
  std::vector<T> grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> parents;
  // Reads this node's grad and accumulates into the parents' grads.
  std::function<void(Node&)> backward;

  void ensure_grad() {
    if (grad.size() != value.size()) grad.assign(value.size(), T{0});
  }
};

/// Dense n-D value participating in a dynamically recorded graph. Copies
/// share the node; operations build new nodes and record their adjoints
/// only when some input requires a gradient.
template <typename T>
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<Node<T>> node) : node_(std::move(node)) {}

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<T> values, bool requires_grad = false);

  bool defined() const { return node_ != nullptr; }
  const Shape& shape() const { return node_->shape; }
  int dim(std::size_t i) const { return node_->shape.at(i); }
  std::size_t size() const { return node_->value.size(); }
  bool requires_grad() const { return node_->requires_grad; }

  std::span<const T> value() const { return node_->value; }
  std::span<T> mutable_value() { return node_->value; }
  /// Empty until a backward pass reached this tensor.
  std::span<const T> grad() const { return node_->grad; }
  T item() const;

  void zero_grad();
  /// Seeds d(self)/d(self) = 1; self must hold a single element.
  void backward();
  Tensor detach() const;

  const std::shared_ptr<Node<T>>& node() const { return node_; }

 private:
  std::shared_ptr<Node<T>> node_;
};

/// While alive on a thread, ops on that thread record no graph.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;
  static bool active();

 private:
  bool previous_;
};

// Elementwise and structural ops. Image tensors are NCHW.
template <typename T> Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);
template <typename T> Tensor<T> scale(const Tensor<T>& a, T s);
template <typename T> Tensor<T> add_scalar(const Tensor<T>& a, T s);
template <typename T> Tensor<T> relu(const Tensor<T>& a);
template <typename T> Tensor<T> sigmoid(const Tensor<T>& a);
template <typename T> Tensor<T> softplus(const Tensor<T>& a);
template <typename T> Tensor<T> sum(const Tensor<T>& a);

/// Zero-padded square convolution; weight is [out, in, k, k], bias [out],
/// padding k / 2.
template <typename T> Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias, int stride);
template <typename T> Tensor<T> upsample2x(const Tensor<T>& x);
template <typename T> Tensor<T> avg_pool2(const Tensor<T>& x);
template <typename T> Tensor<T> global_avg_pool(const Tensor<T>& x);  // [N,C,H,W] -> [N,C]
template <typename T> Tensor<T> linear(const Tensor<T>& x, const Tensor<T>& weight, const Tensor<T>& bias);
/// Inverted dropout; identity when not training or rate == 0.
template <typename T> Tensor<T> dropout(const Tensor<T>& x, double rate, bool training, std::mt19937_64& rng);
/// Equirectangular-to-perspective warp of [N,C,h,2h] features to [N,C,w,w].
template <typename T> Tensor<T> e2p_warp(const Tensor<T>& x, std::shared_ptr<const SamplingGrid> grid);

/// Sum over elements of -[t log p + (1 - t) log(1 - p)], p clamped to [eps, 1 - eps].
template <typename T> Tensor<T> bce_sum(const Tensor<T>& pred, std::span<const T> target, T eps = T(1e-7));
template <typename T> Tensor<T> l1_sum(const Tensor<T>& pred, std::span<const T> target);

}  // namespace panolayout::ad
