#pragma once

#include <functional>
#include <memory>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "resp/grad/tensor.hpp"

namespace resp::grad {

namespace detail {
inline thread_local bool g_grad_enabled = true;
#ifdef NDEBUG
inline thread_local bool g_check_finite = false;
#else
inline thread_local bool g_check_finite = true;
#endif
}  // namespace detail

/// Disables graph recording on this thread for its lifetime.
class NoGradGuard {
 public:
  NoGradGuard() : prev_(detail::g_grad_enabled) { detail::g_grad_enabled = false; }
  ~NoGradGuard() { detail::g_grad_enabled = prev_; }
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool prev_;
};

inline bool grad_enabled() { return detail::g_grad_enabled; }

/// When on, every op result is scanned for NaN/Inf (default: debug builds).
inline void set_check_finite(bool on) { detail::g_check_finite = on; }
inline bool check_finite_enabled() { return detail::g_check_finite; }

/// One recorded value in the define-by-run graph.
template <class T>
struct Node {
  Tensor<T> value;
  Tensor<T> grad;  // allocated on first accumulation
  bool requires_grad = false;
  bool is_leaf = true;
  std::vector<std::shared_ptr<Node>> parents;
  std::function<void(Node&)> backward_fn;
  std::string name;

  Tensor<T>& grad_buffer() {
    if (grad.data.size() != value.data.size()) grad = Tensor<T>::zeros(value.shape);
    return grad;
  }
};

/// Shared handle to a graph node. Copies alias the same node.
template <class T>
class Var {
 public:
  Var() = default;
  explicit Var(std::shared_ptr<Node<T>> n) : node_(std::move(n)) {}

  const Tensor<T>& value() const { return node_->value; }
  Tensor<T>& mutable_value() { return node_->value; }
  const Shape& shape() const { return node_->value.shape; }
  std::size_t dim(std::size_t i) const { return node_->value.shape.at(i); }
  bool requires_grad() const { return node_->requires_grad; }
  const std::string& name() const { return node_->name; }

  /// Accumulated gradient; zeros when no backward pass reached this node.
  Tensor<T> grad() const {
    if (node_->grad.data.size() == node_->value.data.size()) return node_->grad;
    return Tensor<T>::zeros(node_->value.shape);
  }

  void zero_grad() { node_->grad = Tensor<T>(); }

  Node<T>* node() const { return node_.get(); }
  const std::shared_ptr<Node<T>>& ptr() const { return node_; }
  explicit operator bool() const { return static_cast<bool>(node_); }

 private:
  std::shared_ptr<Node<T>> node_;
};

/// Trainable leaf.
template <class T>
Var<T> parameter(Tensor<T> value, std::string name = {}) {
  auto n = std::make_shared<Node<T>>();
  n->value = std::move(value);
  n->requires_grad = true;
  n->name = std::move(name);
  return Var<T>(std::move(n));
}

/// Non-trainable leaf.
template <class T>
Var<T> constant(Tensor<T> value) {
  auto n = std::make_shared<Node<T>>();
  n->value = std::move(value);
  return Var<T>(std::move(n));
}

/// Creates an op result. `backward` receives the result node, whose grad is
/// populated, and must accumulate into its parents' grad buffers. Recording
/// is skipped when no parent needs a gradient or recording is disabled.
template <class T>
Var<T> make_result(Tensor<T> value, std::vector<Var<T>> parents, std::function<void(Node<T>&)> backward,
                   const char* op = "") {
  if (detail::g_check_finite && !value.all_finite())
    throw Error(Errc::DivergenceDetected, std::string("non-finite output from ") + op);
  auto n = std::make_shared<Node<T>>();
  n->value = std::move(value);
  n->is_leaf = false;
  n->name = op;
  bool needs = false;
  for (const auto& p : parents) needs = needs || p.requires_grad();
  if (needs && detail::g_grad_enabled) {
    n->requires_grad = true;
    for (auto& p : parents) n->parents.push_back(p.ptr());
    n->backward_fn = std::move(backward);
  }
  return Var<T>(std::move(n));
}

/// Reverse-mode sweep from a scalar. Gradients add over every path; leaf
/// gradients persist (and accumulate across calls) until zero_grad.
template <class T>
void backward(const Var<T>& loss) {
  if (loss.value().size() != 1)
    throw Error(Errc::NonScalarLoss, "loss has shape " + shape_str(loss.shape()));
  if (!loss.requires_grad()) return;

  std::vector<Node<T>*> order;
  std::unordered_set<Node<T>*> seen;
  std::vector<std::pair<Node<T>*, std::size_t>> stack{{loss.node(), 0}};
  seen.insert(loss.node());
  while (!stack.empty()) {
    auto& [node, idx] = stack.back();
    if (idx < node->parents.size()) {
      Node<T>* p = node->parents[idx++].get();
      if (p->requires_grad && seen.insert(p).second) stack.push_back({p, 0});
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  loss.node()->grad_buffer().data[0] += T(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node<T>* n = *it;
    if (n->backward_fn && n->grad.data.size() == n->value.data.size()) {
      n->backward_fn(*n);
      if (!n->is_leaf) n->grad = Tensor<T>();  // interior gradients are transient
    }
  }
}

}  // namespace resp::grad
