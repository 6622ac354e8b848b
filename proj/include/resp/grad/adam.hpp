#pragma once

#include <cmath>
#include <vector>

#include "resp/grad/var.hpp"

namespace resp::grad {

/// Adam moments for a fixed parameter list; m and v are shaped like the
/// parameters they track.
template <class T>
struct AdamState {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::size_t step = 0;
  std::vector<std::vector<T>> m;
  std::vector<std::vector<T>> v;
};

/// One bias-corrected Adam update. `grads[i]` pairs with `params[i]`.
template <class T>
void adam_step(std::vector<Tensor<T>*>& params, const std::vector<const Tensor<T>*>& grads, AdamState<T>& st) {
  if (params.size() != grads.size()) throw Error(Errc::ShapeMismatch, "adam_step: params/grads count differs");
  if (st.m.empty()) {
    for (auto* p : params) {
      st.m.emplace_back(p->size(), T(0));
      st.v.emplace_back(p->size(), T(0));
    }
  }
  if (st.m.size() != params.size()) throw Error(Errc::ShapeMismatch, "adam_step: state tracks other parameters");
  ++st.step;
  const double bc1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.step));
  const double bc2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.step));
  const T b1 = static_cast<T>(st.beta1), b2 = static_cast<T>(st.beta2);
  const T step_size = static_cast<T>(st.lr / bc1);
  const T inv_sqrt_bc2 = static_cast<T>(1.0 / std::sqrt(bc2));
  const T eps = static_cast<T>(st.epsilon);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor<T>& p = *params[i];
    const Tensor<T>& g = *grads[i];
    if (g.size() != p.size() || st.m[i].size() != p.size())
      throw Error(Errc::ShapeMismatch, "adam_step: gradient shape differs from parameter");
    auto& m = st.m[i];
    auto& v = st.v[i];
    for (std::size_t j = 0; j < p.size(); ++j) {
      const T gj = g[j];
      m[j] = b1 * m[j] + (T(1) - b1) * gj;
      v[j] = b2 * v[j] + (T(1) - b2) * gj * gj;
      p[j] -= step_size * m[j] / (std::sqrt(v[j]) * inv_sqrt_bc2 + eps);
    }
  }
}

/// Adam bound to a list of parameter handles.
template <class T>
class Adam {
 public:
  Adam(std::vector<Var<T>> params, double lr) : params_(std::move(params)) { state_.lr = lr; }

  void zero_grad() {
    for (auto& p : params_) p.zero_grad();
  }

  /// Applies the accumulated gradients; untouched parameters see a zero gradient.
  void step() {
    std::vector<Tensor<T>> grads;
    grads.reserve(params_.size());
    for (auto& p : params_) grads.push_back(p.grad());
    std::vector<Tensor<T>*> ps;
    std::vector<const Tensor<T>*> gs;
    for (std::size_t i = 0; i < params_.size(); ++i) {
      ps.push_back(&params_[i].mutable_value());
      gs.push_back(&grads[i]);
    }
    adam_step(ps, gs, state_);
  }

  const AdamState<T>& state() const { return state_; }
  void set_lr(double lr) { state_.lr = lr; }

 private:
  std::vector<Var<T>> params_;
  AdamState<T> state_;
};

}  // namespace resp::grad
