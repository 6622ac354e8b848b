#pragma once

#include <cmath>
#include <functional>

#include "resp/grad/var.hpp"

namespace resp::grad {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
};

/// Compares the autodiff gradient of f at x with central differences.
/// Relative error per coordinate is |a - n| / (|a| + |n| + 1e-12).
inline GradCheckResult grad_check(const std::function<Var<double>(const Var<double>&)>& f, const Tensor<double>& x,
                                  double eps = 1e-5) {
  Var<double> xv = parameter(x, "x");
  Var<double> y = f(xv);
  backward(y);
  const Tensor<double> analytic = xv.grad();

  GradCheckResult res;
  Tensor<double> probe = x;
  NoGradGuard ng;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = probe[i];
    probe[i] = orig + eps;
    const double fp = f(constant(probe)).value().item();
    probe[i] = orig - eps;
    const double fm = f(constant(probe)).value().item();
    probe[i] = orig;
    const double num = (fp - fm) / (2.0 * eps);
    const double rel = std::abs(analytic[i] - num) / (std::abs(analytic[i]) + std::abs(num) + 1e-12);
    if (i == 0 || rel > res.max_rel_error) res = {rel, i, analytic[i], num};
  }
  return res;
}

}  // namespace resp::grad
