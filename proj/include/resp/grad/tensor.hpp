#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "resp/error.hpp"

namespace resp::grad {

using Shape = std::vector<std::size_t>;

inline std::size_t numel(const Shape& s) {
  return std::accumulate(s.begin(), s.end(), std::size_t{1}, std::multiplies<>());
}

inline std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
  os << ']';
  return os.str();
}

/// Dense row-major array.
template <class T>
struct Tensor {
  Shape shape;
  std::vector<T> data;

  Tensor() = default;
  explicit Tensor(Shape s, T fill = T(0)) : shape(std::move(s)), data(numel(shape), fill) {}
  Tensor(Shape s, std::vector<T> d) : shape(std::move(s)), data(std::move(d)) {
    if (numel(shape) != data.size())
      throw Error(Errc::ShapeMismatch, "data length " + std::to_string(data.size()) + " does not match shape " +
                                           shape_str(shape));
  }

  static Tensor zeros(Shape s) { return Tensor(std::move(s), T(0)); }
  static Tensor scalar(T v) { return Tensor(Shape{1}, std::vector<T>{v}); }

  std::size_t size() const noexcept { return data.size(); }
  std::size_t rank() const noexcept { return shape.size(); }
  std::size_t dim(std::size_t i) const { return shape.at(i); }
  bool empty() const noexcept { return data.empty(); }

  T& operator[](std::size_t i) { return data[i]; }
  const T& operator[](std::size_t i) const { return data[i]; }

  T item() const {
    if (data.size() != 1) throw Error(Errc::ShapeMismatch, "item() on non-scalar " + shape_str(shape));
    return data[0];
  }

  bool all_finite() const {
    return std::all_of(data.begin(), data.end(), [](T v) { return std::isfinite(v); });
  }

  template <class U>
  Tensor<U> cast() const {
    Tensor<U> out;
    out.shape = shape;
    out.data.assign(data.begin(), data.end());
    return out;
  }

  bool operator==(const Tensor&) const = default;
};

}  // namespace resp::grad
