#pragma once

#include <cmath>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "resp/grad/checkpoint.hpp"
#include "resp/grad/var.hpp"
#include "resp/seed.hpp"

namespace resp::grad {

/// Named trainable tensors in registration order.
template <class T>
class ParamSet {
 public:
  Var<T> add(std::string name, Tensor<T> value) {
    for (const auto& n : names_)
      if (n == name) throw Error(Errc::InvalidArgument, "duplicate parameter " + name);
    names_.push_back(name);
    vars_.push_back(parameter(std::move(value), std::move(name)));
    return vars_.back();
  }

  const Var<T>& operator[](std::string_view name) const {
    for (std::size_t i = 0; i < names_.size(); ++i)
      if (names_[i] == name) return vars_[i];
    throw Error(Errc::NotFound, "no parameter named " + std::string(name));
  }

  bool contains(std::string_view name) const {
    for (const auto& n : names_)
      if (n == name) return true;
    return false;
  }

  const std::vector<std::string>& names() const { return names_; }
  const std::vector<Var<T>>& vars() const { return vars_; }
  std::size_t size() const { return vars_.size(); }
  bool empty() const { return vars_.empty(); }

  std::size_t element_count() const {
    std::size_t n = 0;
    for (const auto& v : vars_) n += v.value().size();
    return n;
  }

  /// Fresh leaves holding converted copies of every value.
  template <class U>
  ParamSet<U> cast() const {
    ParamSet<U> out;
    for (std::size_t i = 0; i < vars_.size(); ++i) out.add(names_[i], vars_[i].value().template cast<U>());
    return out;
  }

  /// Deep copy; the result shares no nodes with this set.
  ParamSet clone() const { return cast<T>(); }

  bool values_equal(const ParamSet& o) const {
    if (names_ != o.names_) return false;
    for (std::size_t i = 0; i < vars_.size(); ++i)
      if (!(vars_[i].value() == o.vars_[i].value())) return false;
    return true;
  }

  std::vector<std::pair<std::string, const Tensor<T>*>> tensors(const std::string& prefix = {}) const {
    std::vector<std::pair<std::string, const Tensor<T>*>> out;
    for (std::size_t i = 0; i < vars_.size(); ++i) out.emplace_back(prefix + names_[i], &vars_[i].value());
    return out;
  }

  /// Overwrites values from a decoded checkpoint; every parameter must be
  /// present under prefix + name with a matching shape.
  void load(const std::vector<NamedTensor>& saved, const std::string& prefix = {}) {
    for (std::size_t i = 0; i < vars_.size(); ++i) {
      const std::string want = prefix + names_[i];
      const NamedTensor* hit = nullptr;
      for (const auto& s : saved)
        if (s.name == want) hit = &s;
      if (!hit) throw Error(Errc::NotFound, "checkpoint lacks parameter " + want);
      Tensor<T> v = hit->is_f32 ? hit->f32.template cast<T>() : hit->f64.template cast<T>();
      if (v.shape != vars_[i].shape())
        throw Error(Errc::ShapeMismatch, "checkpoint shape " + shape_str(v.shape) + " for " + want + ", expected " +
                                             shape_str(vars_[i].shape()));
      vars_[i].mutable_value() = std::move(v);
    }
  }

 private:
  std::vector<std::string> names_;
  std::vector<Var<T>> vars_;
};

/// Uniform(-b, b) with b = sqrt(6 / fan_in).
template <class T>
Tensor<T> he_uniform(Shape shape, std::size_t fan_in, Rng& rng) {
  Tensor<T> t(std::move(shape));
  const double b = std::sqrt(6.0 / static_cast<double>(fan_in));
  for (auto& v : t.data) v = static_cast<T>(uniform(rng, -b, b));
  return t;
}

}  // namespace resp::grad
