#pragma once

#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "implicitsr/autograd.hpp"
#include "implicitsr/errors.hpp"
#include "implicitsr/rng.hpp"
#include "implicitsr/tensor.hpp"

namespace isr {

// Ordered, named trainable tensors. Registration order is the canonical
// order for the optimizer and the checkpoint payload.
template <typename T>
struct ParamStoreT {
  std::vector<std::pair<std::string, ag::VarT<T>>> items;

  ag::VarT<T> add(std::string name, TensorT<T> value) {
    for (const auto& [n, v] : items)
      if (n == name) throw ParamError("duplicate parameter name: " + name);
    auto var = ag::leaf(std::move(value), true);
    items.emplace_back(std::move(name), var);
    return var;
  }

  ag::VarT<T> find(const std::string& name) const {
    for (const auto& [n, v] : items)
      if (n == name) return v;
    throw ParamError("unknown parameter: " + name);
  }

  int64_t total_elements() const {
    int64_t n = 0;
    for (const auto& [name, v] : items) n += v->value.numel();
    return n;
  }

  void zero_grads() {
    for (auto& [name, v] : items) v->grad = TensorT<T>();
  }
};

using ParamStore = ParamStoreT<float>;

template <typename T>
TensorT<T> he_normal(std::vector<int64_t> dims, int64_t fan_in, Rng& rng) {
  TensorT<T> t(std::move(dims));
  double sd = std::sqrt(2.0 / static_cast<double>(fan_in));
  for (auto& v : t.data) v = static_cast<T>(rng.normal() * sd);
  return t;
}

template <typename T>
TensorT<T> zeros(std::vector<int64_t> dims) {
  return TensorT<T>(std::move(dims));
}

// Linear layer bundle: weight [out, in] + bias [out].
template <typename T>
struct LinearT {
  ag::VarT<T> w, b;

  LinearT() = default;
  LinearT(ParamStoreT<T>& ps, const std::string& prefix, int64_t in, int64_t out, Rng& rng) {
    w = ps.add(prefix + ".weight", he_normal<T>({out, in}, in, rng));
    b = ps.add(prefix + ".bias", zeros<T>({out}));
  }

  ag::VarT<T> operator()(const ag::VarT<T>& x) const { return ag::linear(x, w, b); }
};

// 3x3 same-padding conv bundle: weight [out, in, 3, 3] + bias [out].
template <typename T>
struct Conv3T {
  ag::VarT<T> w, b;

  Conv3T() = default;
  Conv3T(ParamStoreT<T>& ps, const std::string& prefix, int64_t in, int64_t out, Rng& rng) {
    w = ps.add(prefix + ".weight", he_normal<T>({out, in, 3, 3}, in * 9, rng));
    b = ps.add(prefix + ".bias", zeros<T>({out}));
  }

  ag::VarT<T> operator()(const ag::VarT<T>& x) const { return ag::conv2d3(x, w, b); }
};

}  // namespace isr
