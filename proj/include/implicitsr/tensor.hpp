#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "implicitsr/errors.hpp"

namespace isr {

// Dense row-major tensor. Images and feature maps use [B, C, H, W];
// MLP activations use [rows, cols].
template <typename T>
struct TensorT {
  std::vector<int64_t> dims;
  std::vector<T> data;

  TensorT() = default;
  explicit TensorT(std::vector<int64_t> d) : dims(std::move(d)) {
    data.assign(static_cast<size_t>(count(dims)), T(0));
  }
  TensorT(std::vector<int64_t> d, std::vector<T> v) : dims(std::move(d)), data(std::move(v)) {
    if (static_cast<int64_t>(data.size()) != count(dims))
      throw ShapeError("tensor data size does not match dims");
  }

  static int64_t count(const std::vector<int64_t>& d) {
    int64_t n = 1;
    for (int64_t x : d) {
      if (x < 0) throw ShapeError("negative dimension");
      n *= x;
    }
    return n;
  }

  int64_t numel() const { return static_cast<int64_t>(data.size()); }
  int64_t dim(size_t i) const { return dims.at(i); }
  bool same_shape(const TensorT& o) const { return dims == o.dims; }

  T* ptr() { return data.data(); }
  const T* ptr() const { return data.data(); }

  void fill(T v) { std::fill(data.begin(), data.end(), v); }

  // 4-D accessors for [B, C, H, W] layouts.
  T& at4(int64_t b, int64_t c, int64_t y, int64_t x) {
    return data[((b * dims[1] + c) * dims[2] + y) * dims[3] + x];
  }
  T at4(int64_t b, int64_t c, int64_t y, int64_t x) const {
    return data[((b * dims[1] + c) * dims[2] + y) * dims[3] + x];
  }

  template <typename U>
  TensorT<U> cast() const {
    TensorT<U> out;
    out.dims = dims;
    out.data.resize(data.size());
    for (size_t i = 0; i < data.size(); ++i) out.data[i] = static_cast<U>(data[i]);
    return out;
  }

  std::string shape_str() const {
    std::ostringstream os;
    os << "[";
    for (size_t i = 0; i < dims.size(); ++i) os << (i ? "," : "") << dims[i];
    os << "]";
    return os.str();
  }
};

using Tensor = TensorT<float>;
using TensorD = TensorT<double>;

template <typename T>
void check_same_shape(const TensorT<T>& a, const TensorT<T>& b, const char* where) {
  if (!a.same_shape(b))
    throw ShapeError(std::string(where) + ": shape mismatch " + a.shape_str() + " vs " + b.shape_str());
}

// out = ca*a + cb*b, elementwise.
template <typename T>
TensorT<T> lin_comb(double ca, const TensorT<T>& a, double cb, const TensorT<T>& b) {
  check_same_shape(a, b, "lin_comb");
  TensorT<T> out(a.dims);
  for (int64_t i = 0; i < a.numel(); ++i)
    out.data[i] = static_cast<T>(ca * static_cast<double>(a.data[i]) + cb * static_cast<double>(b.data[i]));
  return out;
}

template <typename T>
void clamp_(TensorT<T>& t, T lo, T hi) {
  for (auto& v : t.data) v = v < lo ? lo : (v > hi ? hi : v);
}

template <typename T>
double max_abs_diff(const TensorT<T>& a, const TensorT<T>& b) {
  check_same_shape(a, b, "max_abs_diff");
  double m = 0;
  for (int64_t i = 0; i < a.numel(); ++i)
    m = std::max(m, std::abs(static_cast<double>(a.data[i]) - static_cast<double>(b.data[i])));
  return m;
}

template <typename T>
double mse(const TensorT<T>& a, const TensorT<T>& b) {
  check_same_shape(a, b, "mse");
  double s = 0;
  for (int64_t i = 0; i < a.numel(); ++i) {
    double d = static_cast<double>(a.data[i]) - static_cast<double>(b.data[i]);
    s += d * d;
  }
  return a.numel() ? s / static_cast<double>(a.numel()) : 0.0;
}

}  // namespace isr
