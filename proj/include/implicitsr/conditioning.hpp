#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "implicitsr/autograd.hpp"
#include "implicitsr/errors.hpp"
#include "implicitsr/params.hpp"
#include "implicitsr/implicit.hpp"

namespace isr {

inline constexpr double kAlphaDelta = 1e-8;

// abar_j = |a_j| / sqrt(a1^2 + a2^2 + delta), element-wise.
inline std::pair<std::vector<double>, std::vector<double>> normalize_alphas(
    const std::vector<double>& a1, const std::vector<double>& a2) {
  if (a1.size() != a2.size()) throw ShapeError("normalize_alphas: length mismatch");
  std::vector<double> n1(a1.size()), n2(a1.size());
  for (size_t i = 0; i < a1.size(); ++i) {
    double d = std::sqrt(a1[i] * a1[i] + a2[i] * a2[i] + kAlphaDelta);
    n1[i] = std::abs(a1[i]) / d;
    n2[i] = std::abs(a2[i]) / d;
  }
  return {std::move(n1), std::move(n2)};
}

// Differentiable version over [C]-shaped graph nodes.
template <typename T>
std::pair<ag::VarT<T>, ag::VarT<T>> normalize_alphas_node(const ag::VarT<T>& a1,
                                                          const ag::VarT<T>& a2) {
  check_same_shape(a1->value, a2->value, "normalize_alphas");
  auto denom = ag::sqrt_val(
      ag::add_scalar(ag::add(ag::mul(a1, a1), ag::mul(a2, a2)), static_cast<T>(kAlphaDelta)));
  return {ag::div(ag::abs_val(a1), denom), ag::div(ag::abs_val(a2), denom)};
}

// h = abar1 (.) f + abar2 (.) concat(u_up, u_down), per channel.
template <typename T>
ag::VarT<T> fuse(const ag::VarT<T>& f, const ag::VarT<T>& u_up, const ag::VarT<T>& u_down,
                 const ag::VarT<T>& abar1, const ag::VarT<T>& abar2) {
  auto u_cat = ag::concat_channels(u_up, u_down);
  check_same_shape(f->value, u_cat->value, "fuse");
  return ag::add(ag::channel_mul(f, abar1), ag::channel_mul(u_cat, abar2));
}

// Reduced EDSR feature extractor: head conv + 4 residual blocks, 32 channels.
template <typename T>
struct EdsrLiteT {
  static constexpr int64_t kChannels = 32;
  static constexpr int kBlocks = 4;

  Conv3T<T> conv_in;
  std::vector<Conv3T<T>> block_conv1, block_conv2;

  EdsrLiteT() = default;
  EdsrLiteT(ParamStoreT<T>& ps, const std::string& prefix, Rng& rng)
      : conv_in(ps, prefix + ".conv_in", 3, kChannels, rng) {
    for (int k = 0; k < kBlocks; ++k) {
      block_conv1.emplace_back(ps, prefix + ".block" + std::to_string(k) + ".conv1", kChannels,
                               kChannels, rng);
      block_conv2.emplace_back(ps, prefix + ".block" + std::to_string(k) + ".conv2", kChannels,
                               kChannels, rng);
    }
  }

  ag::VarT<T> features(const ag::VarT<T>& x_lr) const {
    auto h = conv_in(x_lr);
    for (int k = 0; k < kBlocks; ++k) {
      auto r = block_conv2[k](ag::leaky_relu(block_conv1[k](h), static_cast<T>(kLeakySlope)));
      h = ag::add(h, r);
    }
    return h;
  }

  // f^(0): extractor features bilinearly resized to the working resolution.
  ag::VarT<T> operator()(const ag::VarT<T>& x_lr, int64_t target_h, int64_t target_w) const {
    return ag::resize_bilinear(features(x_lr), target_h, target_w);
  }
};

// Conditioning pyramid: f^(i) = lrelu(bilinear-halve(conv(f^(i-1)))).
template <typename T>
struct PyramidT {
  std::vector<Conv3T<T>> convs;  // level i uses convs[i-1]
  std::vector<int64_t> widths;   // channel count of f^(i), i = 1..N

  PyramidT() = default;
  PyramidT(ParamStoreT<T>& ps, const std::string& prefix, int64_t in_channels,
           std::vector<int64_t> level_widths, Rng& rng)
      : widths(std::move(level_widths)) {
    int64_t prev = in_channels;
    for (size_t i = 0; i < widths.size(); ++i) {
      convs.emplace_back(ps, prefix + ".conv" + std::to_string(i + 1), prev, widths[i], rng);
      prev = widths[i];
    }
  }

  // Returns f^(0..N); f^(0) is the input itself.
  std::vector<ag::VarT<T>> operator()(const ag::VarT<T>& f0) const {
    std::vector<ag::VarT<T>> levels{f0};
    auto cur = f0;
    for (const auto& conv : convs) {
      int64_t h = cur->value.dims[2], w = cur->value.dims[3];
      if (h < 2 && w < 2) throw ParamError("build_pyramid: cannot halve a 1x1 level");
      auto next = ag::resize_bilinear(conv(cur), (h + 1) / 2, (w + 1) / 2);
      cur = ag::leaky_relu(next, static_cast<T>(kLeakySlope));
      levels.push_back(cur);
    }
    return levels;
  }
};

// Adaptive MLP: raw scalar s -> 2N per-channel scale vectors (Eq. 5 shape).
template <typename T>
struct ScaleMlpT {
  static constexpr int64_t kHidden = 256;

  LinearT<T> fc1, fc2;
  std::vector<int64_t> widths;  // fusion width per depth, i = 1..N

  ScaleMlpT() = default;
  ScaleMlpT(ParamStoreT<T>& ps, const std::string& prefix, std::vector<int64_t> fusion_widths,
            Rng& rng)
      : widths(std::move(fusion_widths)) {
    int64_t total = 0;
    for (int64_t w : widths) total += 2 * w;
    fc1 = LinearT<T>(ps, prefix + ".fc1", 1, kHidden, rng);
    fc2 = LinearT<T>(ps, prefix + ".fc2", kHidden, total, rng);
  }

  // Raw (pre-normalization) pairs (a1^(i), a2^(i)) per depth.
  std::vector<std::pair<ag::VarT<T>, ag::VarT<T>>> operator()(double s) const {
    TensorT<T> in({1, 1});
    in.data[0] = static_cast<T>(s);
    auto out = fc2(ag::leaky_relu(fc1(ag::leaf(std::move(in))), static_cast<T>(kLeakySlope)));
    std::vector<std::pair<ag::VarT<T>, ag::VarT<T>>> pairs;
    int64_t off = 0;
    for (int64_t w : widths) {
      pairs.emplace_back(segment(out, off, w), segment(out, off + w, w));
      off += 2 * w;
    }
    return pairs;
  }

 private:
  // Extract columns [start, start+len) of a [1, total] row vector as [len].
  static ag::VarT<T> segment(const ag::VarT<T>& row, int64_t start, int64_t len) {
    TensorT<T> out({len});
    for (int64_t j = 0; j < len; ++j) out.data[j] = row->value.data[start + j];
    return ag::make_node<T>(std::move(out), {row}, [row, start, len](ag::NodeT<T>& n) {
      if (!row->requires_grad) return;
      row->ensure_grad();
      for (int64_t j = 0; j < len; ++j) row->grad.data[start + j] += n.grad.data[j];
    });
  }
};

}  // namespace isr
