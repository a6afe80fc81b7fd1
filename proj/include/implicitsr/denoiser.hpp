#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "implicitsr/autograd.hpp"
#include "implicitsr/conditioning.hpp"
#include "implicitsr/errors.hpp"
#include "implicitsr/grid.hpp"
#include "implicitsr/implicit.hpp"
#include "implicitsr/params.hpp"

namespace isr {

struct DenoiserConfig {
  int64_t depth = 3;                              // N
  int64_t base_channels = 32;
  std::vector<int64_t> channel_mult = {1, 2, 4};  // one entry per depth
  double dropout = 0.2;
  double max_scale = 8.0;                         // M

  void validate() const {
    if (depth < 1) throw ParamError("denoiser: depth must be >= 1");
    if (base_channels < 1) throw ParamError("denoiser: base_channels must be >= 1");
    if (static_cast<int64_t>(channel_mult.size()) != depth)
      throw ParamError("denoiser: channel_mult length must equal depth");
    for (int64_t m : channel_mult)
      if (m < 1) throw ParamError("denoiser: channel multipliers must be >= 1");
    if (!(max_scale > 1.0)) throw ParamError("denoiser: max_scale must exceed 1");
    if (dropout < 0.0 || dropout >= 1.0) throw ParamError("denoiser: dropout outside [0, 1)");
  }

  // Channels at depth i, with depth 0 = base.
  int64_t channels_at(int64_t i) const {
    return i == 0 ? base_channels : base_channels * channel_mult[static_cast<size_t>(i - 1)];
  }
};

// Output resolution rule: round(s * n), half away from zero.
inline int64_t scaled_size(double s, int64_t n) {
  return static_cast<int64_t>(std::llround(s * static_cast<double>(n)));
}

// Ceil-halving resolution ladder from the working size down N levels.
// Either axis at 1 cannot be halved further.
inline std::vector<std::pair<int64_t, int64_t>> resolution_ladder(int64_t h, int64_t w,
                                                                  int64_t depth) {
  std::vector<std::pair<int64_t, int64_t>> sizes{{h, w}};
  for (int64_t i = 0; i < depth; ++i) {
    auto [ph, pw] = sizes.back();
    if (ph < 2 && pw < 2) throw ConfigError("denoiser: resolution too small for requested depth");
    sizes.emplace_back((ph + 1) / 2, (pw + 1) / 2);
  }
  return sizes;
}

// Sinusoidal embedding of the noise level, SR3-style input scaling.
template <typename T>
TensorT<T> gamma_sinusoid(const std::vector<double>& gamma, int64_t dim) {
  int64_t half = dim / 2;
  TensorT<T> out({static_cast<int64_t>(gamma.size()), dim});
  for (size_t b = 0; b < gamma.size(); ++b) {
    double level = gamma[b] * 1000.0;
    for (int64_t k = 0; k < half; ++k) {
      double freq = std::exp(-std::log(10000.0) * static_cast<double>(k) /
                             static_cast<double>(half - 1));
      out.data[static_cast<int64_t>(b) * dim + k] = static_cast<T>(std::sin(level * freq));
      out.data[static_cast<int64_t>(b) * dim + half + k] = static_cast<T>(std::cos(level * freq));
    }
  }
  return out;
}

// Noise-level conditioning trunk; each residual block projects the trunk
// output to its own channel count.
template <typename T>
struct GammaEmbeddingT {
  static constexpr int64_t kDim = 64;
  LinearT<T> fc1, fc2;

  GammaEmbeddingT() = default;
  GammaEmbeddingT(ParamStoreT<T>& ps, const std::string& prefix, Rng& rng)
      : fc1(ps, prefix + ".fc1", kDim, kDim, rng), fc2(ps, prefix + ".fc2", kDim, kDim, rng) {}

  // gamma per sample -> [B, kDim]
  ag::VarT<T> operator()(const std::vector<double>& gamma) const {
    auto emb = ag::leaf(gamma_sinusoid<T>(gamma, kDim));
    return fc2(ag::leaky_relu(fc1(emb), static_cast<T>(kLeakySlope)));
  }
};

// Residual block with noise-level bias injected after the first conv.
template <typename T>
struct ResBlockT {
  Conv3T<T> conv1, conv2;
  LinearT<T> emb_proj;
  LinearT<T> skip;  // 1x1 projection when channel counts differ
  bool has_skip = false;
  double dropout = 0.0;

  ResBlockT() = default;
  ResBlockT(ParamStoreT<T>& ps, const std::string& prefix, int64_t in_ch, int64_t out_ch,
            double dropout_rate, Rng& rng)
      : conv1(ps, prefix + ".conv1", in_ch, out_ch, rng),
        conv2(ps, prefix + ".conv2", out_ch, out_ch, rng),
        emb_proj(ps, prefix + ".emb", GammaEmbeddingT<T>::kDim, out_ch, rng),
        dropout(dropout_rate) {
    if (in_ch != out_ch) {
      skip = LinearT<T>(ps, prefix + ".skip", in_ch, out_ch, rng);
      has_skip = true;
    }
  }

  // x: [B, in, H, W]; emb: [B, kDim]; rng non-null enables dropout.
  ag::VarT<T> operator()(const ag::VarT<T>& x, const ag::VarT<T>& emb, Rng* rng) const {
    int64_t bsz = x->value.dims[0], h = x->value.dims[2], w = x->value.dims[3];
    auto y = conv1(ag::leaky_relu(x, static_cast<T>(kLeakySlope)));
    y = ag::add_sample_channel(y, emb_proj(emb));
    y = ag::leaky_relu(y, static_cast<T>(kLeakySlope));
    if (rng && dropout > 0.0) y = ag::dropout(y, dropout, *rng);
    y = conv2(y);
    auto res = has_skip ? ag::rows_to_chw(skip(ag::chw_to_rows(x)), bsz, h, w) : x;
    return ag::add(res, y);
  }
};

// The full epsilon-prediction network.
template <typename T>
struct DenoiserT {
  DenoiserConfig cfg;
  ParamStoreT<T> params;

  EdsrLiteT<T> extractor;
  PyramidT<T> pyramid;
  ScaleMlpT<T> scale_mlp;
  GammaEmbeddingT<T> gamma_emb;
  Conv3T<T> enc_in;
  std::vector<ResBlockT<T>> enc_blocks;  // depth 1..N
  ResBlockT<T> bottleneck;
  std::vector<ImplicitLayerT<T>> implicit_layers;  // D_i for depth i = 1..N
  Conv3T<T> head;

  explicit DenoiserT(const DenoiserConfig& config, Rng& rng) : cfg(config) {
    cfg.validate();
    std::vector<int64_t> fusion_widths;  // 2 * ch_i at depth i = 1..N
    for (int64_t i = 1; i <= cfg.depth; ++i) fusion_widths.push_back(2 * cfg.channels_at(i));

    extractor = EdsrLiteT<T>(params, "features", rng);
    pyramid = PyramidT<T>(params, "pyramid", EdsrLiteT<T>::kChannels, fusion_widths, rng);
    scale_mlp = ScaleMlpT<T>(params, "scale_mlp", fusion_widths, rng);
    gamma_emb = GammaEmbeddingT<T>(params, "gamma_emb", rng);
    enc_in = Conv3T<T>(params, "encoder.conv_in", EdsrLiteT<T>::kChannels + 3,
                       cfg.channels_at(0), rng);
    for (int64_t i = 1; i <= cfg.depth; ++i)
      enc_blocks.emplace_back(params, "encoder.block" + std::to_string(i), cfg.channels_at(i - 1),
                              cfg.channels_at(i), cfg.dropout, rng);
    bottleneck = ResBlockT<T>(params, "bottleneck", cfg.channels_at(cfg.depth),
                              cfg.channels_at(cfg.depth), cfg.dropout, rng);
    for (int64_t i = 1; i <= cfg.depth; ++i)
      implicit_layers.emplace_back(params, "implicit" + std::to_string(i),
                                   2 * cfg.channels_at(i), cfg.channels_at(i - 1), rng);
    head = Conv3T<T>(params, "head", cfg.channels_at(0), 3, rng);
  }

  // Encoder over concat(f0, y_t): u_down^(i) per depth at the ladder sizes.
  std::vector<ag::VarT<T>> encode(const ag::VarT<T>& input, const ag::VarT<T>& emb,
                                  const std::vector<std::pair<int64_t, int64_t>>& sizes,
                                  Rng* rng) const {
    std::vector<ag::VarT<T>> downs;
    auto cur = enc_in(input);
    for (int64_t i = 1; i <= cfg.depth; ++i) {
      auto [h, w] = sizes[static_cast<size_t>(i)];
      cur = ag::resize_bilinear(cur, h, w);
      cur = enc_blocks[static_cast<size_t>(i - 1)](cur, emb, rng);
      downs.push_back(cur);
    }
    return downs;
  }

  // Decoder: fuse at each depth, implicit-upsample to the next grid, head conv.
  ag::VarT<T> decode(const ag::VarT<T>& u_bottom, const std::vector<ag::VarT<T>>& downs,
                     const std::vector<ag::VarT<T>>& pyr,
                     const std::vector<std::pair<ag::VarT<T>, ag::VarT<T>>>& alphas,
                     const std::vector<CoordinateGrid>& grids) const {
    if (static_cast<int64_t>(downs.size()) != cfg.depth ||
        static_cast<int64_t>(pyr.size()) != cfg.depth + 1 ||
        static_cast<int64_t>(alphas.size()) != cfg.depth ||
        static_cast<int64_t>(grids.size()) != cfg.depth + 1)
      throw ShapeError("decode: depth mismatch across inputs");
    auto u_up = u_bottom;
    for (int64_t i = cfg.depth; i >= 1; --i) {
      auto [n1, n2] = normalize_alphas_node(alphas[static_cast<size_t>(i - 1)].first,
                                            alphas[static_cast<size_t>(i - 1)].second);
      auto h = fuse(pyr[static_cast<size_t>(i)], u_up, downs[static_cast<size_t>(i - 1)], n1, n2);
      u_up = implicit_upsample(h, grids[static_cast<size_t>(i)], grids[static_cast<size_t>(i - 1)],
                               implicit_layers[static_cast<size_t>(i - 1)]);
    }
    return head(ag::leaky_relu(u_up, static_cast<T>(kLeakySlope)));
  }

  // Full pass. gamma holds one noise level per batch sample. rng enables
  // dropout (training); pass nullptr for inference.
  ag::VarT<T> forward(const ag::VarT<T>& x_lr, const ag::VarT<T>& y_t,
                      const std::vector<double>& gamma, double s, Rng* rng = nullptr) const {
    if (x_lr->value.dims.size() != 4 || y_t->value.dims.size() != 4)
      throw ShapeError("denoiser: expects 4-D [B,C,H,W] inputs");
    if (x_lr->value.dims[1] != 3 || y_t->value.dims[1] != 3)
      throw ShapeError("denoiser: expects 3-channel images");
    if (!(s > 1.0)) throw ParamError("denoiser: scale must exceed 1");
    int64_t bsz = x_lr->value.dims[0];
    if (y_t->value.dims[0] != bsz) throw ShapeError("denoiser: batch mismatch");
    if (static_cast<int64_t>(gamma.size()) != bsz)
      throw ShapeError("denoiser: gamma count must equal batch size");
    int64_t th = scaled_size(s, x_lr->value.dims[2]);
    int64_t tw = scaled_size(s, x_lr->value.dims[3]);
    if (y_t->value.dims[2] != th || y_t->value.dims[3] != tw)
      throw ShapeError("denoiser: y_t resolution must equal round(s * lr size)");

    auto sizes = resolution_ladder(th, tw, cfg.depth);
    std::vector<CoordinateGrid> grids;
    for (auto [h, w] : sizes) grids.push_back(make_grid(h, w));

    auto f0 = extractor(x_lr, th, tw);
    auto emb = gamma_emb(gamma);
    auto downs = encode(ag::concat_channels(f0, y_t), emb, sizes, rng);
    auto u_bottom = bottleneck(downs.back(), emb, rng);
    auto pyr = pyramid(f0);
    auto alphas = scale_mlp(s);
    return decode(u_bottom, downs, pyr, alphas, grids);
  }
};

using Denoiser = DenoiserT<float>;

}  // namespace isr
