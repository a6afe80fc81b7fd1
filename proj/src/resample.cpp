#include "implicitsr/resample.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "implicitsr/autograd.hpp"
#include "implicitsr/errors.hpp"

namespace isr {

namespace {

// Catmull-Rom kernel (cubic with a = -0.5).
double cubic_weight(double t) {
  t = std::abs(t);
  if (t < 1.0) return 1.5 * t * t * t - 2.5 * t * t + 1.0;
  if (t < 2.0) return -0.5 * t * t * t + 2.5 * t * t - 4.0 * t + 2.0;
  return 0.0;
}

struct CubicTap {
  int64_t idx[4];
  double w[4];
};

std::vector<CubicTap> cubic_taps(int64_t n_src, int64_t n_dst) {
  std::vector<CubicTap> taps(static_cast<size_t>(n_dst));
  double r = static_cast<double>(n_src) / static_cast<double>(n_dst);
  for (int64_t j = 0; j < n_dst; ++j) {
    double u = (static_cast<double>(j) + 0.5) * r - 0.5;
    int64_t base = static_cast<int64_t>(std::floor(u)) - 1;
    double sum = 0.0;
    for (int k = 0; k < 4; ++k) {
      taps[j].idx[k] = std::clamp<int64_t>(base + k, 0, n_src - 1);
      taps[j].w[k] = cubic_weight(u - static_cast<double>(base + k));
      sum += taps[j].w[k];
    }
    for (int k = 0; k < 4; ++k) taps[j].w[k] /= sum;
  }
  return taps;
}

}  // namespace

Tensor resize_bicubic(const Tensor& x, int64_t h_out, int64_t w_out) {
  if (x.dims.size() != 4) throw ShapeError("resize_bicubic: expects 4-D [B,C,H,W]");
  if (h_out < 1 || w_out < 1) throw ParamError("resize_bicubic: non-positive target size");
  int64_t bsz = x.dims[0], c = x.dims[1], h = x.dims[2], w = x.dims[3];
  if (h == h_out && w == w_out) return x;

  auto ty = cubic_taps(h, h_out);
  auto tx = cubic_taps(w, w_out);
  Tensor out({bsz, c, h_out, w_out});
  std::vector<double> rows(static_cast<size_t>(4 * w_out));
  for (int64_t s = 0; s < bsz; ++s)
    for (int64_t ch = 0; ch < c; ++ch) {
      const float* src = x.ptr() + (s * c + ch) * h * w;
      float* dst = out.ptr() + (s * c + ch) * h_out * w_out;
      for (int64_t y = 0; y < h_out; ++y) {
        const auto& py = ty[y];
        for (int k = 0; k < 4; ++k) {
          const float* srow = src + py.idx[k] * w;
          double* rrow = rows.data() + k * w_out;
          for (int64_t xx = 0; xx < w_out; ++xx) {
            const auto& px = tx[xx];
            rrow[xx] = px.w[0] * srow[px.idx[0]] + px.w[1] * srow[px.idx[1]] +
                       px.w[2] * srow[px.idx[2]] + px.w[3] * srow[px.idx[3]];
          }
        }
        for (int64_t xx = 0; xx < w_out; ++xx)
          dst[y * w_out + xx] =
              static_cast<float>(py.w[0] * rows[xx] + py.w[1] * rows[w_out + xx] +
                                 py.w[2] * rows[2 * w_out + xx] + py.w[3] * rows[3 * w_out + xx]);
      }
    }
  return out;
}

Tensor resize_bilinear_plain(const Tensor& x, int64_t h_out, int64_t w_out) {
  ag::NoGradGuard ng;
  auto v = ag::leaf(x);
  return ag::resize_bilinear(v, h_out, w_out)->value;
}

}  // namespace isr
