#include "implicitsr/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "implicitsr/errors.hpp"
#include "implicitsr/resample.hpp"

namespace isr {

namespace {

constexpr int kWin = 11;
constexpr double kSigma = 1.5;

std::vector<double> gaussian_window() {
  std::vector<double> w(kWin * kWin);
  double sum = 0.0;
  for (int y = 0; y < kWin; ++y)
    for (int x = 0; x < kWin; ++x) {
      double dy = y - (kWin - 1) / 2.0, dx = x - (kWin - 1) / 2.0;
      double v = std::exp(-(dy * dy + dx * dx) / (2.0 * kSigma * kSigma));
      w[y * kWin + x] = v;
      sum += v;
    }
  for (auto& v : w) v /= sum;
  return w;
}

// Mean local SSIM of one channel plane.
double ssim_plane(const float* a, const float* b, int64_t h, int64_t w, double c1, double c2) {
  static const std::vector<double> win = gaussian_window();
  double acc = 0.0;
  int64_t count = 0;
  for (int64_t y = 0; y + kWin <= h; ++y)
    for (int64_t x = 0; x + kWin <= w; ++x) {
      double mu_a = 0, mu_b = 0, aa = 0, bb = 0, ab = 0;
      for (int wy = 0; wy < kWin; ++wy)
        for (int wx = 0; wx < kWin; ++wx) {
          double wgt = win[wy * kWin + wx];
          double va = a[(y + wy) * w + (x + wx)];
          double vb = b[(y + wy) * w + (x + wx)];
          mu_a += wgt * va;
          mu_b += wgt * vb;
          aa += wgt * va * va;
          bb += wgt * vb * vb;
          ab += wgt * va * vb;
        }
      double var_a = aa - mu_a * mu_a;
      double var_b = bb - mu_b * mu_b;
      double cov = ab - mu_a * mu_b;
      double num = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2);
      double den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2);
      acc += num / den;
      ++count;
    }
  return acc / static_cast<double>(count);
}

}  // namespace

Tensor to_unit_range(const Tensor& x) {
  Tensor out(x.dims);
  for (int64_t i = 0; i < x.numel(); ++i)
    out.data[i] = std::clamp((x.data[i] + 1.0f) * 0.5f, 0.0f, 1.0f);
  return out;
}

double psnr(const Tensor& a, const Tensor& b, double peak) {
  check_same_shape(a, b, "psnr");
  if (!(peak > 0.0)) throw ParamError("psnr: peak must be positive");
  double m = mse(a, b);
  if (m < peak * peak * 1e-10) return 100.0;
  return 10.0 * std::log10(peak * peak / m);
}

double ssim(const Tensor& a, const Tensor& b, double peak) {
  check_same_shape(a, b, "ssim");
  if (a.dims.size() != 3 && a.dims.size() != 4) throw ShapeError("ssim: expects [C,H,W] or [B,C,H,W]");
  int64_t h = a.dims[a.dims.size() - 2], w = a.dims[a.dims.size() - 1];
  if (h < kWin || w < kWin) throw ParamError("ssim: image smaller than the 11x11 window");
  int64_t planes = a.numel() / (h * w);
  double c1 = (0.01 * peak) * (0.01 * peak);
  double c2 = (0.03 * peak) * (0.03 * peak);
  double acc = 0.0;
  for (int64_t p = 0; p < planes; ++p)
    acc += ssim_plane(a.ptr() + p * h * w, b.ptr() + p * h * w, h, w, c1, c2);
  return acc / static_cast<double>(planes);
}

double consistency(const Tensor& x_lr, const Tensor& sr) {
  if (x_lr.dims.size() != sr.dims.size()) throw ShapeError("consistency: rank mismatch");
  size_t nd = x_lr.dims.size();
  if (nd != 3 && nd != 4) throw ShapeError("consistency: expects [C,H,W] or [B,C,H,W]");
  for (size_t i = 0; i + 2 < nd; ++i)
    if (x_lr.dims[i] != sr.dims[i]) throw ShapeError("consistency: leading dims mismatch");
  int64_t lh = x_lr.dims[nd - 2], lw = x_lr.dims[nd - 1];
  if (sr.dims[nd - 2] < lh || sr.dims[nd - 1] < lw)
    throw ShapeError("consistency: sr smaller than lr");
  Tensor sr4 = sr, lr4 = x_lr;
  if (nd == 3) {
    sr4.dims.insert(sr4.dims.begin(), 1);
    lr4.dims.insert(lr4.dims.begin(), 1);
  }
  Tensor down = resize_bicubic(sr4, lh, lw);
  return mse(lr4, down) * 1e5;
}

}  // namespace isr
