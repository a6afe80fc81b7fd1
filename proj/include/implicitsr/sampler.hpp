#pragma once

#include <cmath>
#include <cstdint>

#include "implicitsr/denoiser.hpp"
#include "implicitsr/errors.hpp"
#include "implicitsr/rng.hpp"
#include "implicitsr/schedule.hpp"
#include "implicitsr/tensor.hpp"

namespace isr {

enum class VarianceMode { beta, posterior };

struct SamplerConfig {
  VarianceMode variance = VarianceMode::beta;
  uint64_t seed = 0;
};

// sigma_t for the reverse step; sigma_1 is forced to 0.
inline double sigma_at(const NoiseSchedule& sched, int64_t t, VarianceMode mode) {
  if (t == 1) return 0.0;
  double b = sched.beta_at(t);
  if (mode == VarianceMode::beta) return std::sqrt(b);
  double g = sched.gamma_at(t), gp = sched.gamma_prev(t);
  return std::sqrt((1.0 - gp) / (1.0 - g) * b);
}

// One reverse step:
//   y_{t-1} = (y_t - beta_t/sqrt(1-gamma_t) * eps_pred) / sqrt(1-beta_t) + sigma_t * noise
inline Tensor p_step(const Tensor& y_t, const Tensor& eps_pred, int64_t t,
                     const NoiseSchedule& sched, const Tensor& noise,
                     VarianceMode mode = VarianceMode::beta) {
  check_same_shape(y_t, eps_pred, "p_step");
  check_same_shape(y_t, noise, "p_step");
  double beta = sched.beta_at(t);
  double gamma = sched.gamma_at(t);
  double inv = 1.0 / std::sqrt(1.0 - beta);
  double coef = beta / std::sqrt(1.0 - gamma);
  Tensor out = lin_comb(inv, y_t, -inv * coef, eps_pred);
  double sig = sigma_at(sched, t, mode);
  if (sig != 0.0)
    for (int64_t i = 0; i < out.numel(); ++i)
      out.data[i] = static_cast<float>(out.data[i] + sig * noise.data[i]);
  return out;
}

// Full reverse trajectory from Gaussian noise at round(s * lr) resolution.
inline Tensor sample(const Tensor& x_lr, double s, const DenoiserT<float>& model,
                     const NoiseSchedule& sched, const SamplerConfig& cfg) {
  if (x_lr.dims.size() != 4) throw ShapeError("sample: expects 4-D [B,3,H,W]");
  if (!(s > 1.0)) throw ParamError("sample: scale must exceed 1");
  int64_t bsz = x_lr.dims[0];
  int64_t th = scaled_size(s, x_lr.dims[2]);
  int64_t tw = scaled_size(s, x_lr.dims[3]);

  ag::NoGradGuard ng;
  Rng rng(cfg.seed);
  auto lr_var = ag::leaf(x_lr);

  Tensor y({bsz, 3, th, tw});
  rng.normal_fill(y.data);
  Tensor noise({bsz, 3, th, tw});
  for (int64_t t = sched.steps(); t >= 1; --t) {
    std::vector<double> gamma(static_cast<size_t>(bsz), sched.gamma_at(t));
    auto eps = model.forward(lr_var, ag::leaf(y), gamma, s, nullptr);
    if (t > 1)
      rng.normal_fill(noise.data);
    else
      noise.fill(0.0f);
    y = p_step(y, eps->value, t, sched, noise, cfg.variance);
  }
  clamp_(y, -1.0f, 1.0f);
  return y;
}

}  // namespace isr
