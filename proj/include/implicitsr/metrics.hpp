#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "implicitsr/tensor.hpp"

namespace isr {

// Metrics operate on [0,1]-range RGB. Convert from the internal [-1,1]
// representation first (see to_unit_range).
Tensor to_unit_range(const Tensor& x);

// 10*log10(peak^2 / MSE); capped at 100 dB when MSE < peak^2 * 1e-10.
double psnr(const Tensor& a, const Tensor& b, double peak = 1.0);

// Mean local SSIM, 11x11 Gaussian window (sigma 1.5), valid positions only,
// C1 = (0.01*peak)^2, C2 = (0.03*peak)^2, averaged over channels.
// Inputs are [C,H,W] or [B,C,H,W]; H and W must be at least 11.
double ssim(const Tensor& a, const Tensor& b, double peak = 1.0);

// MSE between x_lr and sr bicubically downsampled to x_lr's size, in units
// of 1e-5.
double consistency(const Tensor& x_lr, const Tensor& sr);

}  // namespace isr
