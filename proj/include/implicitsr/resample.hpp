#pragma once

#include <cstdint>

#include "implicitsr/tensor.hpp"

namespace isr {

// Catmull-Rom bicubic resize of [B, C, H, W] to (h_out, w_out).
// Used for degradation, LR ingestion, and the consistency metric.
// Identity when the target matches the source size.
Tensor resize_bicubic(const Tensor& x, int64_t h_out, int64_t w_out);

// Plain bilinear resize (same half-pixel convention as the trainable path).
Tensor resize_bilinear_plain(const Tensor& x, int64_t h_out, int64_t w_out);

}  // namespace isr
