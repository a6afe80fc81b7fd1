#pragma once

#include <cstdint>
#include <string>

#include "implicitsr/tensor.hpp"

namespace isr {

// 8-bit value -> internal [-1, 1] representation.
inline float normalize_byte(uint8_t p) { return 2.0f * static_cast<float>(p) / 255.0f - 1.0f; }

// Inverse: clamp to [-1, 1], then quantize with round-half-up.
uint8_t denormalize_byte(float v);

// Reads an 8-bit RGB PNG into [1, 3, H, W] in [-1, 1]. Grayscale, palette,
// and alpha inputs are converted to RGB. Throws DataError on failure.
Tensor read_png(const std::string& path);

// Writes [1, 3, H, W] or [3, H, W] in [-1, 1] as an 8-bit RGB PNG.
void write_png(const std::string& path, const Tensor& image);

}  // namespace isr
