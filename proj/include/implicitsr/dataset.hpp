#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "implicitsr/tensor.hpp"

namespace isr {

// HR training images at a fixed square working size, in [-1, 1].
struct Dataset {
  std::vector<Tensor> images;  // each [1, 3, size, size]
  std::vector<std::string> names;
  int64_t size = 0;

  int64_t count() const { return static_cast<int64_t>(images.size()); }
};

// Loads every .png under dir (sorted by filename), center-crops to square,
// and bicubic-resizes to hr_size. Throws DataError when empty or unreadable.
Dataset load_dataset(const std::string& dir, int64_t hr_size);

// Center-crop to the largest centered square, then resize to size x size.
Tensor square_resize(const Tensor& image, int64_t size);

// x_lr = bicubic downsample of hr to lr_size; y0 = bicubic resize of hr to
// round(s * lr_size) per axis.
std::pair<Tensor, Tensor> degrade(const Tensor& hr, double s, int64_t lr_size);

}  // namespace isr
