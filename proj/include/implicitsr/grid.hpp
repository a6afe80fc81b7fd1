#pragma once

#include <cstdint>
#include <vector>

#include "implicitsr/tensor.hpp"

namespace isr {

// Cell-center coordinates over [-1, 1] per axis: coord_k = -1 + (2k+1)/n.
struct CoordinateGrid {
  int64_t h = 0, w = 0;
  std::vector<double> ys;  // h entries
  std::vector<double> xs;  // w entries

  int64_t numel() const { return h * w; }
};

CoordinateGrid make_grid(int64_t h, int64_t w);

// Axis coordinate of cell k out of n.
double cell_coord(int64_t k, int64_t n);

// Index of the nearest cell center on an axis of n cells for coordinate c.
// Exact midpoints resolve to the smaller index.
int64_t nearest_cell(double c, int64_t n);

// Flattened (row-major) source index of the nearest src cell for every
// dst cell. Drives feature gathering between pyramid levels.
std::vector<int64_t> nearest_index_map(const CoordinateGrid& dst, const CoordinateGrid& src);

// Per-dst-pixel coordinate offset to its nearest src cell center,
// laid out as [dst.h * dst.w, 2] rows of (dy, dx).
TensorD relative_offsets(const CoordinateGrid& dst, const CoordinateGrid& src);

}  // namespace isr
