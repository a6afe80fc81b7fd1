#include "implicitsr/grid.hpp"

#include <algorithm>
#include <cmath>

#include "implicitsr/errors.hpp"

namespace isr {

double cell_coord(int64_t k, int64_t n) {
  return -1.0 + static_cast<double>(2 * k + 1) / static_cast<double>(n);
}

CoordinateGrid make_grid(int64_t h, int64_t w) {
  if (h < 1 || w < 1) throw ParamError("make_grid: non-positive size");
  CoordinateGrid g;
  g.h = h;
  g.w = w;
  g.ys.resize(static_cast<size_t>(h));
  g.xs.resize(static_cast<size_t>(w));
  for (int64_t k = 0; k < h; ++k) g.ys[static_cast<size_t>(k)] = cell_coord(k, h);
  for (int64_t k = 0; k < w; ++k) g.xs[static_cast<size_t>(k)] = cell_coord(k, w);
  return g;
}

int64_t nearest_cell(double c, int64_t n) {
  // Cell centers sit at -1 + (2k+1)/n; boundaries at -1 + 2k/n. Mapping the
  // coordinate to t = (c+1)/2 * n puts boundaries on integers, so floor(t)
  // picks the cell and an exact integer (a midpoint between two centers,
  // i.e. a shared boundary) ties down to the smaller index.
  double t = (c + 1.0) * 0.5 * static_cast<double>(n);
  double fl = std::floor(t);
  int64_t idx = static_cast<int64_t>(fl);
  if (t == fl) idx -= 1;
  return std::clamp<int64_t>(idx, 0, n - 1);
}

std::vector<int64_t> nearest_index_map(const CoordinateGrid& dst, const CoordinateGrid& src) {
  std::vector<int64_t> idx(static_cast<size_t>(dst.numel()));
  std::vector<int64_t> col(static_cast<size_t>(dst.w));
  for (int64_t x = 0; x < dst.w; ++x)
    col[static_cast<size_t>(x)] = nearest_cell(dst.xs[static_cast<size_t>(x)], src.w);
  for (int64_t y = 0; y < dst.h; ++y) {
    int64_t row = nearest_cell(dst.ys[static_cast<size_t>(y)], src.h);
    for (int64_t x = 0; x < dst.w; ++x)
      idx[static_cast<size_t>(y * dst.w + x)] = row * src.w + col[static_cast<size_t>(x)];
  }
  return idx;
}

TensorD relative_offsets(const CoordinateGrid& dst, const CoordinateGrid& src) {
  TensorD out({dst.numel(), 2});
  for (int64_t y = 0; y < dst.h; ++y) {
    int64_t row = nearest_cell(dst.ys[static_cast<size_t>(y)], src.h);
    double dy = dst.ys[static_cast<size_t>(y)] - src.ys[static_cast<size_t>(row)];
    for (int64_t x = 0; x < dst.w; ++x) {
      int64_t colx = nearest_cell(dst.xs[static_cast<size_t>(x)], src.w);
      double dx = dst.xs[static_cast<size_t>(x)] - src.xs[static_cast<size_t>(colx)];
      out.data[static_cast<size_t>((y * dst.w + x) * 2)] = dy;
      out.data[static_cast<size_t>((y * dst.w + x) * 2 + 1)] = dx;
    }
  }
  return out;
}

}  // namespace isr
