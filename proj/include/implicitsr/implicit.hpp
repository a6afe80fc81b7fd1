#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "implicitsr/autograd.hpp"
#include "implicitsr/errors.hpp"
#include "implicitsr/grid.hpp"
#include "implicitsr/params.hpp"

namespace isr {

inline constexpr double kLeakySlope = 0.2;
inline constexpr int64_t kImplicitHidden = 256;

// Nearest-center feature lookup: per target pixel, the source feature whose
// cell center is closest plus the (dy, dx) offset to that center.
template <typename T>
std::pair<ag::VarT<T>, TensorT<T>> nearest_lookup(const ag::VarT<T>& src_features,
                                                  const CoordinateGrid& src_grid,
                                                  const CoordinateGrid& tgt_grid) {
  if (src_features->value.dims.size() != 4) throw ShapeError("nearest_lookup: expects 4-D");
  if (src_features->value.dims[2] != src_grid.h || src_features->value.dims[3] != src_grid.w)
    throw ShapeError("nearest_lookup: feature/grid dims disagree");
  if (src_grid.numel() == 0) throw ParamError("nearest_lookup: empty source");
  auto idx = nearest_index_map(tgt_grid, src_grid);
  auto gathered = ag::gather_pixels(src_features, std::move(idx), tgt_grid.h, tgt_grid.w);
  TensorT<T> rel = relative_offsets(tgt_grid, src_grid).template cast<T>();
  return {gathered, std::move(rel)};
}

// The 2-layer coordinate MLP D_i: (feature, relative coord) -> output feature.
template <typename T>
struct ImplicitLayerT {
  LinearT<T> fc1, fc2;
  int64_t in_channels = 0, out_channels = 0;

  ImplicitLayerT() = default;
  ImplicitLayerT(ParamStoreT<T>& ps, const std::string& prefix, int64_t feat_channels,
                 int64_t out_ch, Rng& rng)
      : fc1(ps, prefix + ".fc1", feat_channels + 2, kImplicitHidden, rng),
        fc2(ps, prefix + ".fc2", kImplicitHidden, out_ch, rng),
        in_channels(feat_channels),
        out_channels(out_ch) {}

  // rows: [R, feat_channels + 2]
  ag::VarT<T> operator()(const ag::VarT<T>& rows) const {
    return fc2(ag::leaky_relu(fc1(rows), static_cast<T>(kLeakySlope)));
  }
};

// Decode fused features onto a target grid: gather nearest feature + offset,
// run the coordinate MLP per pixel, reshape back to [B, C_out, th, tw].
template <typename T>
ag::VarT<T> implicit_upsample(const ag::VarT<T>& h_next, const CoordinateGrid& src_grid,
                              const CoordinateGrid& tgt_grid, const ImplicitLayerT<T>& layer) {
  if (h_next->value.dims[1] != layer.in_channels)
    throw ShapeError("implicit_upsample: channel count does not match layer input");
  auto [gathered, rel] = nearest_lookup(h_next, src_grid, tgt_grid);
  int64_t bsz = h_next->value.dims[0];
  auto rows = ag::chw_to_rows(gathered);

  TensorT<T> rel_tiled({bsz * tgt_grid.numel(), 2});
  for (int64_t s = 0; s < bsz; ++s)
    std::copy(rel.data.begin(), rel.data.end(),
              rel_tiled.data.begin() + static_cast<size_t>(s * tgt_grid.numel() * 2));
  auto rel_var = ag::leaf(std::move(rel_tiled));

  auto out_rows = layer(ag::concat_cols(rows, rel_var));
  return ag::rows_to_chw(out_rows, bsz, tgt_grid.h, tgt_grid.w);
}

}  // namespace isr
