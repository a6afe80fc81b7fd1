#include "implicitsr/dataset.hpp"

#include <algorithm>
#include <filesystem>

#include "implicitsr/denoiser.hpp"
#include "implicitsr/errors.hpp"
#include "implicitsr/image_io.hpp"
#include "implicitsr/resample.hpp"

namespace fs = std::filesystem;

namespace isr {

Tensor square_resize(const Tensor& image, int64_t size) {
  if (image.dims.size() != 4 || image.dims[0] != 1 || image.dims[1] != 3)
    throw ShapeError("square_resize: expects [1, 3, H, W]");
  int64_t h = image.dims[2], w = image.dims[3];
  int64_t side = std::min(h, w);
  int64_t y0 = (h - side) / 2, x0 = (w - side) / 2;
  Tensor crop({1, 3, side, side});
  for (int64_t c = 0; c < 3; ++c)
    for (int64_t y = 0; y < side; ++y)
      std::copy_n(image.ptr() + (c * h + y0 + y) * w + x0, side,
                  crop.ptr() + (c * side + y) * side);
  return resize_bicubic(crop, size, size);
}

Dataset load_dataset(const std::string& dir, int64_t hr_size) {
  if (hr_size < 1) throw ParamError("load_dataset: non-positive size");
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw DataError("not a dataset directory: " + dir);

  std::vector<std::string> paths;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".png")
      paths.push_back(entry.path().string());
  }
  std::sort(paths.begin(), paths.end());
  if (paths.empty()) throw DataError("no .png images in: " + dir);

  Dataset ds;
  ds.size = hr_size;
  for (const auto& p : paths) {
    ds.images.push_back(square_resize(read_png(p), hr_size));
    ds.names.push_back(fs::path(p).stem().string());
  }
  return ds;
}

std::pair<Tensor, Tensor> degrade(const Tensor& hr, double s, int64_t lr_size) {
  if (hr.dims.size() != 4) throw ShapeError("degrade: expects [B, C, H, W]");
  if (!(s > 1.0)) throw ParamError("degrade: scale must exceed 1");
  if (lr_size < 1) throw ParamError("degrade: non-positive lr size");
  int64_t hr_h = hr.dims[2], hr_w = hr.dims[3];
  int64_t y_h = scaled_size(s, lr_size), y_w = scaled_size(s, lr_size);
  if (hr_h < y_h || hr_w < y_w || hr_h < lr_size || hr_w < lr_size)
    throw DataError("degrade: hr image smaller than the requested outputs");
  return {resize_bicubic(hr, lr_size, lr_size), resize_bicubic(hr, y_h, y_w)};
}

}  // namespace isr
