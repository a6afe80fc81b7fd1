#include <doctest.h>

#include <cmath>

#include "implicitsr/metrics.hpp"
#include "implicitsr/resample.hpp"
#include "support/testutil.hpp"

using namespace isr;

TEST_SUITE("metrics") {

TEST_CASE("signal range mapping") {
  Tensor x({5});
  x.data = {-1.0f, 0.0f, 1.0f, -2.0f, 2.0f};
  Tensor u = to_unit_range(x);
  CHECK(u.data[0] == 0.0f);
  CHECK(u.data[1] == 0.5f);
  CHECK(u.data[2] == 1.0f);
  CHECK(u.data[3] == 0.0f);
  CHECK(u.data[4] == 1.0f);
}

TEST_CASE("psnr oracle values") {
  Tensor a({1, 3, 8, 8}), b({1, 3, 8, 8});
  a.fill(0.5f);
  b.fill(0.5f);
  CHECK(psnr(a, b) == 100.0);

  // Uniform offset of 0.1: MSE = 0.01, so 10 * log10(1 / 0.01) = 20 dB.
  b.fill(0.6f);
  CHECK(psnr(a, b) == doctest::Approx(20.0).epsilon(1e-4));
  CHECK(psnr(b, a) == doctest::Approx(20.0).epsilon(1e-4));

  // Full-range error: 0 dB at peak 1.
  Tensor z({4}), o({4});
  z.fill(0.0f);
  o.fill(1.0f);
  CHECK(psnr(z, o) == doctest::Approx(0.0).epsilon(1e-9));

  // Doubling the peak adds 20 log10(2) at fixed MSE.
  CHECK(psnr(a, b, 2.0) == doctest::Approx(20.0 + 20.0 * std::log10(2.0)).epsilon(1e-4));

  Tensor c({2, 2});
  CHECK_THROWS_AS(psnr(a, c), ShapeError);
  CHECK_THROWS_AS(psnr(a, b, 0.0), ParamError);
}

TEST_CASE("psnr falls as noise grows") {
  Rng rng(100);
  Tensor base = to_unit_range(testutil::synth_image(1, 24, 24));
  double prev = 1e9;
  for (double amp : {0.01, 0.03, 0.1, 0.3}) {
    Tensor noisy = base;
    Rng r2(7);
    for (auto& v : noisy.data)
      v = std::clamp(v + static_cast<float>(r2.normal() * amp), 0.0f, 1.0f);
    double p = psnr(base, noisy);
    CHECK(p < prev);
    prev = p;
  }
}

TEST_CASE("ssim oracle values") {
  Tensor a({1, 3, 16, 16}), b({1, 3, 16, 16});
  a.fill(0.4f);
  b.fill(0.4f);
  CHECK(ssim(a, a) == doctest::Approx(1.0).epsilon(1e-12));

  // Constant planes: variances vanish, the mean term survives.
  b.fill(0.6f);
  double c1 = 0.0001;
  double want = (2.0 * 0.4 * 0.6 + c1) / (0.4 * 0.4 + 0.6 * 0.6 + c1);
  CHECK(ssim(a, b) == doctest::Approx(want).epsilon(1e-6));

  Tensor small({1, 3, 10, 12});
  CHECK_THROWS_AS(ssim(small, small), ParamError);
  Tensor flat({16, 16});
  CHECK_THROWS_AS(ssim(flat, flat), ShapeError);
}

TEST_CASE("ssim of unrelated noise is near zero") {
  Rng rng(101);
  Tensor a({1, 1, 32, 32}), b({1, 1, 32, 32});
  for (auto& v : a.data) v = static_cast<float>(rng.uniform01());
  for (auto& v : b.data) v = static_cast<float>(rng.uniform01());
  double s = ssim(a, b);
  CHECK(std::abs(s) < 0.1);
  CHECK(ssim(a, a) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("ssim respects structural similarity under brightness shift") {
  Tensor base = to_unit_range(testutil::synth_image(2, 24, 24));
  Tensor shifted = base;
  for (auto& v : shifted.data) v = std::min(1.0f, v + 0.05f);
  Tensor scrambled({1, 3, 24, 24});
  Rng rng(102);
  for (auto& v : scrambled.data) v = static_cast<float>(rng.uniform01());
  CHECK(ssim(base, shifted) > ssim(base, scrambled));
}

TEST_CASE("consistency oracle values") {
  Tensor lr = to_unit_range(testutil::synth_image(3, 8, 8));
  CHECK(consistency(lr, lr) == doctest::Approx(0.0).epsilon(1e-9));

  // Same-size "sr" offset by 0.01 everywhere: MSE 1e-4, scaled to 10.
  Tensor off = lr;
  for (auto& v : off.data) v += 0.01f;
  CHECK(consistency(lr, off) == doctest::Approx(10.0).epsilon(1e-3));

  // Bicubic upsampling is near-consistent; an unrelated image is far off.
  Tensor up = resize_bicubic(lr, 32, 32);
  Tensor other = resize_bicubic(to_unit_range(testutil::synth_image(4, 8, 8)), 32, 32);
  CHECK(consistency(lr, up) < 20.0);
  CHECK(consistency(lr, other) > 10.0 * consistency(lr, up));

  Tensor small({1, 3, 4, 4});
  CHECK_THROWS_AS(consistency(lr, small), ShapeError);
  Tensor chw({3, 8, 8});
  CHECK_THROWS_AS(consistency(lr, chw), ShapeError);
  Tensor batch2({2, 3, 8, 8});
  CHECK_THROWS_AS(consistency(batch2, lr), ShapeError);
}

TEST_CASE("consistency accepts unbatched planes") {
  Tensor lr({3, 6, 6}), sr({3, 12, 12});
  lr.fill(0.5f);
  sr.fill(0.5f);
  CHECK(consistency(lr, sr) == doctest::Approx(0.0).epsilon(1e-6));
}

}  // TEST_SUITE
