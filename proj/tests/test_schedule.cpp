#include <doctest.h>

#include <cmath>

#include "implicitsr/errors.hpp"
#include "implicitsr/schedule.hpp"
#include "support/testutil.hpp"

using namespace isr;

TEST_SUITE("schedule") {

TEST_CASE("single step product") {
  auto s = build_schedule(1, 0.5, 0.5);
  CHECK(s.steps() == 1);
  CHECK(s.beta_at(1) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(s.gamma_at(1) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("two-step running product") {
  auto s = build_schedule(2, 0.1, 0.2);
  CHECK(s.beta_at(1) == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(s.beta_at(2) == doctest::Approx(0.2).epsilon(1e-15));
  CHECK(testutil::rel_err(s.gamma_at(1), 0.9) < 1e-12);
  CHECK(testutil::rel_err(s.gamma_at(2), 0.72) < 1e-12);
  CHECK(s.gamma_prev(1) == 1.0);
  CHECK(s.gamma_prev(2) == s.gamma_at(1));
}

TEST_CASE("vanishing-beta limit approaches gamma one") {
  auto s = build_schedule(50, 1e-12, 1e-12);
  CHECK(s.gamma_at(50) > 1.0 - 1e-9);
  for (int64_t t = 1; t <= 50; ++t) CHECK(s.gamma_at(t) <= 1.0);
}

TEST_CASE("parameter validation") {
  CHECK_THROWS_AS(build_schedule(0, 0.1, 0.2), ParamError);
  CHECK_THROWS_AS(build_schedule(10, 0.0, 0.2), ParamError);
  CHECK_THROWS_AS(build_schedule(10, 0.1, 1.0), ParamError);
  CHECK_THROWS_AS(build_schedule(10, 0.3, 0.2), ParamError);
  auto s = build_schedule(3, 0.1, 0.3);
  CHECK_THROWS_AS(s.gamma_at(0), ParamError);
  CHECK_THROWS_AS(s.gamma_at(4), ParamError);
  CHECK_THROWS_AS(s.beta_at(-1), ParamError);
}

TEST_CASE("gamma matches running product and never increases") {
  Rng rng(7);
  for (int rep = 0; rep < 100; ++rep) {
    int64_t steps = 1 + rng.uniform_int(0, 199);
    double b0 = 1e-5 + rng.uniform01() * 0.1;
    double b1 = b0 + rng.uniform01() * (0.9 - b0);
    auto s = build_schedule(steps, b0, b1);
    double run = 1.0;
    double prev = 1.0;
    for (int64_t t = 1; t <= steps; ++t) {
      double beta = s.beta_at(t);
      CHECK(beta > 0.0);
      CHECK(beta < 1.0);
      run *= 1.0 - beta;
      CHECK(testutil::rel_err(s.gamma_at(t), run) < 1e-12);
      CHECK(s.gamma_at(t) <= prev);
      prev = s.gamma_at(t);
    }
  }
}

TEST_CASE("q_sample noiseless case") {
  Rng rng(11);
  auto s = build_schedule(2, 0.1, 0.2);
  Tensor y0 = testutil::random_tensor({1, 3, 4, 4}, rng);
  Tensor eps({1, 3, 4, 4});
  Tensor out = q_sample(y0, 2, eps, s);
  double sg = std::sqrt(0.72);
  for (int64_t i = 0; i < y0.numel(); ++i)
    CHECK(out.data[i] == doctest::Approx(sg * y0.data[i]).epsilon(1e-6));
}

TEST_CASE("q_sample identity at gamma one") {
  Rng rng(12);
  Tensor y0 = testutil::random_tensor({2, 3, 3, 3}, rng);
  Tensor eps = testutil::random_tensor({2, 3, 3, 3}, rng);
  Tensor out = q_sample_gamma(y0, 1.0, eps);
  for (int64_t i = 0; i < y0.numel(); ++i) CHECK(out.data[i] == y0.data[i]);
}

TEST_CASE("q_sample validation") {
  auto s = build_schedule(2, 0.1, 0.2);
  Tensor y0({1, 3, 2, 2});
  Tensor eps_bad({1, 3, 2, 3});
  Tensor eps({1, 3, 2, 2});
  CHECK_THROWS_AS(q_sample(y0, 1, eps_bad, s), ShapeError);
  CHECK_THROWS_AS(q_sample(y0, 0, eps, s), ParamError);
  CHECK_THROWS_AS(q_sample(y0, 3, eps, s), ParamError);
  CHECK_THROWS_AS(q_sample_gamma(y0, 1.5, eps), ParamError);
  CHECK_THROWS_AS(q_sample_gamma(y0, -0.1, eps), ParamError);
}

TEST_CASE("q_sample is linear in y0 and eps") {
  Rng rng(13);
  auto s = build_schedule(4, 0.05, 0.3);
  Tensor a = testutil::random_tensor({1, 1, 3, 3}, rng);
  Tensor b = testutil::random_tensor({1, 1, 3, 3}, rng);
  Tensor e = testutil::random_tensor({1, 1, 3, 3}, rng);
  Tensor sum(a.dims);
  for (int64_t i = 0; i < a.numel(); ++i) sum.data[i] = a.data[i] + b.data[i];
  Tensor lhs = q_sample(sum, 3, e, s);
  Tensor ra = q_sample(a, 3, e, s);
  Tensor rb = q_sample(b, 3, Tensor(e.dims), s);
  for (int64_t i = 0; i < a.numel(); ++i)
    CHECK(lhs.data[i] == doctest::Approx(ra.data[i] + rb.data[i]).epsilon(1e-5));
}

TEST_CASE("monte-carlo variance of the forward marginal") {
  auto s = build_schedule(2, 0.1, 0.2);  // gamma_2 = 0.72
  const int64_t n = 10000;
  const int64_t pixels = 8;
  Tensor y0({1, 1, 1, pixels});
  Rng rng(99);
  Tensor eps({1, 1, 1, pixels});
  std::vector<double> sum(pixels, 0.0), sumsq(pixels, 0.0);
  for (int64_t k = 0; k < n; ++k) {
    rng.normal_fill(eps.data);
    Tensor yt = q_sample(y0, 2, eps, s);
    for (int64_t p = 0; p < pixels; ++p) {
      sum[p] += yt.data[p];
      sumsq[p] += static_cast<double>(yt.data[p]) * yt.data[p];
    }
  }
  double want = 1.0 - 0.72;
  double band = 3.0 * want * std::sqrt(2.0 / (n - 1));
  for (int64_t p = 0; p < pixels; ++p) {
    double mean = sum[p] / n;
    double var = sumsq[p] / n - mean * mean;
    CHECK(std::abs(var - want) < band);
    CHECK(std::abs(mean) < 3.0 * std::sqrt(want / n));
  }
}

}  // TEST_SUITE
