#include <doctest.h>

#include <cmath>
#include <string>
#include <vector>

#include "implicitsr/denoiser.hpp"
#include "support/testutil.hpp"

using namespace isr;

namespace {

DenoiserConfig tiny_config(int64_t depth = 2, int64_t base = 8, double dropout = 0.0) {
  DenoiserConfig cfg;
  cfg.depth = depth;
  cfg.base_channels = base;
  cfg.channel_mult.assign(static_cast<size_t>(depth), 1);
  if (depth >= 2) cfg.channel_mult.back() = 2;
  cfg.dropout = dropout;
  cfg.max_scale = 8.0;
  return cfg;
}

}  // namespace

TEST_SUITE("denoiser") {

TEST_CASE("config validation") {
  DenoiserConfig cfg = tiny_config();
  CHECK_NOTHROW(cfg.validate());

  DenoiserConfig bad = cfg;
  bad.depth = 0;
  CHECK_THROWS_AS(bad.validate(), ParamError);
  bad = cfg;
  bad.channel_mult = {1};
  CHECK_THROWS_AS(bad.validate(), ParamError);
  bad = cfg;
  bad.base_channels = 0;
  CHECK_THROWS_AS(bad.validate(), ParamError);
  bad = cfg;
  bad.channel_mult = {1, 0};
  CHECK_THROWS_AS(bad.validate(), ParamError);
  bad = cfg;
  bad.max_scale = 1.0;
  CHECK_THROWS_AS(bad.validate(), ParamError);
  bad = cfg;
  bad.dropout = 1.0;
  CHECK_THROWS_AS(bad.validate(), ParamError);
  bad = cfg;
  bad.dropout = -0.1;
  CHECK_THROWS_AS(bad.validate(), ParamError);

  CHECK(cfg.channels_at(0) == 8);
  CHECK(cfg.channels_at(1) == 8);
  CHECK(cfg.channels_at(2) == 16);
}

TEST_CASE("output resolution rule") {
  CHECK(scaled_size(2.0, 16) == 32);
  CHECK(scaled_size(2.6, 16) == 42);
  CHECK(scaled_size(10.7, 16) == 171);
  // Half-integer product rounds away from zero.
  CHECK(scaled_size(2.53125, 16) == 41);
  CHECK(scaled_size(1.5, 3) == 5);
}

TEST_CASE("resolution ladder") {
  auto sizes = resolution_ladder(32, 32, 3);
  REQUIRE(sizes.size() == 4);
  CHECK(sizes[0] == std::pair<int64_t, int64_t>{32, 32});
  CHECK(sizes[1] == std::pair<int64_t, int64_t>{16, 16});
  CHECK(sizes[2] == std::pair<int64_t, int64_t>{8, 8});
  CHECK(sizes[3] == std::pair<int64_t, int64_t>{4, 4});

  auto odd = resolution_ladder(171, 171, 3);
  CHECK(odd[1] == std::pair<int64_t, int64_t>{86, 86});
  CHECK(odd[2] == std::pair<int64_t, int64_t>{43, 43});
  CHECK(odd[3] == std::pair<int64_t, int64_t>{22, 22});

  CHECK_NOTHROW(resolution_ladder(5, 3, 2));
  CHECK_THROWS_AS(resolution_ladder(1, 1, 1), ConfigError);
  CHECK_THROWS_AS(resolution_ladder(2, 1, 2), ConfigError);
  CHECK_THROWS_AS(resolution_ladder(4, 4, 3), ConfigError);
}

TEST_CASE("noise level sinusoid") {
  auto emb = gamma_sinusoid<float>({0.0, 0.001}, 64);
  REQUIRE(emb.dims == std::vector<int64_t>{2, 64});
  for (int64_t k = 0; k < 32; ++k) {
    CHECK(emb.data[k] == 0.0f);
    CHECK(emb.data[32 + k] == 1.0f);
  }
  // Second row: level = 1, lowest frequency component is exactly sin(1)/cos(1).
  CHECK(emb.data[64 + 0] == doctest::Approx(std::sin(1.0)).epsilon(1e-6));
  CHECK(emb.data[64 + 32] == doctest::Approx(std::cos(1.0)).epsilon(1e-6));
  // Highest index uses frequency 1e-4.
  CHECK(emb.data[64 + 31] == doctest::Approx(std::sin(1e-4)).epsilon(1e-4));
  for (float v : emb.data) {
    CHECK(v <= 1.0f);
    CHECK(v >= -1.0f);
  }
}

TEST_CASE("forward output shape follows the resolution rule") {
  Rng rng(60);
  Denoiser model(tiny_config(), rng);
  auto x_lr = ag::leaf(testutil::random_tensor({1, 3, 16, 16}, rng, 0.3));

  auto y32 = ag::leaf(testutil::random_tensor({1, 3, 32, 32}, rng, 0.3));
  auto out = model.forward(x_lr, y32, {0.5}, 2.0);
  CHECK(out->value.dims == std::vector<int64_t>{1, 3, 32, 32});

  auto y42 = ag::leaf(testutil::random_tensor({1, 3, 42, 42}, rng, 0.3));
  auto out26 = model.forward(x_lr, y42, {0.5}, 2.6);
  CHECK(out26->value.dims == std::vector<int64_t>{1, 3, 42, 42});
}

TEST_CASE("forward validates its inputs") {
  Rng rng(61);
  Denoiser model(tiny_config(), rng);
  auto x_lr = ag::leaf(testutil::random_tensor({1, 3, 8, 8}, rng));
  auto y_t = ag::leaf(testutil::random_tensor({1, 3, 16, 16}, rng));

  auto flat = ag::leaf(testutil::random_tensor({3, 8, 8}, rng));
  CHECK_THROWS_AS(model.forward(flat, y_t, {0.5}, 2.0), ShapeError);

  auto four = ag::leaf(testutil::random_tensor({1, 4, 8, 8}, rng));
  CHECK_THROWS_AS(model.forward(four, y_t, {0.5}, 2.0), ShapeError);

  CHECK_THROWS_AS(model.forward(x_lr, y_t, {0.5}, 1.0), ParamError);
  CHECK_THROWS_AS(model.forward(x_lr, y_t, {0.5}, 0.5), ParamError);

  auto y_two = ag::leaf(testutil::random_tensor({2, 3, 16, 16}, rng));
  CHECK_THROWS_AS(model.forward(x_lr, y_two, {0.5}, 2.0), ShapeError);

  CHECK_THROWS_AS(model.forward(x_lr, y_t, {0.5, 0.6}, 2.0), ShapeError);

  auto y_off = ag::leaf(testutil::random_tensor({1, 3, 15, 16}, rng));
  CHECK_THROWS_AS(model.forward(x_lr, y_off, {0.5}, 2.0), ShapeError);

  // 2x2 input at s = 2 cannot feed a depth-3 ladder.
  Rng rng3(62);
  Denoiser deep(tiny_config(3, 4), rng3);
  auto lr2 = ag::leaf(testutil::random_tensor({1, 3, 2, 2}, rng3));
  auto y4 = ag::leaf(testutil::random_tensor({1, 3, 4, 4}, rng3));
  CHECK_THROWS_AS(deep.forward(lr2, y4, {0.5}, 2.0), ConfigError);
}

TEST_CASE("inference is deterministic") {
  Rng rng(63);
  Denoiser model(tiny_config(2, 8, 0.5), rng);
  auto x_lr = ag::leaf(testutil::random_tensor({2, 3, 8, 8}, rng, 0.3));
  auto y_t = ag::leaf(testutil::random_tensor({2, 3, 16, 16}, rng, 0.3));
  std::vector<double> gamma{0.7, 0.2};

  auto a = model.forward(x_lr, y_t, gamma, 2.0);
  auto b = model.forward(x_lr, y_t, gamma, 2.0);
  CHECK(a->value.data == b->value.data);
}

TEST_CASE("dropout is driven by the provided rng stream") {
  Rng rng(64);
  Denoiser model(tiny_config(2, 8, 0.5), rng);
  auto x_lr = ag::leaf(testutil::random_tensor({1, 3, 8, 8}, rng, 0.3));
  auto y_t = ag::leaf(testutil::random_tensor({1, 3, 16, 16}, rng, 0.3));

  Rng d1(99), d2(99), d3(100);
  auto a = model.forward(x_lr, y_t, {0.5}, 2.0, &d1);
  auto b = model.forward(x_lr, y_t, {0.5}, 2.0, &d2);
  auto c = model.forward(x_lr, y_t, {0.5}, 2.0, &d3);
  CHECK(a->value.data == b->value.data);
  CHECK(max_abs_diff(a->value, c->value) > 0.0);
}

TEST_CASE("nearby scales share a shape but not an output") {
  Rng rng(65);
  Denoiser model(tiny_config(), rng);
  auto x_lr = ag::leaf(testutil::random_tensor({1, 3, 16, 16}, rng, 0.3));
  auto y_t = ag::leaf(testutil::random_tensor({1, 3, 32, 32}, rng, 0.3));

  auto a = model.forward(x_lr, y_t, {0.5}, 2.0);
  auto b = model.forward(x_lr, y_t, {0.5}, 2.02);
  CHECK(a->value.dims == b->value.dims);
  CHECK(max_abs_diff(a->value, b->value) > 0.0);
}

TEST_CASE("forward responds to the noise level input") {
  Rng rng(66);
  Denoiser model(tiny_config(), rng);
  auto x_lr = ag::leaf(testutil::random_tensor({1, 3, 8, 8}, rng, 0.3));
  auto y_t = ag::leaf(testutil::random_tensor({1, 3, 16, 16}, rng, 0.3));
  auto a = model.forward(x_lr, y_t, {0.9}, 2.0);
  auto b = model.forward(x_lr, y_t, {0.1}, 2.0);
  CHECK(max_abs_diff(a->value, b->value) > 0.0);
}

TEST_CASE("zeroed network reduces to the head bias") {
  Rng rng(67);
  Denoiser model(tiny_config(), rng);
  for (auto& [name, v] : model.params.items) v->value.fill(0.0f);
  model.head.b->value.data[0] = 0.25f;
  model.head.b->value.data[1] = -0.5f;
  model.head.b->value.data[2] = 0.125f;

  auto x_lr = ag::leaf(testutil::random_tensor({1, 3, 8, 8}, rng, 0.3));
  auto y_t = ag::leaf(testutil::random_tensor({1, 3, 16, 16}, rng, 0.3));
  auto out = model.forward(x_lr, y_t, {0.5}, 2.0);
  REQUIRE(out->value.dims == std::vector<int64_t>{1, 3, 16, 16});
  for (int64_t c = 0; c < 3; ++c)
    for (int64_t i = 0; i < 256; ++i)
      CHECK(out->value.data[c * 256 + i] == model.head.b->value.data[c]);
}

TEST_CASE("every parameter group receives gradient") {
  Rng rng(68);
  Denoiser model(tiny_config(), rng);
  auto x_lr = ag::leaf(testutil::random_tensor({1, 3, 8, 8}, rng, 0.3));
  auto y_t = ag::leaf(testutil::random_tensor({1, 3, 16, 16}, rng, 0.3));
  auto target = ag::leaf(testutil::random_tensor({1, 3, 16, 16}, rng, 0.3));

  auto loss = ag::l1_loss(model.forward(x_lr, y_t, {0.5}, 2.0), target);
  ag::backward(loss);

  const char* groups[] = {"features.", "pyramid.",   "scale_mlp.", "gamma_emb.", "encoder.",
                          "bottleneck.", "implicit1.", "implicit2.", "head."};
  for (const char* g : groups) {
    double peak = 0.0;
    for (const auto& [name, v] : model.params.items) {
      if (name.rfind(g, 0) != 0) continue;
      if (v->grad.dims != v->value.dims) continue;
      for (float gv : v->grad.data) peak = std::max(peak, std::abs(static_cast<double>(gv)));
    }
    INFO("group " << g);
    CHECK(peak > 0.0);
  }
}

TEST_CASE("analytic gradients match finite differences through the full network") {
  Rng rng(69);
  DenoiserConfig cfg = tiny_config(2, 4);
  DenoiserT<double> model(cfg, rng);

  auto x_lr = ag::leaf(testutil::random_tensor_d({1, 3, 4, 4}, rng, 0.3));
  auto y_t = ag::leaf(testutil::random_tensor_d({1, 3, 8, 8}, rng, 0.3));
  auto target = ag::leaf(testutil::random_tensor_d({1, 3, 8, 8}, rng, 0.3));
  std::vector<double> gamma{0.6};

  auto eval_loss = [&]() {
    ag::NoGradGuard off;
    auto out = model.forward(x_lr, y_t, gamma, 2.0);
    return ag::half_mse_loss(out, target)->value.data[0];
  };

  auto loss = ag::half_mse_loss(model.forward(x_lr, y_t, gamma, 2.0), target);
  ag::backward(loss);

  const double h = 1e-5;
  int64_t probe = 0;
  for (auto& [name, v] : model.params.items) {
    int64_t idx = probe++ % v->value.numel();
    double analytic = v->grad.dims == v->value.dims ? v->grad.data[idx] : 0.0;
    double saved = v->value.data[idx];
    v->value.data[idx] = saved + h;
    double up = eval_loss();
    v->value.data[idx] = saved - h;
    double down = eval_loss();
    v->value.data[idx] = saved;
    double fd = (up - down) / (2.0 * h);
    INFO("param " << name << "[" << idx << "]");
    CHECK(std::abs(analytic - fd) < 1e-6 + 1e-4 * std::max(std::abs(analytic), std::abs(fd)));
  }
}

}  // TEST_SUITE
