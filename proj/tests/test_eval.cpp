#include <doctest.h>

#include <cstdio>
#include <sstream>
#include <string>
#include <vector>

#include "implicitsr/eval.hpp"
#include "support/testutil.hpp"

using namespace isr;

namespace {

Denoiser make_model(Rng& rng) {
  DenoiserConfig cfg;
  cfg.depth = 2;
  cfg.base_channels = 8;
  cfg.channel_mult = {1, 2};
  cfg.dropout = 0.0;
  cfg.max_scale = 4.0;
  return Denoiser(cfg, rng);
}

}  // namespace

TEST_SUITE("eval") {

TEST_CASE("aggregates recompute per-scale means in first-seen order") {
  EvalReport rep;
  rep.metrics = {"psnr", "ssim", "consistency"};
  rep.records.push_back({"a", 4.0, 20.0, 0.5, 10.0});
  rep.records.push_back({"b", 2.0, 30.0, 0.9, 2.0});
  rep.records.push_back({"c", 4.0, 24.0, 0.7, 30.0});

  auto agg = rep.aggregates();
  REQUIRE(agg.size() == 2);
  CHECK(agg[0].scale == 4.0);
  CHECK(agg[0].count == 2);
  CHECK(agg[0].psnr == doctest::Approx(22.0).epsilon(1e-12));
  CHECK(agg[0].ssim == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(agg[0].consistency == doctest::Approx(20.0).epsilon(1e-12));
  CHECK(agg[1].scale == 2.0);
  CHECK(agg[1].count == 1);
  CHECK(agg[1].psnr == doctest::Approx(30.0).epsilon(1e-12));
}

TEST_CASE("report text layout") {
  EvalReport rep;
  rep.metrics = {"psnr", "consistency"};
  rep.records.push_back({"img000", 2.6, 21.5, 0.8, 3.25});

  std::string text = rep.to_text();
  std::istringstream lines(text);
  std::string line;
  std::getline(lines, line);
  CHECK(line == "format_version 1");
  std::getline(lines, line);
  CHECK(line == "metric_space rgb_unit");
  std::getline(lines, line);
  CHECK(line == "image img000 scale 2.6000 psnr 21.500000 consistency 3.250000");
  std::getline(lines, line);
  CHECK(line == "aggregate mean scale 2.6000 psnr 21.500000 consistency 3.250000 images 1");
  CHECK_FALSE(std::getline(lines, line));
}

TEST_CASE("metric gating controls the emitted columns") {
  EvalReport rep;
  rep.metrics = {"ssim"};
  rep.records.push_back({"x", 2.0, 19.0, 0.75, 1.0});
  std::string text = rep.to_text();
  CHECK(text.find("ssim 0.750000") != std::string::npos);
  CHECK(text.find("psnr") == std::string::npos);
  CHECK(text.find("consistency") == std::string::npos);
}

TEST_CASE("run_eval covers every image at every scale") {
  Rng rng(120);
  Denoiser model = make_model(rng);
  auto sched = build_schedule(3, 0.01, 0.1);
  Dataset ds = testutil::synth_dataset(2, 32, 121);

  auto rep = run_eval(model, sched, ds, 8, {2.0, 1.5}, {"psnr", "ssim", "consistency"}, 9,
                      VarianceMode::beta);
  REQUIRE(rep.records.size() == 4);
  CHECK(rep.records[0].id == "img000");
  CHECK(rep.records[0].scale == 2.0);
  CHECK(rep.records[1].id == "img001");
  CHECK(rep.records[2].scale == 1.5);
  for (const auto& r : rep.records) {
    CHECK(r.psnr >= 0.0);
    CHECK(r.psnr <= 100.0);
    CHECK(r.ssim >= -1.0);
    CHECK(r.ssim <= 1.0);
    CHECK(r.consistency >= 0.0);
  }
  auto agg = rep.aggregates();
  REQUIRE(agg.size() == 2);
  CHECK(agg[0].count == 2);
  CHECK(agg[0].psnr ==
        doctest::Approx((rep.records[0].psnr + rep.records[1].psnr) / 2.0).epsilon(1e-12));
}

TEST_CASE("run_eval is deterministic in the seed") {
  Rng rng(122);
  Denoiser model = make_model(rng);
  auto sched = build_schedule(2, 0.01, 0.1);
  Dataset ds = testutil::synth_dataset(2, 24, 123);

  auto a = run_eval(model, sched, ds, 8, {2.0}, {"psnr"}, 5, VarianceMode::beta);
  auto b = run_eval(model, sched, ds, 8, {2.0}, {"psnr"}, 5, VarianceMode::beta);
  CHECK(a.to_text() == b.to_text());

  auto c = run_eval(model, sched, ds, 8, {2.0}, {"psnr"}, 6, VarianceMode::beta);
  CHECK(a.to_text() != c.to_text());

  // Different images draw different per-image noise even under one seed.
  CHECK(a.records[0].psnr != a.records[1].psnr);
}

TEST_CASE("run_eval validates its inputs") {
  Rng rng(124);
  Denoiser model = make_model(rng);
  auto sched = build_schedule(2, 0.01, 0.1);
  Dataset ds = testutil::synth_dataset(1, 24, 125);

  CHECK_THROWS_AS(run_eval(model, sched, ds, 8, {}, {"psnr"}, 0, VarianceMode::beta), ParamError);
  Dataset empty;
  CHECK_THROWS_AS(run_eval(model, sched, empty, 8, {2.0}, {"psnr"}, 0, VarianceMode::beta),
                  DataError);
}

}  // TEST_SUITE
