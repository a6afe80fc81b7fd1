#pragma once

#include <json.hpp>

#include <cstdint>
#include <string>
#include <vector>

#include "implicitsr/denoiser.hpp"

namespace isr {

struct ScheduleConfig {
  int64_t steps = 1000;
  double beta_start = 1e-4;
  double beta_end = 2e-2;
  std::string kind = "linear";
};

struct TrainSection {
  int64_t milestone_steps = 2000;
  int64_t post_milestone_steps = 1000;
  double lr_phase1 = 1e-4;
  double lr_phase2 = 2e-5;
  int64_t batch_size = 4;
  uint64_t seed = 0;
  int64_t checkpoint_interval = 500;
  std::string out_dir = "runs";
};

struct DataSection {
  std::string train_dir;
  int64_t lr_size = 16;
};

struct SamplerSection {
  std::string variance = "beta";  // "beta" or "posterior"
  uint64_t seed = 0;
};

struct EvalSection {
  std::vector<std::string> metrics = {"psnr", "ssim", "consistency"};
  std::vector<double> scales = {4.0};
};

// Whole-run configuration document. Strict: unknown keys are rejected.
// Defaults are the initializers above and DenoiserConfig's.
struct RunConfig {
  DenoiserConfig model;
  ScheduleConfig schedule;
  TrainSection train;
  DataSection data;
  SamplerSection sampler;
  EvalSection eval;

  void validate() const;
  nlohmann::json to_json() const;
  static RunConfig from_json(const nlohmann::json& j);
  static RunConfig from_file(const std::string& path);

  // HR working size: round(max_scale * lr_size).
  int64_t hr_size() const { return scaled_size(model.max_scale, data.lr_size); }
};

}  // namespace isr
