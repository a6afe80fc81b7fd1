#pragma once

#include <string>

#include "implicitsr/checkpoint.hpp"
#include "implicitsr/config.hpp"
#include "implicitsr/denoiser.hpp"
#include "implicitsr/sampler.hpp"
#include "implicitsr/schedule.hpp"

namespace isr {

// Inference-side view of a checkpoint: config, weights, schedule.
struct ModelBundle {
  RunConfig cfg;
  Denoiser model;
  NoiseSchedule sched;

  explicit ModelBundle(const RunConfig& config);
  static ModelBundle from_checkpoint(const Checkpoint& ck);
  static ModelBundle load(const std::string& path);

  VarianceMode variance_mode() const;
};

}  // namespace isr
