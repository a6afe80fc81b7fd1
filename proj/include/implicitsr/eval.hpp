#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "implicitsr/dataset.hpp"
#include "implicitsr/denoiser.hpp"
#include "implicitsr/sampler.hpp"
#include "implicitsr/schedule.hpp"

namespace isr {

struct EvalRecord {
  std::string id;
  double scale = 0.0;
  double psnr = 0.0;
  double ssim = 0.0;
  double consistency = 0.0;
};

struct EvalAggregate {
  double scale = 0.0;
  double psnr = 0.0;
  double ssim = 0.0;
  double consistency = 0.0;
  int64_t count = 0;
};

struct EvalReport {
  std::vector<EvalRecord> records;
  std::vector<std::string> metrics;

  // Arithmetic means per scale, in first-seen scale order.
  std::vector<EvalAggregate> aggregates() const;
  std::string to_text() const;
};

// Degrades each image at each scale, samples SR, and scores it against the
// bicubic-resized ground truth. Per-image seeds derive from (seed, index).
EvalReport run_eval(const Denoiser& model, const NoiseSchedule& sched, const Dataset& ds,
                    int64_t lr_size, const std::vector<double>& scales,
                    const std::vector<std::string>& metrics, uint64_t seed, VarianceMode mode);

}  // namespace isr
