#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "implicitsr/rng.hpp"
#include "implicitsr/tensor.hpp"

namespace isr {

// Diffusion variance schedule. Index convention: step t in [1, T] reads
// beta[t-1]; gamma[t-1] holds the cumulative product up to t.
struct NoiseSchedule {
  std::vector<double> beta;
  std::vector<double> alpha;   // 1 - beta
  std::vector<double> gamma;   // prefix products of alpha

  int64_t steps() const { return static_cast<int64_t>(beta.size()); }
  double beta_at(int64_t t) const;
  double gamma_at(int64_t t) const;
  // gamma_{t-1} with gamma_0 := 1, for the posterior variance.
  double gamma_prev(int64_t t) const;
};

// Linear schedule from beta_start to beta_end over `steps` steps.
// Requires steps >= 1 and 0 < beta_start <= beta_end < 1.
NoiseSchedule build_schedule(int64_t steps, double beta_start, double beta_end);

// Forward diffusion at explicit gamma: sqrt(g)*y0 + sqrt(1-g)*eps.
Tensor q_sample_gamma(const Tensor& y0, double gamma, const Tensor& eps);

// Forward diffusion at step t of the schedule.
Tensor q_sample(const Tensor& y0, int64_t t, const Tensor& eps, const NoiseSchedule& sched);

}  // namespace isr
