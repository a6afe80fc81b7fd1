#include "implicitsr/schedule.hpp"

#include <cmath>

#include "implicitsr/errors.hpp"

namespace isr {

double NoiseSchedule::beta_at(int64_t t) const {
  if (t < 1 || t > steps()) throw ParamError("schedule: step out of range");
  return beta[static_cast<size_t>(t - 1)];
}

double NoiseSchedule::gamma_at(int64_t t) const {
  if (t < 1 || t > steps()) throw ParamError("schedule: step out of range");
  return gamma[static_cast<size_t>(t - 1)];
}

double NoiseSchedule::gamma_prev(int64_t t) const {
  if (t < 1 || t > steps()) throw ParamError("schedule: step out of range");
  return t == 1 ? 1.0 : gamma[static_cast<size_t>(t - 2)];
}

NoiseSchedule build_schedule(int64_t steps, double beta_start, double beta_end) {
  if (steps < 1) throw ParamError("build_schedule: steps must be >= 1");
  if (!(beta_start > 0.0) || !(beta_end < 1.0) || beta_start > beta_end)
    throw ParamError("build_schedule: require 0 < beta_start <= beta_end < 1");
  NoiseSchedule s;
  s.beta.resize(static_cast<size_t>(steps));
  s.alpha.resize(static_cast<size_t>(steps));
  s.gamma.resize(static_cast<size_t>(steps));
  double run = 1.0;
  for (int64_t i = 0; i < steps; ++i) {
    double frac = steps == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(steps - 1);
    double b = beta_start + (beta_end - beta_start) * frac;
    s.beta[static_cast<size_t>(i)] = b;
    s.alpha[static_cast<size_t>(i)] = 1.0 - b;
    run *= 1.0 - b;
    s.gamma[static_cast<size_t>(i)] = run;
  }
  return s;
}

Tensor q_sample_gamma(const Tensor& y0, double gamma, const Tensor& eps) {
  if (!(gamma >= 0.0) || gamma > 1.0) throw ParamError("q_sample: gamma outside [0, 1]");
  check_same_shape(y0, eps, "q_sample");
  return lin_comb(std::sqrt(gamma), y0, std::sqrt(1.0 - gamma), eps);
}

Tensor q_sample(const Tensor& y0, int64_t t, const Tensor& eps, const NoiseSchedule& sched) {
  return q_sample_gamma(y0, sched.gamma_at(t), eps);
}

}  // namespace isr
