#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "implicitsr/checkpoint.hpp"
#include "implicitsr/config.hpp"
#include "implicitsr/dataset.hpp"
#include "implicitsr/denoiser.hpp"
#include "implicitsr/rng.hpp"
#include "implicitsr/schedule.hpp"

namespace isr {

// Phase-1 draws return M; phase-2 draws are uniform over (1, M].
double sample_scale(int phase, double max_scale, Rng& rng);

// Mean absolute difference (the training objective on plain tensors).
double l1(const Tensor& a, const Tensor& b);

struct AdamState {
  std::vector<Tensor> m, v;  // aligned with ParamStore order
  int64_t t = 0;
};

struct TrainBatch {
  Tensor x_lr, y0, eps;
  std::vector<int64_t> t;
  double s = 0.0;
};

class Trainer {
 public:
  explicit Trainer(const RunConfig& config);

  // One optimization step: assemble a batch, one Adam update. Returns the
  // loss and appends a "step<TAB>phase<TAB>s<TAB>loss" line to the log.
  double run_step(const Dataset& ds);

  // Runs the two-phase protocol to completion, writing periodic checkpoints
  // into out_dir and streaming the loss log.
  void train(const Dataset& ds, const std::string& out_dir, std::ostream& log);

  Checkpoint to_checkpoint() const;
  static Trainer from_checkpoint(const Checkpoint& ck);

  int64_t step() const { return step_; }
  int64_t total_steps() const;
  int current_phase() const;  // phase of the NEXT step
  double learning_rate(int phase) const;

  const RunConfig& config() const { return cfg_; }
  Denoiser& model() { return model_; }
  const Denoiser& model() const { return model_; }
  const NoiseSchedule& schedule() const { return sched_; }
  const std::vector<std::string>& log_lines() const { return log_lines_; }
  Rng& rng() { return rng_; }

  TrainBatch make_batch(const Dataset& ds, double s);

  // One Adam update on an explicit batch; run_step wraps this.
  double apply_step(const TrainBatch& batch, double lr);

 private:
  void adam_update(double lr);

  RunConfig cfg_;
  Rng rng_;
  Denoiser model_;
  NoiseSchedule sched_;
  AdamState adam_;
  int64_t step_ = 0;
  std::vector<std::string> log_lines_;
};

}  // namespace isr
