#include "implicitsr/model_bundle.hpp"

#include "implicitsr/errors.hpp"

namespace isr {

namespace {

Rng& init_rng() {
  static thread_local Rng rng(0);
  return rng;
}

}  // namespace

ModelBundle::ModelBundle(const RunConfig& config)
    : cfg(config),
      model(config.model, init_rng()),
      sched(build_schedule(config.schedule.steps, config.schedule.beta_start,
                           config.schedule.beta_end)) {}

ModelBundle ModelBundle::from_checkpoint(const Checkpoint& ck) {
  if (!ck.meta.contains("config")) throw CheckpointError("checkpoint has no config");
  RunConfig cfg;
  try {
    cfg = RunConfig::from_json(ck.meta.at("config"));
  } catch (const ConfigError& e) {
    throw CheckpointError(std::string("checkpoint config invalid: ") + e.what());
  }
  ModelBundle mb(cfg);
  for (auto& [name, p] : mb.model.params.items) {
    const Tensor& t = ck.find(name);
    if (t.dims != p->value.dims) throw CheckpointError("tensor shape mismatch: " + name);
    p->value = t;
  }
  return mb;
}

ModelBundle ModelBundle::load(const std::string& path) {
  return from_checkpoint(Checkpoint::load(path));
}

VarianceMode ModelBundle::variance_mode() const {
  return cfg.sampler.variance == "posterior" ? VarianceMode::posterior : VarianceMode::beta;
}

}  // namespace isr
