#include "implicitsr/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>

#include "implicitsr/errors.hpp"

namespace isr {

double sample_scale(int phase, double max_scale, Rng& rng) {
  if (!(max_scale > 1.0)) throw ParamError("sample_scale: max scale must exceed 1");
  if (phase == 1) return max_scale;
  return rng.uniform_open_closed(1.0, max_scale);
}

double l1(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "l1");
  double acc = 0.0;
  for (int64_t i = 0; i < a.numel(); ++i)
    acc += std::abs(static_cast<double>(a.data[i]) - static_cast<double>(b.data[i]));
  return a.numel() ? acc / static_cast<double>(a.numel()) : 0.0;
}

Trainer::Trainer(const RunConfig& config)
    : cfg_(config),
      rng_(config.train.seed),
      model_(config.model, rng_),
      sched_(build_schedule(config.schedule.steps, config.schedule.beta_start,
                            config.schedule.beta_end)) {
  cfg_.validate();
  for (const auto& [name, p] : model_.params.items) {
    adam_.m.emplace_back(p->value.dims);
    adam_.v.emplace_back(p->value.dims);
  }
}

int64_t Trainer::total_steps() const {
  return cfg_.train.milestone_steps + cfg_.train.post_milestone_steps;
}

int Trainer::current_phase() const { return step_ < cfg_.train.milestone_steps ? 1 : 2; }

double Trainer::learning_rate(int phase) const {
  return phase == 1 ? cfg_.train.lr_phase1 : cfg_.train.lr_phase2;
}

TrainBatch Trainer::make_batch(const Dataset& ds, double s) {
  if (ds.count() == 0) throw DataError("train: empty dataset");
  int64_t bsz = cfg_.train.batch_size;
  int64_t lr = cfg_.data.lr_size;
  int64_t ys = scaled_size(s, lr);

  TrainBatch batch;
  batch.s = s;
  batch.x_lr = Tensor({bsz, 3, lr, lr});
  batch.y0 = Tensor({bsz, 3, ys, ys});
  batch.eps = Tensor({bsz, 3, ys, ys});
  batch.t.resize(static_cast<size_t>(bsz));

  for (int64_t b = 0; b < bsz; ++b) {
    int64_t pick = rng_.uniform_int(0, ds.count() - 1);
    auto [x_lr, y0] = degrade(ds.images[static_cast<size_t>(pick)], s, lr);
    std::copy(x_lr.data.begin(), x_lr.data.end(), batch.x_lr.data.begin() + b * 3 * lr * lr);
    std::copy(y0.data.begin(), y0.data.end(), batch.y0.data.begin() + b * 3 * ys * ys);
  }
  for (int64_t b = 0; b < bsz; ++b)
    batch.t[static_cast<size_t>(b)] = rng_.uniform_int(1, sched_.steps());
  rng_.normal_fill(batch.eps.data);
  return batch;
}

double Trainer::apply_step(const TrainBatch& batch, double lr) {
  int64_t bsz = batch.y0.dims[0];
  int64_t per = batch.y0.numel() / bsz;

  Tensor y_t(batch.y0.dims);
  std::vector<double> gamma(static_cast<size_t>(bsz));
  for (int64_t b = 0; b < bsz; ++b) {
    double g = sched_.gamma_at(batch.t[static_cast<size_t>(b)]);
    gamma[static_cast<size_t>(b)] = g;
    double sg = std::sqrt(g), se = std::sqrt(1.0 - g);
    for (int64_t i = 0; i < per; ++i)
      y_t.data[b * per + i] = static_cast<float>(sg * batch.y0.data[b * per + i] +
                                                 se * batch.eps.data[b * per + i]);
  }

  auto eps_pred =
      model_.forward(ag::leaf(batch.x_lr), ag::leaf(y_t), gamma, batch.s, &rng_);
  auto loss = ag::l1_loss(eps_pred, ag::leaf(batch.eps));
  double value = loss->value.data[0];
  if (!std::isfinite(value))
    throw TrainError("non-finite loss at step " + std::to_string(step_ + 1) +
                     " (s=" + std::to_string(batch.s) + ")");
  ag::backward(loss);
  adam_update(lr);
  model_.params.zero_grads();
  return value;
}

void Trainer::adam_update(double lr) {
  constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  adam_.t += 1;
  double c1 = 1.0 - std::pow(b1, static_cast<double>(adam_.t));
  double c2 = 1.0 - std::pow(b2, static_cast<double>(adam_.t));
  for (size_t k = 0; k < model_.params.items.size(); ++k) {
    auto& p = model_.params.items[k].second;
    if (p->grad.dims != p->value.dims) continue;  // parameter unused this step
    Tensor& m = adam_.m[k];
    Tensor& v = adam_.v[k];
    for (int64_t i = 0; i < p->value.numel(); ++i) {
      double g = p->grad.data[i];
      double mi = b1 * m.data[i] + (1.0 - b1) * g;
      double vi = b2 * v.data[i] + (1.0 - b2) * g * g;
      m.data[i] = static_cast<float>(mi);
      v.data[i] = static_cast<float>(vi);
      p->value.data[i] -= static_cast<float>(lr * (mi / c1) / (std::sqrt(vi / c2) + eps));
    }
  }
}

double Trainer::run_step(const Dataset& ds) {
  int phase = current_phase();
  double s = sample_scale(phase, cfg_.model.max_scale, rng_);
  TrainBatch batch = make_batch(ds, s);
  double loss = apply_step(batch, learning_rate(phase));
  step_ += 1;
  char line[128];
  std::snprintf(line, sizeof(line), "%lld\t%d\t%.6f\t%.8f", static_cast<long long>(step_), phase,
                s, loss);
  log_lines_.emplace_back(line);
  return loss;
}

void Trainer::train(const Dataset& ds, const std::string& out_dir, std::ostream& log) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw DataError("cannot create output directory: " + out_dir);

  while (step_ < total_steps()) {
    run_step(ds);
    log << log_lines_.back() << '\n';
    if (step_ % cfg_.train.checkpoint_interval == 0 || step_ == total_steps()) {
      char name[64];
      std::snprintf(name, sizeof(name), "step%06lld.ckpt", static_cast<long long>(step_));
      to_checkpoint().save((fs::path(out_dir) / name).string());
    }
  }
  to_checkpoint().save((fs::path(out_dir) / "final.ckpt").string());
}

Checkpoint Trainer::to_checkpoint() const {
  Checkpoint ck;
  ck.meta["config"] = cfg_.to_json();
  ck.meta["step"] = step_;
  ck.meta["adam_t"] = adam_.t;
  ck.meta["rng"] = rng_.state();
  for (const auto& [name, p] : model_.params.items) ck.tensors.emplace_back(name, p->value);
  for (size_t k = 0; k < model_.params.items.size(); ++k)
    ck.tensors.emplace_back("adam.m." + model_.params.items[k].first, adam_.m[k]);
  for (size_t k = 0; k < model_.params.items.size(); ++k)
    ck.tensors.emplace_back("adam.v." + model_.params.items[k].first, adam_.v[k]);
  return ck;
}

Trainer Trainer::from_checkpoint(const Checkpoint& ck) {
  if (!ck.meta.contains("config")) throw CheckpointError("checkpoint has no config");
  RunConfig cfg;
  try {
    cfg = RunConfig::from_json(ck.meta.at("config"));
  } catch (const ConfigError& e) {
    throw CheckpointError(std::string("checkpoint config invalid: ") + e.what());
  }
  Trainer tr(cfg);
  tr.step_ = ck.meta.value("step", int64_t(0));
  tr.adam_.t = ck.meta.value("adam_t", int64_t(0));
  if (ck.meta.contains("rng")) tr.rng_.set_state(ck.meta.at("rng").get<std::string>());
  for (size_t k = 0; k < tr.model_.params.items.size(); ++k) {
    const auto& name = tr.model_.params.items[k].first;
    auto& p = tr.model_.params.items[k].second;
    const Tensor& t = ck.find(name);
    if (t.dims != p->value.dims) throw CheckpointError("tensor shape mismatch: " + name);
    p->value = t;
    if (ck.has("adam.m." + name)) tr.adam_.m[k] = ck.find("adam.m." + name);
    if (ck.has("adam.v." + name)) tr.adam_.v[k] = ck.find("adam.v." + name);
  }
  return tr;
}

}  // namespace isr
