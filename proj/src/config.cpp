#include "implicitsr/config.hpp"

#include <fstream>
#include <set>

#include "implicitsr/errors.hpp"

namespace isr {

namespace {

using nlohmann::json;

void check_keys(const json& j, const std::string& section, std::set<std::string> allowed) {
  if (!j.is_object()) throw ConfigError("config section '" + section + "' must be an object");
  for (const auto& [key, v] : j.items())
    if (!allowed.count(key))
      throw ConfigError("unknown config key '" + key + "' in section '" + section + "'");
}

template <typename T>
void read_into(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string("config key '") + key + "' has the wrong type");
  }
}

}  // namespace

void RunConfig::validate() const {
  model.validate();
  if (schedule.kind != "linear") throw ConfigError("schedule.kind: only 'linear' is supported");
  if (schedule.steps < 1) throw ConfigError("schedule.steps must be >= 1");
  if (!(schedule.beta_start > 0.0) || !(schedule.beta_end < 1.0) ||
      schedule.beta_start > schedule.beta_end)
    throw ConfigError("schedule betas must satisfy 0 < start <= end < 1");
  if (train.milestone_steps < 0 || train.post_milestone_steps < 0)
    throw ConfigError("train step counts must be non-negative");
  if (train.lr_phase2 > train.lr_phase1)
    throw ConfigError("train.lr_phase2 must not exceed train.lr_phase1");
  if (train.batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
  if (train.checkpoint_interval < 1) throw ConfigError("train.checkpoint_interval must be >= 1");
  if (data.lr_size < 1) throw ConfigError("data.lr_size must be >= 1");
  if (sampler.variance != "beta" && sampler.variance != "posterior")
    throw ConfigError("sampler.variance must be 'beta' or 'posterior'");
  if (eval.scales.empty()) throw ConfigError("eval.scales must not be empty");
  for (double s : eval.scales)
    if (!(s > 1.0)) throw ConfigError("eval.scales entries must exceed 1");
  for (const auto& m : eval.metrics)
    if (m != "psnr" && m != "ssim" && m != "consistency")
      throw ConfigError("unknown eval metric: " + m);
}

nlohmann::json RunConfig::to_json() const {
  return json{
      {"model",
       {{"depth", model.depth},
        {"base_channels", model.base_channels},
        {"channel_mult", model.channel_mult},
        {"dropout", model.dropout},
        {"max_scale", model.max_scale}}},
      {"schedule",
       {{"steps", schedule.steps},
        {"beta_start", schedule.beta_start},
        {"beta_end", schedule.beta_end},
        {"kind", schedule.kind}}},
      {"train",
       {{"milestone_steps", train.milestone_steps},
        {"post_milestone_steps", train.post_milestone_steps},
        {"lr_phase1", train.lr_phase1},
        {"lr_phase2", train.lr_phase2},
        {"batch_size", train.batch_size},
        {"seed", train.seed},
        {"checkpoint_interval", train.checkpoint_interval},
        {"out_dir", train.out_dir}}},
      {"data", {{"train_dir", data.train_dir}, {"lr_size", data.lr_size}}},
      {"sampler", {{"variance", sampler.variance}, {"seed", sampler.seed}}},
      {"eval", {{"metrics", eval.metrics}, {"scales", eval.scales}}}};
}

RunConfig RunConfig::from_json(const json& j) {
  check_keys(j, "(root)", {"model", "schedule", "train", "data", "sampler", "eval"});
  RunConfig c;
  if (j.contains("model")) {
    const auto& m = j["model"];
    check_keys(m, "model", {"depth", "base_channels", "channel_mult", "dropout", "max_scale"});
    read_into(m, "depth", c.model.depth);
    read_into(m, "base_channels", c.model.base_channels);
    read_into(m, "channel_mult", c.model.channel_mult);
    read_into(m, "dropout", c.model.dropout);
    read_into(m, "max_scale", c.model.max_scale);
    if (!m.contains("channel_mult")) {
      c.model.channel_mult.clear();
      for (int64_t i = 0; i < c.model.depth; ++i) c.model.channel_mult.push_back(int64_t(1) << i);
    }
  }
  if (j.contains("schedule")) {
    const auto& s = j["schedule"];
    check_keys(s, "schedule", {"steps", "beta_start", "beta_end", "kind"});
    read_into(s, "steps", c.schedule.steps);
    read_into(s, "beta_start", c.schedule.beta_start);
    read_into(s, "beta_end", c.schedule.beta_end);
    read_into(s, "kind", c.schedule.kind);
  }
  if (j.contains("train")) {
    const auto& t = j["train"];
    check_keys(t, "train",
               {"milestone_steps", "post_milestone_steps", "lr_phase1", "lr_phase2", "batch_size",
                "seed", "checkpoint_interval", "out_dir"});
    read_into(t, "milestone_steps", c.train.milestone_steps);
    read_into(t, "post_milestone_steps", c.train.post_milestone_steps);
    read_into(t, "lr_phase1", c.train.lr_phase1);
    read_into(t, "lr_phase2", c.train.lr_phase2);
    read_into(t, "batch_size", c.train.batch_size);
    read_into(t, "seed", c.train.seed);
    read_into(t, "checkpoint_interval", c.train.checkpoint_interval);
    read_into(t, "out_dir", c.train.out_dir);
  }
  if (j.contains("data")) {
    const auto& d = j["data"];
    check_keys(d, "data", {"train_dir", "lr_size"});
    read_into(d, "train_dir", c.data.train_dir);
    read_into(d, "lr_size", c.data.lr_size);
  }
  if (j.contains("sampler")) {
    const auto& s = j["sampler"];
    check_keys(s, "sampler", {"variance", "seed"});
    read_into(s, "variance", c.sampler.variance);
    read_into(s, "seed", c.sampler.seed);
  }
  if (j.contains("eval")) {
    const auto& e = j["eval"];
    check_keys(e, "eval", {"metrics", "scales"});
    read_into(e, "metrics", c.eval.metrics);
    read_into(e, "scales", c.eval.scales);
  }
  try {
    c.validate();
  } catch (const ParamError& e) {
    throw ConfigError(e.what());
  }
  return c;
}

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config: " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return from_json(j);
}

}  // namespace isr
