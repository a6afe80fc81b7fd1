#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "implicitsr/dataset.hpp"
#include "implicitsr/errors.hpp"
#include "implicitsr/eval.hpp"
#include "implicitsr/image_io.hpp"
#include "implicitsr/model_bundle.hpp"
#include "implicitsr/sampler.hpp"
#include "implicitsr/trainer.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitCheckpoint = 4;

int cmd_train(const std::string& config_path) {
  isr::RunConfig cfg = isr::RunConfig::from_file(config_path);
  if (cfg.data.train_dir.empty()) throw isr::ConfigError("data.train_dir is required for train");
  isr::Dataset ds = isr::load_dataset(cfg.data.train_dir, cfg.hr_size());
  isr::Trainer trainer(cfg);

  fs::create_directories(cfg.train.out_dir);
  std::ofstream log(fs::path(cfg.train.out_dir) / "loss.log", std::ios::trunc);
  if (!log) throw isr::DataError("cannot write loss log in " + cfg.train.out_dir);
  trainer.train(ds, cfg.train.out_dir, log);
  std::cout << "trained " << trainer.step() << " steps; checkpoints in " << cfg.train.out_dir
            << "\n";
  return 0;
}

int cmd_sample(const std::string& ckpt_path, const std::string& input_path, double scale,
               uint64_t seed, bool seed_set, const std::string& output_path) {
  auto bundle = isr::ModelBundle::load(ckpt_path);
  isr::Tensor x_lr = isr::read_png(input_path);
  isr::SamplerConfig sc{bundle.variance_mode(), seed_set ? seed : bundle.cfg.sampler.seed};
  isr::Tensor sr = isr::sample(x_lr, scale, bundle.model, bundle.sched, sc);
  isr::write_png(output_path, sr);
  std::printf("%lldx%lld\n", static_cast<long long>(sr.dims[2]),
              static_cast<long long>(sr.dims[3]));
  return 0;
}

int cmd_eval(const std::string& ckpt_path, const std::string& data_dir,
             std::vector<double> scales, uint64_t seed, bool seed_set,
             const std::string& output_path) {
  auto bundle = isr::ModelBundle::load(ckpt_path);
  if (scales.empty()) scales = bundle.cfg.eval.scales;
  for (double s : scales)
    if (!(s > 1.0)) throw isr::ParamError("eval scales must exceed 1");
  isr::Dataset ds = isr::load_dataset(data_dir, bundle.cfg.hr_size());
  auto report =
      isr::run_eval(bundle.model, bundle.sched, ds, bundle.cfg.data.lr_size, scales,
                    bundle.cfg.eval.metrics, seed_set ? seed : bundle.cfg.sampler.seed,
                    bundle.variance_mode());
  std::string text = report.to_text();
  if (!output_path.empty()) {
    std::ofstream out(output_path, std::ios::trunc);
    if (!out) throw isr::DataError("cannot write report: " + output_path);
    out << text;
  }
  std::cout << text;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"continuous-scale diffusion super-resolution"};
  app.require_subcommand(1);

  auto* train = app.add_subcommand("train", "run the two-phase training protocol");
  std::string config_path;
  train->add_option("--config", config_path, "run configuration (JSON)")->required();

  auto* sample = app.add_subcommand("sample", "super-resolve one LR image");
  std::string ckpt_path, input_path, output_path;
  double scale = 0.0;
  uint64_t seed = 0;
  sample->add_option("--checkpoint", ckpt_path, "trained checkpoint")->required();
  sample->add_option("--input", input_path, "LR input PNG")->required();
  sample->add_option("--scale", scale, "magnification (> 1)")->required();
  auto* sample_seed = sample->add_option("--seed", seed, "sampling seed");
  sample->add_option("--output", output_path, "output PNG path")->required();

  auto* eval = app.add_subcommand("eval", "score a checkpoint on a dataset");
  std::string data_dir, report_path;
  std::vector<double> scales;
  eval->add_option("--checkpoint", ckpt_path, "trained checkpoint")->required();
  eval->add_option("--data", data_dir, "directory of HR PNGs")->required();
  eval->add_option("--scales", scales, "magnifications to test");
  auto* eval_seed = eval->add_option("--seed", seed, "evaluation seed");
  eval->add_option("--output", report_path, "report file path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (train->parsed()) return cmd_train(config_path);
    if (sample->parsed()) {
      if (!(scale > 1.0)) {
        std::cerr << "error: --scale must exceed 1\n";
        return kExitUsage;
      }
      return cmd_sample(ckpt_path, input_path, scale, seed, !sample_seed->empty(), output_path);
    }
    if (eval->parsed())
      return cmd_eval(ckpt_path, data_dir, scales, seed, !eval_seed->empty(), report_path);
  } catch (const isr::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const isr::CheckpointError& e) {
    std::cerr << "checkpoint error: " << e.what() << "\n";
    return kExitCheckpoint;
  } catch (const isr::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return kExitUsage;
}
