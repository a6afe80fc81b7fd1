#include "implicitsr/eval.hpp"

#include <algorithm>
#include <cstdio>

#include "implicitsr/errors.hpp"
#include "implicitsr/metrics.hpp"

namespace isr {

std::vector<EvalAggregate> EvalReport::aggregates() const {
  std::vector<EvalAggregate> out;
  for (const auto& r : records) {
    auto it = std::find_if(out.begin(), out.end(),
                           [&](const EvalAggregate& a) { return a.scale == r.scale; });
    if (it == out.end()) {
      out.push_back({r.scale, 0.0, 0.0, 0.0, 0});
      it = out.end() - 1;
    }
    it->psnr += r.psnr;
    it->ssim += r.ssim;
    it->consistency += r.consistency;
    it->count += 1;
  }
  for (auto& a : out) {
    a.psnr /= static_cast<double>(a.count);
    a.ssim /= static_cast<double>(a.count);
    a.consistency /= static_cast<double>(a.count);
  }
  return out;
}

std::string EvalReport::to_text() const {
  auto has = [&](const char* m) {
    return std::find(metrics.begin(), metrics.end(), m) != metrics.end();
  };
  std::string out = "format_version 1\nmetric_space rgb_unit\n";
  char buf[256];
  auto emit = [&](const char* kind, const std::string& id, double scale, double p, double s,
                  double c, int64_t n) {
    int len = std::snprintf(buf, sizeof(buf), "%s %s scale %.4f", kind, id.c_str(), scale);
    if (has("psnr")) len += std::snprintf(buf + len, sizeof(buf) - len, " psnr %.6f", p);
    if (has("ssim")) len += std::snprintf(buf + len, sizeof(buf) - len, " ssim %.6f", s);
    if (has("consistency"))
      len += std::snprintf(buf + len, sizeof(buf) - len, " consistency %.6f", c);
    if (n >= 0) std::snprintf(buf + len, sizeof(buf) - len, " images %lld",
                              static_cast<long long>(n));
    out += buf;
    out += '\n';
  };
  for (const auto& r : records) emit("image", r.id, r.scale, r.psnr, r.ssim, r.consistency, -1);
  for (const auto& a : aggregates())
    emit("aggregate", "mean", a.scale, a.psnr, a.ssim, a.consistency, a.count);
  return out;
}

EvalReport run_eval(const Denoiser& model, const NoiseSchedule& sched, const Dataset& ds,
                    int64_t lr_size, const std::vector<double>& scales,
                    const std::vector<std::string>& metrics, uint64_t seed, VarianceMode mode) {
  if (scales.empty()) throw ParamError("run_eval: empty scales list");
  if (ds.count() == 0) throw DataError("run_eval: empty dataset");

  EvalReport report;
  report.metrics = metrics;
  uint64_t index = 0;
  for (double s : scales) {
    for (int64_t i = 0; i < ds.count(); ++i, ++index) {
      auto [x_lr, y0] = degrade(ds.images[static_cast<size_t>(i)], s, lr_size);
      SamplerConfig sc{mode, mix_seed(seed, index)};
      Tensor sr = sample(x_lr, s, model, sched, sc);

      Tensor sr_u = to_unit_range(sr);
      Tensor y0_u = to_unit_range(y0);
      EvalRecord rec;
      rec.id = ds.names[static_cast<size_t>(i)];
      rec.scale = s;
      rec.psnr = psnr(sr_u, y0_u);
      rec.ssim = ssim(sr_u, y0_u);
      rec.consistency = consistency(to_unit_range(x_lr), sr_u);
      report.records.push_back(rec);
    }
  }
  return report;
}

}  // namespace isr
