#include "implicitsr/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "implicitsr/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint serialization assumes a little-endian host");

namespace isr {

const Tensor& Checkpoint::find(const std::string& name) const {
  for (const auto& [n, t] : tensors)
    if (n == name) return t;
  throw CheckpointError("checkpoint missing tensor: " + name);
}

bool Checkpoint::has(const std::string& name) const {
  for (const auto& [n, t] : tensors)
    if (n == name) return true;
  return false;
}

void Checkpoint::save(const std::string& path) const {
  nlohmann::json meta_out = meta;
  meta_out["format_version"] = kFormatVersion;
  nlohmann::json manifest = nlohmann::json::array();
  for (const auto& [name, t] : tensors) manifest.push_back({{"name", name}, {"dims", t.dims}});
  meta_out["tensors"] = manifest;
  std::string js = meta_out.dump();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("cannot write checkpoint: " + path);
  out.write(kMagic, 8);
  uint64_t len = js.size();
  out.write(reinterpret_cast<const char*>(&len), sizeof(len));
  out.write(js.data(), static_cast<std::streamsize>(js.size()));
  for (const auto& [name, t] : tensors)
    out.write(reinterpret_cast<const char*>(t.data.data()),
              static_cast<std::streamsize>(t.numel() * sizeof(float)));
  if (!out) throw CheckpointError("checkpoint write failed: " + path);
}

Checkpoint Checkpoint::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint: " + path);
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kMagic, 8) != 0)
    throw CheckpointError("not a checkpoint file: " + path);
  uint64_t len = 0;
  in.read(reinterpret_cast<char*>(&len), sizeof(len));
  if (!in || len > (1ull << 32)) throw CheckpointError("corrupt checkpoint header: " + path);
  std::string js(len, '\0');
  in.read(js.data(), static_cast<std::streamsize>(len));
  if (!in) throw CheckpointError("truncated checkpoint metadata: " + path);

  Checkpoint ck;
  try {
    ck.meta = nlohmann::json::parse(js);
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("bad checkpoint metadata: ") + e.what());
  }
  if (!ck.meta.contains("format_version") || ck.meta["format_version"] != kFormatVersion)
    throw CheckpointError("unsupported checkpoint format version");
  if (!ck.meta.contains("tensors") || !ck.meta["tensors"].is_array())
    throw CheckpointError("checkpoint missing tensor manifest");

  for (const auto& entry : ck.meta["tensors"]) {
    std::string name = entry.at("name").get<std::string>();
    std::vector<int64_t> dims = entry.at("dims").get<std::vector<int64_t>>();
    Tensor t(dims);
    in.read(reinterpret_cast<char*>(t.data.data()),
            static_cast<std::streamsize>(t.numel() * sizeof(float)));
    if (!in) throw CheckpointError("truncated tensor payload: " + name);
    ck.tensors.emplace_back(std::move(name), std::move(t));
  }
  ck.meta.erase("tensors");
  return ck;
}

}  // namespace isr
