#pragma once

#include <json.hpp>

#include <string>
#include <utility>
#include <vector>

#include "implicitsr/tensor.hpp"

namespace isr {

// Single-file archive: magic, a JSON metadata block, then the named tensors
// as raw little-endian float32 in manifest order. Round-trips byte-exactly.
struct Checkpoint {
  static constexpr const char* kMagic = "ISRCKPT1";
  static constexpr int kFormatVersion = 1;

  nlohmann::json meta;  // includes "format_version" and a "tensors" manifest
  std::vector<std::pair<std::string, Tensor>> tensors;

  const Tensor& find(const std::string& name) const;
  bool has(const std::string& name) const;

  void save(const std::string& path) const;
  static Checkpoint load(const std::string& path);
};

}  // namespace isr
