#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

namespace isr {

// Deterministic RNG used everywhere randomness is needed. Gaussian draws go
// through an explicit Box-Muller transform (no hidden distribution state), so
// a serialized engine state fully determines the remaining stream.
class Rng {
 public:
  explicit Rng(uint64_t seed = 0) : eng_(seed) {}

  uint64_t raw() { return eng_(); }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform01() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  // Uniform in (lo, hi]: hi is included, lo excluded.
  double uniform_open_closed(double lo, double hi) { return hi - uniform01() * (hi - lo); }

  // Uniform integer in [lo, hi] via rejection-free Lemire-style mapping.
  int64_t uniform_int(int64_t lo, int64_t hi) {
    uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
    return lo + static_cast<int64_t>(eng_() % span);
  }

  double normal() {
    double u1 = uniform01();
    double u2 = uniform01();
    if (u1 <= 0) u1 = 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  template <typename T>
  void normal_fill(std::span<T> out) {
    size_t i = 0;
    while (i + 1 < out.size()) {
      double u1 = uniform01();
      double u2 = uniform01();
      if (u1 <= 0) u1 = 0x1.0p-53;
      double r = std::sqrt(-2.0 * std::log(u1));
      out[i++] = static_cast<T>(r * std::cos(2.0 * M_PI * u2));
      out[i++] = static_cast<T>(r * std::sin(2.0 * M_PI * u2));
    }
    if (i < out.size()) out[i] = static_cast<T>(normal());
  }

  template <typename T>
  void normal_fill(std::vector<T>& out) {
    normal_fill(std::span<T>(out));
  }

  template <typename T>
  void uniform_fill(std::span<T> out, double lo, double hi) {
    for (auto& v : out) v = static_cast<T>(lo + uniform01() * (hi - lo));
  }

  std::string state() const {
    std::ostringstream os;
    os << eng_;
    return os.str();
  }

  void set_state(const std::string& s) {
    std::istringstream is(s);
    is >> eng_;
  }

 private:
  std::mt19937_64 eng_;
};

// Stateless mixing for derived seeds (per-image eval seeds etc.).
inline uint64_t mix_seed(uint64_t seed, uint64_t index) {
  uint64_t z = seed ^ (0x9E3779B97F4A7C15ull * (index + 1));
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

}  // namespace isr
