#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <random>
#include <string_view>

namespace activelo {

// FNV-1a, used to fold string ids into seeds.
uint64_t hash_string(std::string_view s);

// Deterministic seed derivation; chaining calls decorrelates sub-streams.
uint64_t mix_seed(uint64_t seed, uint64_t salt);

// Seeded generator with explicit distributions so results do not depend on
// the standard library's std::*_distribution implementations.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t next() { return engine_(); }

  // [0, 1)
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller.
  double normal();

  double normal(double sigma) { return sigma * normal(); }

  // Uniform direction on the unit sphere.
  Eigen::Vector3d unit_vector();

  // Inclusive bounds.
  int uniform_int(int lo, int hi);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace activelo
