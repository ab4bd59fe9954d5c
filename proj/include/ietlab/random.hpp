#pragma once

#include <cstdint>
#include <random>

namespace ietlab {

/// Deterministic uniform draws. std::uniform_real_distribution is
/// implementation-defined, so the transform from 64 random bits is fixed here.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 42) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace ietlab
