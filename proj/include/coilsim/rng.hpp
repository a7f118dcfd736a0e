#pragma once

#include <cstdint>
#include <random>

#include "coilsim/types.hpp"

namespace coilsim {

// Deterministic uniform sampling on top of mt19937_64. std::uniform_*
// distributions are implementation-defined, so ensemble reproducibility
// (bitwise-identical histograms across builds) requires rolling the
// bits-to-double mapping ourselves.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(seed) {}

  uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53 bits of mantissa.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform in the closed ball of given radius (rejection from the cube).
  Vec3 in_ball(double radius) {
    while (true) {
      Vec3 p(uniform(-1.0, 1.0), uniform(-1.0, 1.0), uniform(-1.0, 1.0));
      if (p.squaredNorm() <= 1.0) return radius * p;
    }
  }

  // Uniform direction on the unit sphere.
  Vec3 unit_vector() {
    while (true) {
      Vec3 p = in_ball(1.0);
      double n = p.norm();
      if (n > 1e-6) return p / n;
    }
  }

  // Stable derived seed for sub-tasks (run index, shape generation, ...).
  static uint64_t derive(uint64_t seed, uint64_t stream) {
    // splitmix64 over the combined words
    uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace coilsim
