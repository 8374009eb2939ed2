#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>

namespace ldbar {

// Deterministic sampler. The engine sequence is pinned by the standard and the
// bit-to-double mapping is explicit, so a seed reproduces the same stream on
// every platform regardless of thread count or library version.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Area-uniform point of the disk of radius rmax.
  std::complex<double> disk_point(double rmax) {
    const double r = rmax * std::sqrt(uniform());
    const double th = uniform(0.0, 2.0 * std::numbers::pi);
    return std::polar(r, th);
  }

  std::uint64_t raw() { return gen_(); }

  // Derive an independent child stream; used to hand each worker its own
  // generator so results do not depend on the number of workers.
  Rng fork(std::uint64_t salt) {
    return Rng(raw() ^ (0x9e3779b97f4a7c15ULL * (salt + 1)));
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace ldbar
