#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace freeunmix {

/// Seedable 64-bit random source used everywhere randomness is needed.
///
/// The generator is std::mt19937_64 (fully specified by the standard, so
/// sequences are reproducible across platforms for a given seed). Substreams
/// are derived with SplitMix64: stream(seed, i) seeds the engine with
/// splitmix64(splitmix64(seed) + i). Gaussian variates come from the
/// Box-Muller transform on 53-bit uniforms, one pair per two draws.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Independent substream for (seed, index); used to give every component,
  /// restart, or Monte-Carlo trial its own deterministic stream.
  static Rng stream(std::uint64_t seed, std::uint64_t index) {
    return Rng(splitmix64(splitmix64(seed) + index));
  }

  static std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller; caches the second variate of each pair.
  double gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    // u1 in (0, 1] so the log is finite.
    double u1 = (static_cast<double>(engine_() >> 11) + 1.0) * 0x1.0p-53;
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace freeunmix
