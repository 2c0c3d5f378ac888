#pragma once

#include <cstdint>
#include <random>

namespace foldcont {

/// splitmix64 finalizer; derives independent stream seeds from (seed, counter).
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t counter) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (counter + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Uniform doubles with a platform-independent bit pattern
/// (std::uniform_real_distribution is implementation-defined).
class UniformStream {
 public:
  explicit UniformStream(std::uint64_t seed) : engine_(seed) {}
  double next01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double next(double lo, double hi) { return lo + (hi - lo) * next01(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace foldcont
