#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace ovseg::testkit {

// Stable stream derivation (splitmix64 step) so per-image seeds never
// collide with the master seed.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// mt19937_64 raw output is pinned by the standard. The helpers below avoid
// std::uniform_*_distribution, whose mapping is implementation-defined, so
// generated fixtures are identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t u64() { return eng_(); }

  std::uint32_t below(std::uint32_t n) {
    // Multiply-shift mapping; bias is negligible for test-scale n.
    return static_cast<std::uint32_t>((static_cast<unsigned __int128>(u64()) * n) >> 64);
  }

  double unit() { return static_cast<double>(u64() >> 11) * 0x1.0p-53; }

  double range(double lo, double hi) { return lo + (hi - lo) * unit(); }

  bool chance(double p) { return unit() < p; }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[below(static_cast<std::uint32_t>(i))]);
    }
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace ovseg::testkit
