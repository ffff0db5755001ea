#ifndef HYPTEST_RNG_HPP
#define HYPTEST_RNG_HPP

#include <cmath>
#include <cstdint>
#include <span>

namespace hyptest {

inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// SplitMix64 generator. Streams are derived by hashing (seed, stream id),
// so workers can be given independent substreams whose output does not
// depend on thread scheduling.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(mix64(seed ^ 0x6a09e667f3bcc909ULL)) {}

  static Rng stream(std::uint64_t seed, std::uint64_t stream_id) {
    return Rng(mix64(seed) ^ mix64(stream_id ^ 0x9e3779b97f4a7c15ULL));
  }

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0,1).
  double next_unit() { return (next_u64() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0,k).
  int next_below(int k) { return static_cast<int>(next_unit() * k) % k; }

  double next_gaussian() {
    // Box-Muller without caching; two uniforms per call keeps the draw
    // count per event fixed, which the determinism tests rely on.
    double u1 = next_unit();
    double u2 = next_unit();
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  // Categorical sample against a cumulative distribution (last entry ~1).
  int sample_cdf(std::span<const double> cdf) {
    double u = next_unit();
    int lo = 0, hi = static_cast<int>(cdf.size()) - 1;
    while (lo < hi) {
      int mid = (lo + hi) / 2;
      if (u < cdf[static_cast<std::size_t>(mid)])
        hi = mid;
      else
        lo = mid + 1;
    }
    return lo;
  }

 private:
  std::uint64_t state_;
};

}  // namespace hyptest

#endif
