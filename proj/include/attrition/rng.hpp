#pragma once

#include <cassert>
#include <cstdint>
#include <numeric>
#include <vector>

namespace attrition {

// Counter-based pseudo-random stream built on SplitMix64. A stream is fully
// determined by (seed, stream_id), so draw b of a Monte Carlo run can be
// generated as Rng(seed, b) on any worker without coordination, and results
// are identical regardless of thread count or platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0)
      : state_(mix(seed ^ mix(stream + 0x9e3779b97f4a7c15ull))) {}

  std::uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ull;
    return mix(state_);
  }

  // Uniform integer in [0, bound) via the multiply-high reduction; bound > 0.
  std::uint64_t next_below(std::uint64_t bound) {
    assert(bound > 0);
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * bound) >> 64);
  }

  // Uniform double in (0, 1): 53 random bits shifted into (0,1], then nudged
  // off the endpoints so inverse-CDF transforms stay finite.
  double next_uniform() {
    const std::uint64_t bits = next_u64() >> 11;  // 53 bits
    double u = (static_cast<double>(bits) + 0.5) * 0x1.0p-53;
    return u;
  }

  bool next_bernoulli(double p) { return next_uniform() < p; }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }
  std::uint64_t state_;
};

// Inverse standard-normal CDF (Wichura's AS 241, double precision).
// |error| well below 1e-9 over (0,1); used for simulated outcome draws and
// the qnorm() thresholds of the missingness generators.
double inverse_normal_cdf(double p);

// Draws a uniform random subset of size k from {0,...,n-1} by partial
// Fisher-Yates over the caller's scratch buffer (resized/reset internally).
// The result is written to `out` (size k, unsorted).
void sample_subset(Rng& rng, int n, int k, std::vector<int>& scratch,
                   std::vector<int>& out);

}  // namespace attrition
