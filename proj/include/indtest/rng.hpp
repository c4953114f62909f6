#pragma once

#include <cmath>
#include <cstdint>

namespace indtest {

// Counter-based deterministic generator. Streams are derived by mixing the
// seed with stream identifiers, so independent tasks (trial, start, n) can
// draw reproducibly regardless of scheduling order.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : state_(mix64(seed ^ kGolden)) {}

  CounterRng derive(std::uint64_t stream) const {
    return CounterRng(mix64(state_ + kGolden * (stream + 1)));
  }
  CounterRng derive(std::uint64_t a, std::uint64_t b) const { return derive(a).derive(b); }

  std::uint64_t next_u64() {
    state_ += kGolden;
    return mix64(state_);
  }

  // Uniform in [0, 1).
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Exponential(1) via inverse CDF; used for Dirichlet draws.
  double next_exponential() {
    double u = next_double();
    return -std::log1p(-u);
  }

 private:
  static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ull;

  static std::uint64_t mix64(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ull;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebull;
    z ^= z >> 31;
    return z;
  }

  std::uint64_t state_;
};

}  // namespace indtest
