#pragma once

#include <cmath>
#include <cstdint>

namespace sdq {

// Neumaier-compensated accumulator; the triangular recursions sum long
// alternating-magnitude sequences and plain += loses digits there.
struct CompensatedSum {
  double s = 0.0;
  double c = 0.0;
  void add(double x) {
    double t = s + x;
    if (std::abs(s) >= std::abs(x))
      c += (s - t) + x;
    else
      c += (x - t) + s;
    s = t;
  }
  double value() const { return s + c; }
};

inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Counter-based per-stream generator: state advances by a fixed gamma and
// each output is a strong mix of the state.  Streams for (seed, index) pairs
// are decorrelated by hashing both into the initial state.
struct SplitMix64 {
  std::uint64_t state = 0;
  explicit SplitMix64(std::uint64_t s) : state(s) {}
  SplitMix64(std::uint64_t seed, std::uint64_t stream)
      : state(mix64(seed ^ mix64(stream + 0x632be59bd9b4e019ULL))) {}
  std::uint64_t next() {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
  // uniform on (0,1), never returns 0 or 1
  double uniform() { return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53; }
  double exponential() { return -std::log(uniform()); }
};

}  // namespace sdq
