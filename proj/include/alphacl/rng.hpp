#pragma once

#include <cmath>
#include <cstdint>

namespace alphacl {

// Counter-based deterministic generator: value k of stream s under seed q is
// splitmix64_finalize(key(q, s) + k * GOLDEN). Stateless draws keyed by a
// counter give bit-identical sequences on every platform, which the standard
// <random> distributions do not guarantee. Streams make parallel fan-out
// reproducible: derive one stream per worker/sample and draw independently.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0)
      : key_(mix(seed ^ mix(stream ^ 0x5851f42d4c957f2dULL))) {}

  // Derive an independent child stream from this generator's key.
  Rng child(std::uint64_t substream) const {
    Rng r(0);
    r.key_ = mix(key_ ^ mix(substream ^ 0xda3e39cb94b95bdbULL));
    r.counter_ = 0;
    return r;
  }

  std::uint64_t next_u64() { return mix(key_ + (++counter_) * kGolden); }

  // Uniform on [0, 1): 53 random bits.
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box–Muller; two draws per value, no cached state.
  double normal() {
    const double u1 =
        static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;  // (0, 1]
    const double u2 = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    return std::sqrt(-2.0 * std::log(u1)) *
           std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  // Uniform integer in [0, n), n > 0. Modulo bias is irrelevant here
  // (n << 2^64 at desk scale).
  std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 private:
  static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace alphacl
