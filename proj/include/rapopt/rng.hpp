#ifndef RAPOPT_RNG_HPP
#define RAPOPT_RNG_HPP

#include <cmath>
#include <cstdint>

namespace rapopt {

// 128-bit-state PCG generator (XSL-RR output) with 64-bit output.
// All randomness in the library flows through this type so that runs are
// reproducible bit-for-bit across platforms from a single 64-bit seed.
class Pcg64 {
 public:
  explicit Pcg64(std::uint64_t seed) : state_(0) {
    step();
    state_ += seed;
    step();
  }

  std::uint64_t next() {
    const u128 old = state_;
    step();
    return output(old);
  }

  // Uniform in {0, ..., n-1} by rejection sampling (no modulo bias).
  std::uint64_t bounded(std::uint64_t n) {
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
      const std::uint64_t r = next();
      if (r >= threshold) return r % n;
    }
  }

  // Uniform in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Standard normal via Box-Muller; one spare value is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    // u1 in (0, 1] so the log is finite.
    const double u1 = (static_cast<double>(next() >> 11) + 1.0) * 0x1.0p-53;
    const double u2 = uniform01();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * 3.14159265358979323846 * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

 private:
  using u128 = unsigned __int128;

  static constexpr u128 mult() {
    return (u128(2549297995355413924ULL) << 64) | 4865540595714422341ULL;
  }
  static constexpr u128 increment() {
    return (u128(6364136223846793005ULL) << 64) | 1442695040888963407ULL;
  }

  void step() { state_ = state_ * mult() + increment(); }

  static std::uint64_t output(u128 s) {
    const std::uint64_t xored =
        static_cast<std::uint64_t>(s >> 64) ^ static_cast<std::uint64_t>(s);
    const unsigned rot = static_cast<unsigned>(s >> 122);
    return (xored >> rot) | (xored << ((64 - rot) & 63));
  }

  u128 state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// Derives an independent stream for auxiliary draws (e.g. output selection)
// so that the main iteration stream is unaffected by how often they occur.
inline std::uint64_t derive_stream(std::uint64_t seed, std::uint64_t tag) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (tag + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace rapopt

#endif
