#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace hdlogit {

// Seeded random stream with explicit substream derivation. Every stochastic
// routine in the library takes one of these; there is no global generator.
// Substreams are derived by hashing (seed, id...) so that parallel workers
// draw from independent, schedule-free sequences.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : engine_(mix(seed)) {}

  static RngStream substream(std::uint64_t seed, std::uint64_t id) {
    return RngStream(mix(seed) ^ mix(id * 0x9e3779b97f4a7c15ull + 0x2545f4914f6cdd1dull));
  }
  static RngStream substream(std::uint64_t seed, std::uint64_t id1, std::uint64_t id2) {
    return substream(mix(seed) ^ mix(id1 + 0x632be59bd9b4e019ull), id2);
  }

  std::uint64_t next_u64() { return engine_(); }

  // uniform on (0,1); never returns an exact endpoint
  double uniform() {
    return (static_cast<double>(engine_() >> 11) + 0.5) * (1.0 / 9007199254740992.0);
  }

  // standard normal via the polar (Marsaglia) method; implementation-defined
  // std::normal_distribution is avoided so that streams are portable
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    have_spare_ = true;
    return u * f;
  }

  // integer uniform on [0, bound) without modulo bias
  std::uint64_t below(std::uint64_t bound) {
    const std::uint64_t threshold = (-bound) % bound;
    for (;;) {
      const std::uint64_t r = engine_();
      if (r >= threshold) return r % bound;
    }
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {  // splitmix64 finalizer
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace hdlogit
