#pragma once

// Counter-based random substreams. Every draw in a pool or sample owns the
// stream derived from (seed, stream id, index), so results do not depend on
// how work is split across threads.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <vector>

namespace wfsel {

inline constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Hashes a seed and a path of counters into one 64-bit seed.
inline constexpr std::uint64_t derive_seed(std::uint64_t seed,
                                           std::uint64_t a,
                                           std::uint64_t b = 0,
                                           std::uint64_t c = 0) noexcept {
  std::uint64_t h = splitmix64(seed ^ 0x5851f42d4c957f2dULL);
  h = splitmix64(h ^ a);
  h = splitmix64(h ^ (b + 0x14057b7ef767814fULL));
  h = splitmix64(h ^ (c + 0x2545f4914f6cdd1dULL));
  return h;
}

/// xoshiro256** seeded through splitmix64; satisfies
/// UniformRandomBitGenerator so it plugs into <random> distributions.
class Stream {
 public:
  using result_type = std::uint64_t;

  explicit Stream(std::uint64_t seed) noexcept {
    std::uint64_t x = seed;
    for (auto& s : state_) {
      x += 0x9e3779b97f4a7c15ULL;
      s = splitmix64(x);
    }
  }
  Stream(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
         std::uint64_t c = 0) noexcept
      : Stream(derive_seed(seed, a, b, c)) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  result_type operator()() noexcept {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform on the open interval (0, 1).
  double uniform() noexcept {
    return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
  }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
    return (x << k) | (x >> (64 - k));
  }
  std::array<std::uint64_t, 4> state_{};
};

/// Stream ids keep unrelated consumers of one seed apart.
enum class StreamId : std::uint64_t {
  pool = 1,
  neutral = 2,
  rejection = 3,
  mh = 4,
  posterior = 5,
  bootstrap = 6,
  study = 7,
  optimizer = 8,
};

inline constexpr std::uint64_t id(StreamId s) noexcept {
  return static_cast<std::uint64_t>(s);
}

/// One Dirichlet(alpha) draw from normalized Gamma variates. Each coordinate
/// uses its own substream of `draw_seed` so that a small change in alpha
/// perturbs draws smoothly (common random numbers across parameter values).
inline void dirichlet_draw(std::uint64_t draw_seed,
                           std::span<const double> alpha,
                           std::span<double> out) {
  double total = 0.0;
  for (std::size_t j = 0; j < alpha.size(); ++j) {
    Stream rng(draw_seed, j);
    std::gamma_distribution<double> gamma(alpha[j], 1.0);
    double g = gamma(rng);
    // Small shapes can underflow to zero; keep the point interior.
    if (!(g > std::numeric_limits<double>::min())) {
      g = std::numeric_limits<double>::min();
    }
    out[j] = g;
    total += g;
  }
  for (double& v : out) v /= total;
}

}  // namespace wfsel
