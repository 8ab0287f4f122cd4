#pragma once

#include <cstdint>
#include <random>

namespace cppo {

using Rng = std::mt19937_64;

// Streams keep independently seeded sources apart when derived from one run seed.
enum class Stream : std::uint64_t {
  kEpisode = 1,
  kPolicy = 2,
  kShuffle = 3,
  kInit = 4,
  kEval = 5,
};

inline Rng make_rng(std::uint64_t seed, Stream stream = Stream::kEpisode, std::uint64_t index = 0) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(index),
                    static_cast<std::uint32_t>(index >> 32)};
  return Rng(seq);
}

// Portable [0, 1) draw; std::uniform_real_distribution output is library-specific.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

// Unbiased integer in [lo, hi] by rejection.
inline int uniform_int(Rng& rng, int lo, int hi) {
  const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
  const std::uint64_t limit = Rng::max() - Rng::max() % span;
  std::uint64_t draw = rng();
  while (draw >= limit) draw = rng();
  return lo + static_cast<int>(draw % span);
}

}  // namespace cppo
