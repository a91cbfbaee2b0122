#pragma once

// Counter-based stream derivation. Every random draw in the library comes
// from a stream keyed by (master seed, block, replicate), so results do not
// depend on the order in which blocks or replicates are executed.

#include <algorithm>
#include <array>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <vector>

#include "splitstat/error.hpp"

namespace splitstat {

namespace detail {

constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
  return (x << k) | (x >> (64 - k));
}

}  // namespace detail

struct SeedSpec {
  std::uint64_t master_seed = 0;

  // A child seed for an independent sub-experiment (e.g. one Monte Carlo
  // replication). Children of distinct (lane, index) pairs do not alias.
  SeedSpec child(std::uint64_t lane, std::uint64_t index) const noexcept;
};

// Reserved block indices for streams that are not tied to a data block.
inline constexpr std::uint64_t kPartitionLane = std::numeric_limits<std::uint64_t>::max();
inline constexpr std::uint64_t kPseudoLane = kPartitionLane - 1;
inline constexpr std::uint64_t kSubsetLane = kPartitionLane - 2;
inline constexpr std::uint64_t kDataLane = kPartitionLane - 3;

constexpr std::uint64_t stream_key(std::uint64_t master, std::uint64_t block,
                                   std::uint64_t replicate) noexcept {
  std::uint64_t h = detail::mix64(master ^ 0x243f6a8885a308d3ULL);
  h = detail::mix64(h ^ detail::mix64(block ^ 0x13198a2e03707344ULL));
  h = detail::mix64(h ^ detail::rotl(detail::mix64(replicate ^ 0xa4093822299f31d0ULL), 17));
  return h;
}

inline SeedSpec SeedSpec::child(std::uint64_t lane, std::uint64_t index) const noexcept {
  return SeedSpec{stream_key(master_seed ^ 0x082efa98ec4e6c89ULL, lane, index)};
}

// xoshiro256** seeded through splitmix64. Satisfies
// std::uniform_random_bit_generator so it works with <random> distributions.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed) noexcept {
    std::uint64_t x = seed;
    for (auto& s : state_) {
      x += 0x9e3779b97f4a7c15ULL;
      std::uint64_t z = x;
      z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
      z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
      s = z ^ (z >> 31);
    }
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  result_type operator()() noexcept {
    const std::uint64_t result = detail::rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = detail::rotl(state_[3], 45);
    return result;
  }

  // Uniform on [0, 1).
  double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, bound), Lemire's multiply-shift with rejection.
  std::uint64_t index(std::uint64_t bound) noexcept {
    __extension__ using u128 = unsigned __int128;
    u128 m = static_cast<u128>((*this)()) * bound;
    auto low = static_cast<std::uint64_t>(m);
    if (low < bound) {
      const std::uint64_t threshold = (0 - bound) % bound;
      while (low < threshold) {
        m = static_cast<u128>((*this)()) * bound;
        low = static_cast<std::uint64_t>(m);
      }
    }
    return static_cast<std::uint64_t>(m >> 64);
  }

 private:
  std::array<std::uint64_t, 4> state_{};
};

inline Rng derive_stream(SeedSpec seed, std::uint64_t block, std::uint64_t replicate) noexcept {
  return Rng(stream_key(seed.master_seed, block, replicate));
}

// Fisher-Yates; identical output for identical streams on every platform.
template <class T>
void shuffle(std::span<T> values, Rng& rng) {
  for (std::size_t i = values.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.index(i));
    std::swap(values[i - 1], values[j]);
  }
}

// Counts of a Multinomial(total, uniform over cells) draw via sequential
// binomial decomposition: O(cells) binomial draws.
inline void multinomial_uniform(Rng& rng, std::uint64_t total, std::span<std::uint32_t> counts) {
  const std::size_t cells = counts.size();
  detail::require(cells > 0, Errc::invalid_argument, "multinomial needs at least one cell");
  std::uint64_t remaining = total;
  for (std::size_t i = 0; i + 1 < cells; ++i) {
    if (remaining == 0) {
      counts[i] = 0;
      continue;
    }
    const double p = 1.0 / static_cast<double>(cells - i);
    std::binomial_distribution<std::uint64_t> binom(remaining, p);
    const std::uint64_t draw = binom(rng);
    counts[i] = static_cast<std::uint32_t>(draw);
    remaining -= draw;
  }
  counts[cells - 1] = static_cast<std::uint32_t>(remaining);
}

// Counts of `draws` indices sampled uniformly with replacement from `cells`.
inline void resample_counts(Rng& rng, std::uint64_t draws, std::span<std::uint32_t> counts) {
  std::fill(counts.begin(), counts.end(), 0U);
  for (std::uint64_t i = 0; i < draws; ++i) ++counts[rng.index(counts.size())];
}

}  // namespace splitstat
