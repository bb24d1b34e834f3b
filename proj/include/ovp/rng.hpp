#pragma once

#include <cstdint>
#include <limits>

namespace ovp {

/// SplitMix64 finalizer (Steele, Lea & Flood 2014).
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Derives an independent child seed from a parent seed and an index.
///
/// Seed derivation scheme used throughout the library:
///   trial seed  = derive_seed(derive_seed(base_seed, value_index), trial_index)
///   sub-streams = derive_seed(trial_seed, stream_tag)
/// so every (sweep value, trial, purpose) triple owns a distinct stream and
/// results do not depend on scheduling order.
constexpr std::uint64_t derive_seed(std::uint64_t parent,
                                    std::uint64_t index) noexcept {
  return splitmix64(parent ^ splitmix64(index + 0x632be59bd9b4e019ULL));
}

// Stream tags for derive_seed.
inline constexpr std::uint64_t kFeatureStream = 1;
inline constexpr std::uint64_t kLabelNoiseStream = 2;
inline constexpr std::uint64_t kRawInputStream = 3;
inline constexpr std::uint64_t kTestStream = 4;

/// Counter-based 64-bit generator: output k is splitmix64(key + k * golden).
/// Satisfies UniformRandomBitGenerator, so it plugs into <random>
/// distributions.
class CounterRng {
 public:
  using result_type = std::uint64_t;

  explicit constexpr CounterRng(std::uint64_t seed) noexcept
      : key_(splitmix64(seed)) {}

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept {
    return std::numeric_limits<result_type>::max();
  }

  constexpr result_type operator()() noexcept {
    return splitmix64(key_ + kGolden * counter_++);
  }

  constexpr std::uint64_t counter() const noexcept { return counter_; }

 private:
  static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace ovp
