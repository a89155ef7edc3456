#pragma once

#include <cstdint>
#include <limits>

namespace blockpursuit {

/// Counter-based 64-bit generator: output n is the SplitMix64 finalizer applied
/// to key + n * golden-gamma. Satisfies UniformRandomBitGenerator.
class CounterRng
{
public:
  using result_type = std::uint64_t;

  explicit CounterRng(std::uint64_t key) : key_(key) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() { return mix(key_ + (++counter_) * gamma); }

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

  static constexpr std::uint64_t mix(std::uint64_t z)
  {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

private:
  static constexpr std::uint64_t gamma = 0x9e3779b97f4a7c15ULL;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Order-sensitive hash of a seed with two stream identifiers.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0)
{
  std::uint64_t h = CounterRng::mix(base ^ 0x2545f4914f6cdd1dULL);
  h = CounterRng::mix(h ^ (a + 0x632be59bd9b4e019ULL));
  h = CounterRng::mix(h ^ (b + 0x85ebca77c2b2ae63ULL));
  return h;
}

} // namespace blockpursuit
