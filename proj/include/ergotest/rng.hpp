#ifndef ERGOTEST_RNG_HPP
#define ERGOTEST_RNG_HPP

#include <cstdint>
#include <initializer_list>
#include <random>
#include <span>

namespace ergotest {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer, used to derive independent stream seeds.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed of the stream addressed by (master, key...). Streams depend only on
/// the key, never on the order in which they are created.
constexpr std::uint64_t stream_seed(std::uint64_t master, std::initializer_list<std::uint64_t> key) noexcept {
  std::uint64_t h = mix64(master);
  for (std::uint64_t k : key) h = mix64(h ^ mix64(k + 0x632be59bd9b4e019ULL));
  return h;
}

inline Rng make_stream(std::uint64_t master, std::initializer_list<std::uint64_t> key) {
  return Rng(stream_seed(master, key));
}

/// Uniform double in [0, 1) from the top 53 bits.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Draws an index from a probability vector by inverse CDF.
inline std::size_t draw_categorical(std::span<const double> probs, Rng& rng) {
  double u = uniform01(rng);
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc) return i;
  }
  // Land on the last index with positive mass so rounding never selects a
  // zero-probability outcome.
  for (std::size_t i = probs.size(); i-- > 0;) {
    if (probs[i] > 0.0) return i;
  }
  return probs.size() - 1;
}

}  // namespace ergotest

#endif  // ERGOTEST_RNG_HPP
