#ifndef TRAITSCORE_DETAIL_RNG_HPP
#define TRAITSCORE_DETAIL_RNG_HPP

#include <cstdint>
#include <limits>
#include <random>
#include <vector>

namespace traitscore::detail {

// Unbiased bounded draw; avoids std::uniform_int_distribution so shuffles
// are identical on every platform (mt19937_64 itself is fully specified).
inline std::uint64_t bounded_rand(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit =
      std::numeric_limits<std::uint64_t>::max() - (std::numeric_limits<std::uint64_t>::max() % bound);
  std::uint64_t r;
  do {
    r = rng();
  } while (r >= limit);
  return r % bound;
}

template <typename T>
void fisher_yates(std::vector<T>& items, std::mt19937_64& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(bounded_rand(rng, i));
    std::swap(items[i - 1], items[j]);
  }
}

// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace traitscore::detail

#endif  // TRAITSCORE_DETAIL_RNG_HPP
