#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace ham {

/// Portable random source. All randomness in the library is derived from
/// std::mt19937_64 raw 64-bit outputs (fully specified by the C++ standard)
/// through the transformations below, so results do not depend on the
/// standard library's distribution implementations:
///
///   uniform()      = (u >> 11) * 2^-53                      in [0, 1)
///   sign()         = +1 if the top bit of u is 0, else -1
///   below(n)       = u % n                                   (n > 0)
///   gaussian()     = Box-Muller on two uniforms, cosine branch only:
///                    sqrt(-2 ln(1 - u1)) * cos(2 pi u2)
class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double sign() { return (next() >> 63) == 0 ? 1.0 : -1.0; }
  std::uint64_t below(std::uint64_t n) { return next() % n; }
  double gaussian();

  /// First `count` entries of a seeded partial Fisher-Yates shuffle of
  /// [0, n): for i in [0, count) swap(idx[i], idx[i + below(n - i)]).
  std::vector<std::size_t> choose(std::size_t n, std::size_t count);

private:
  std::mt19937_64 engine_;
};

/// Derive a child seed from a parent seed and a stream index (splitmix64).
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

}  // namespace ham
