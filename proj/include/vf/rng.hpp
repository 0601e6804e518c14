#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace vf {

// SplitMix64 finalizer. Stable across platforms and builds.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Derives an independent stream seed from (base, component label, index).
// Every consumer of randomness owns a named stream, so adding a grid point
// or reordering work never perturbs the draws of existing streams.
std::uint64_t derive_seed(std::uint64_t base, std::string_view label,
                          std::uint64_t index = 0) noexcept;

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed) { return Rng(seed); }

// Unbiased integer in [0, n). Hand-rolled so draws are identical across
// standard libraries (std::uniform_int_distribution is not portable).
std::uint64_t uniform_below(Rng& rng, std::uint64_t n);

// Uniform double in [0, 1).
double uniform_real(Rng& rng);

// Standard normal (Box-Muller, cosine branch; two uniforms per call).
double normal(Rng& rng);

// Gumbel(0, 1) noise: -log(-log U).
double gumbel(Rng& rng);

// Fisher-Yates with vf draws (deterministic across platforms).
template <typename T>
void shuffle(std::vector<T>& xs, Rng& rng) {
  for (std::size_t i = xs.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(uniform_below(rng, i));
    std::swap(xs[i - 1], xs[j]);
  }
}

}  // namespace vf
