#include "vf/rng.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace vf {

namespace {

// FNV-1a over the label bytes.
constexpr std::uint64_t fnv1a(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::string_view label,
                          std::uint64_t index) noexcept {
  std::uint64_t h = mix64(base ^ fnv1a(label));
  return mix64(h ^ mix64(index + 0x51aF00D5ULL));
}

std::uint64_t uniform_below(Rng& rng, std::uint64_t n) {
  if (n == 0) return 0;
  const std::uint64_t limit =
      std::numeric_limits<std::uint64_t>::max() -
      std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x = rng();
  while (x >= limit) x = rng();
  return x % n;
}

double uniform_real(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double normal(Rng& rng) {
  const double u1 = 1.0 - uniform_real(rng);  // (0, 1]
  const double u2 = uniform_real(rng);
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

double gumbel(Rng& rng) {
  const double u = 1.0 - uniform_real(rng);  // (0, 1]
  return -std::log(-std::log(u));
}

}  // namespace vf
