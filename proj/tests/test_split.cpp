#include "doctest.h"
#include "vf/rng.hpp"
#include "vf/split.hpp"

#include <algorithm>

namespace {

using vf::BiasSetup;
using vf::SystemVariantSet;
using vf::Variant;

// Synthetic system: n variants over a small alphabet with a spread of
// lengths; exactly `mu_count` of them have the maximum length.
SystemVariantSet synthetic_system(std::size_t n, std::size_t max_len,
                                  std::size_t mu_count, std::uint64_t seed) {
  SystemVariantSet vs;
  auto rng = vf::make_rng(seed);
  std::size_t made_mu = 0;
  while (vs.variants.size() < n) {
    Variant v;
    std::size_t len;
    if (made_mu < mu_count) {
      len = max_len;
    } else {
      len = 1 + vf::uniform_below(rng, max_len - 1);  // strictly below max
    }
    for (std::size_t i = 0; i < len; ++i) {
      v.events.push_back(std::string(1, static_cast<char>('a' + vf::uniform_below(rng, 6))));
      v.events.back() += std::to_string(vf::uniform_below(rng, 10));
    }
    if (v.length() == max_len) {
      if (vs.variants.insert(v).second) ++made_mu;
    } else {
      vs.variants.insert(v);
    }
  }
  vs.alphabet = vf::alphabet_of(vs.variants);
  return vs;
}

std::size_t max_len_of(const vf::UniqueVariantLog& vs) {
  std::size_t mu = 0;
  for (const auto& v : vs) mu = std::max(mu, v.length());
  return mu;
}

double mean_len_of(const vf::UniqueVariantLog& vs) {
  return vf::variant_stats(vs).mean_length;
}

bool is_partition(const SystemVariantSet& vs, const vf::SplitResult& r) {
  if (r.observed.size() + r.heldout.size() != vs.variants.size()) return false;
  for (const auto& v : r.observed) {
    if (!vs.variants.contains(v) || r.heldout.contains(v)) return false;
  }
  for (const auto& v : r.heldout) {
    if (!vs.variants.contains(v)) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("observed_size applies exact round-half-up") {
  CHECK(vf::observed_size(680, 0.7) == 476);
  CHECK(vf::observed_size(507, 0.5) == 254);   // 253.5 rounds up
  CHECK(vf::observed_size(507, 0.1) == 51);    // 50.7 rounds up
  CHECK(vf::observed_size(507, 0.3) == 152);   // 152.1 rounds down
  CHECK(vf::observed_size(415, 0.1) == 42);    // 41.5 rounds up
  CHECK(vf::observed_size(415, 0.5) == 208);   // 207.5 rounds up
  CHECK(vf::observed_size(688, 0.5) == 344);
  CHECK_THROWS_AS(vf::observed_size(10, 0.0), vf::Error);
  CHECK_THROWS_AS(vf::observed_size(10, 1.0), vf::Error);
}

TEST_CASE("random ratio split: sizes, partition, mu rule, determinism") {
  const auto vs = synthetic_system(120, 9, 2, 404);
  const auto r = vf::random_ratio_split(vs, 0.7, 11);
  CHECK(r.observed.size() == vf::observed_size(120, 0.7));
  CHECK(is_partition(vs, r));
  CHECK(max_len_of(r.observed) == 9);  // mu-constraint

  SUBCASE("same spec reproduces the same split") {
    const auto again = vf::random_ratio_split(vs, 0.7, 11);
    CHECK(again.observed == r.observed);
    CHECK(again.heldout == r.heldout);
  }
  SUBCASE("a different seed moves membership") {
    const auto other = vf::random_ratio_split(vs, 0.7, 12);
    CHECK(other.observed != r.observed);
    CHECK(is_partition(vs, other));
  }
  SUBCASE("ratios that collapse one side are errors") {
    CHECK_THROWS_AS(vf::random_ratio_split(vs, 0.001, 11), vf::Error);
    CHECK_THROWS_AS(vf::random_ratio_split(vs, 0.9999, 11), vf::Error);
  }
}

TEST_CASE("mu constraint holds across seeds, and can be disabled") {
  // Only one max-length variant among 40: a uniform split frequently drops it.
  const auto vs = synthetic_system(40, 12, 1, 77);
  int without_mu = 0;
  for (std::uint64_t seed = 0; seed < 30; ++seed) {
    const auto r = vf::random_ratio_split(vs, 0.5, seed);
    CHECK(max_len_of(r.observed) == 12);

    vf::SplitOptions literal;
    literal.enforce_mu = false;
    const auto raw = vf::random_ratio_split(vs, 0.5, seed, literal);
    if (max_len_of(raw.observed) < 12) ++without_mu;
    CHECK(is_partition(vs, raw));
  }
  CHECK(without_mu > 0);  // the constraint is doing real work
}

TEST_CASE("split rejects degenerate inputs") {
  SystemVariantSet one;
  one.variants.insert(Variant{{"a"}});
  CHECK_THROWS_AS(vf::random_ratio_split(one, 0.5, 1), vf::Error);
  CHECK_THROWS_AS(vf::bias_split(one, BiasSetup::b1, 1), vf::Error);
}

TEST_CASE("bias b1/b2: sizes, ordering and mean direction") {
  const auto vs = synthetic_system(200, 10, 3, 505);
  const std::size_t base = vf::observed_size(200, 0.7);

  const auto b1 = vf::bias_split(vs, BiasSetup::b1, 5);
  CHECK(b1.observed.size() == base + 1);  // forced mu variant moves over
  CHECK(is_partition(vs, b1));
  CHECK(max_len_of(b1.observed) == 10);
  CHECK(mean_len_of(b1.observed) < mean_len_of(b1.heldout));

  // Every non-forced observed variant is no longer than any held-out one.
  std::size_t second_longest = 0;
  for (const auto& v : b1.observed) {
    if (v.length() < 10) second_longest = std::max(second_longest, v.length());
  }
  std::size_t min_heldout = 10;
  for (const auto& v : b1.heldout) min_heldout = std::min(min_heldout, v.length());
  CHECK(second_longest <= min_heldout);

  const auto b2 = vf::bias_split(vs, BiasSetup::b2, 5);
  CHECK(b2.observed.size() == base);  // longest 70% already contains mu
  CHECK(is_partition(vs, b2));
  CHECK(max_len_of(b2.observed) == 10);
  CHECK(mean_len_of(b2.observed) > mean_len_of(b2.heldout));
  std::size_t max_heldout = 0;
  for (const auto& v : b2.heldout) max_heldout = std::max(max_heldout, v.length());
  std::size_t min_observed = 10;
  for (const auto& v : b2.observed) min_observed = std::min(min_observed, v.length());
  CHECK(max_heldout <= min_observed);
}

TEST_CASE("bias sizes reproduce the 680-variant system arithmetic") {
  // 680 variants, few max-length ones: shortest-70% forces the mu move.
  const auto vs = synthetic_system(680, 18, 4, 99);
  const auto b1 = vf::bias_split(vs, BiasSetup::b1, 3);
  CHECK(b1.observed.size() == 477);
  CHECK(b1.heldout.size() == 203);
  const auto b2 = vf::bias_split(vs, BiasSetup::b2, 3);
  CHECK(b2.observed.size() == 476);
  CHECK(b2.heldout.size() == 204);
}

TEST_CASE("leaky setups preserve sizes and mean-length ordering per swap budget") {
  const auto vs = synthetic_system(200, 10, 3, 606);
  const auto b1 = vf::bias_split(vs, BiasSetup::b1, 9);
  const auto b3 = vf::bias_split(vs, BiasSetup::b3, 9);
  CHECK(b3.observed.size() == b1.observed.size());
  CHECK(b3.heldout.size() == b1.heldout.size());
  CHECK(is_partition(vs, b3));
  CHECK(max_len_of(b3.observed) == 10);
  // Leak softens but does not erase the bias on a strongly length-spread set.
  CHECK(mean_len_of(b3.observed) < mean_len_of(b3.heldout));
  CHECK(mean_len_of(b3.observed) > mean_len_of(b1.observed));

  const auto b2 = vf::bias_split(vs, BiasSetup::b2, 9);
  const auto b4 = vf::bias_split(vs, BiasSetup::b4, 9);
  CHECK(b4.observed.size() == b2.observed.size());
  CHECK(b4.heldout.size() == b2.heldout.size());
  CHECK(mean_len_of(b4.observed) > mean_len_of(b4.heldout));
  CHECK(mean_len_of(b4.observed) < mean_len_of(b2.observed));

  SUBCASE("swap count follows the configured fraction") {
    // With fraction 0 the leaky setups reduce to their strict parents.
    vf::SplitOptions no_swaps;
    no_swaps.swap_fraction = 0.0;
    const auto frozen = vf::bias_split(vs, BiasSetup::b3, 9, no_swaps);
    const auto strict = vf::bias_split(vs, BiasSetup::b1, 9, no_swaps);
    CHECK(frozen.observed == strict.observed);
  }
  SUBCASE("exactly floor(0.2 * heldout) members crossed over") {
    const auto moved = vf::set_ops(b3.observed, b1.heldout).common;
    CHECK(moved == b1.heldout.size() / 5);
  }
}

TEST_CASE("bias splits are deterministic in the spec") {
  const auto vs = synthetic_system(150, 8, 2, 42);
  for (auto setup : {BiasSetup::b1, BiasSetup::b2, BiasSetup::b3, BiasSetup::b4}) {
    const auto a = vf::bias_split(vs, setup, 1234);
    const auto b = vf::bias_split(vs, setup, 1234);
    CHECK(a.observed == b.observed);
    CHECK(a.heldout == b.heldout);
  }
}

TEST_CASE("bias direction is strict across random systems and seeds") {
  for (std::uint64_t sys_seed = 1; sys_seed <= 8; ++sys_seed) {
    const auto vs = synthetic_system(60 + 11 * sys_seed, 6 + sys_seed, 2, sys_seed);
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
      const auto b1 = vf::bias_split(vs, BiasSetup::b1, seed);
      CHECK(mean_len_of(b1.observed) < mean_len_of(b1.heldout));
      const auto b2 = vf::bias_split(vs, BiasSetup::b2, seed);
      CHECK(mean_len_of(b2.observed) > mean_len_of(b2.heldout));
    }
  }
}

TEST_CASE("equal-length language: b1 needs no mu move and stays valid") {
  SystemVariantSet vs;
  for (char a : {'a', 'b', 'c', 'd'}) {
    for (char b : {'x', 'y'}) {
      vs.variants.insert(Variant{{std::string(1, a), std::string(1, b)}});
    }
  }
  vs.alphabet = vf::alphabet_of(vs.variants);
  const auto r = vf::bias_split(vs, BiasSetup::b1, 3);
  CHECK(r.observed.size() == vf::observed_size(8, 0.7));
  CHECK(is_partition(vs, r));
}

TEST_CASE("apply_split dispatches on the spec kind") {
  const auto vs = synthetic_system(50, 7, 1, 11);
  vf::SplitSpec ratio{vf::RandomRatio{0.5}, 21};
  const auto a = vf::apply_split(vs, ratio);
  CHECK(a.observed.size() == 25);
  vf::SplitSpec bias{vf::Bias{BiasSetup::b2}, 21};
  const auto b = vf::apply_split(vs, bias);
  CHECK(b.observed.size() == vf::observed_size(50, 0.7));
}
