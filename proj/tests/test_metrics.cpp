#include "doctest.h"
#include "vf/metrics.hpp"

#include <cmath>
#include <numbers>

namespace {

using vf::Variant;

vf::SystemVariantSet system_of(std::initializer_list<Variant> vs) {
  vf::SystemVariantSet out;
  for (const auto& v : vs) out.variants.insert(v);
  out.alphabet = vf::alphabet_of(out.variants);
  return out;
}

vf::SampleSet sample_of(std::initializer_list<Variant> vs) {
  vf::SampleSet s;
  for (const auto& v : vs) ++s.frequency[v];
  s.draws = s.frequency_total();
  return s;
}

}  // namespace

TEST_CASE("score formula") {
  CHECK(std::fabs(vf::score(1.0, 1.0) - std::numbers::sqrt2) < 1e-12);
  CHECK(vf::score(0.0, 0.0) == 0.0);
  CHECK(vf::score(0.6, 0.8) == doctest::Approx(0.9899494936611665).epsilon(1e-12));
  CHECK_THROWS_AS(vf::score(-0.1, 0.5), vf::Error);
  CHECK_THROWS_AS(vf::score(0.5, 1.1), vf::Error);
}

TEST_CASE("score is symmetric and bounded") {
  for (double a = 0.0; a <= 1.0; a += 0.125) {
    for (double b = 0.0; b <= 1.0; b += 0.125) {
      CHECK(vf::score(a, b) == doctest::Approx(vf::score(b, a)).epsilon(1e-15));
      CHECK(vf::score(a, b) <= std::numbers::sqrt2 + 1e-15);
      if (a < 1.0 || b < 1.0) {
        CHECK(vf::score(a, b) < std::numbers::sqrt2);
      }
    }
  }
}

TEST_CASE("evaluate computes exact cardinality ratios") {
  const auto vs = system_of({Variant{{"a"}}, Variant{{"b"}}, Variant{{"c"}},
                             Variant{{"d"}}});
  const vf::UniqueVariantLog heldout{Variant{{"c"}}, Variant{{"d"}}};

  SUBCASE("sampling the full system reaches the maximum score") {
    const auto s = sample_of({Variant{{"a"}}, Variant{{"b"}}, Variant{{"c"}},
                              Variant{{"d"}}});
    const auto r = vf::evaluate(s, vs, heldout);
    CHECK(r.tp == 1.0);
    CHECK(r.tp_u == 1.0);
    CHECK(r.unique_count == 4);
    CHECK(std::fabs(r.score - std::numbers::sqrt2) < 1e-12);
    CHECK(r.false_positives == 0);
  }
  SUBCASE("disjoint samples score zero") {
    const auto s = sample_of({Variant{{"z"}}});
    const auto r = vf::evaluate(s, vs, heldout);
    CHECK(r.tp == 0.0);
    CHECK(r.tp_u == 0.0);
    CHECK(r.score == 0.0);
    CHECK(r.false_positives == 1);
  }
  SUBCASE("partial hits follow the formulas exactly") {
    // 3 of 4 system variants, including 1 of 2 held-out ones.
    const auto s = sample_of({Variant{{"a"}}, Variant{{"b"}}, Variant{{"c"}}});
    const auto r = vf::evaluate(s, vs, heldout);
    CHECK(r.tp == doctest::Approx(0.75).epsilon(1e-15));
    CHECK(r.tp_u == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(r.score == doctest::Approx(0.8838834764831843).epsilon(1e-12));
  }
  SUBCASE("false positives are counted but never enter the ratios") {
    const auto s = sample_of({Variant{{"a"}}, Variant{{"junk"}}, Variant{{"more"}}});
    const auto r = vf::evaluate(s, vs, heldout);
    CHECK(r.tp == doctest::Approx(0.25));
    CHECK(r.false_positives == 2);
    CHECK(r.unique_count == 3);
  }
}

TEST_CASE("evaluate validates its inputs") {
  const auto vs = system_of({Variant{{"a"}}, Variant{{"b"}}});
  CHECK_THROWS_AS(vf::evaluate(sample_of({Variant{{"a"}}}), vs, {}), vf::Error);
  CHECK_THROWS_AS(
      vf::evaluate(sample_of({Variant{{"a"}}}), vf::SystemVariantSet{},
                   vf::UniqueVariantLog{Variant{{"a"}}}),
      vf::Error);
  // held-out not a subset
  CHECK_THROWS_AS(vf::evaluate(sample_of({Variant{{"a"}}}), vs,
                               vf::UniqueVariantLog{Variant{{"zz"}}}),
                  vf::Error);
}

TEST_CASE("enlarging the system hit set never decreases tp or score") {
  const auto vs = system_of({Variant{{"a"}}, Variant{{"b"}}, Variant{{"c"}},
                             Variant{{"d"}}, Variant{{"e"}}});
  const vf::UniqueVariantLog heldout{Variant{{"e"}}};
  vf::SampleSet s = sample_of({Variant{{"a"}}});
  auto prev = vf::evaluate(s, vs, heldout);
  for (const char* next : {"b", "c", "d"}) {
    ++s.frequency[Variant{{next}}];
    s.draws += 1;
    const auto cur = vf::evaluate(s, vs, heldout);
    CHECK(cur.tp >= prev.tp);
    CHECK(cur.score >= prev.score);
    prev = cur;
  }
}
