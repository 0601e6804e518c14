#include "doctest.h"
#include "vf/rng.hpp"
#include "vf/variant.hpp"

#include <filesystem>
#include <fstream>

namespace fs = std::filesystem;
using vf::Variant;

namespace {

Variant v(std::initializer_list<const char*> events) {
  Variant out;
  for (const char* e : events) out.events.emplace_back(e);
  return out;
}

fs::path tmp_file(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "vf_test_variant";
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("validate rejects empty variants and bad labels") {
  CHECK_THROWS_AS(vf::validate(Variant{}), vf::Error);
  CHECK_THROWS_AS(vf::validate(v({""})), vf::Error);
  Variant ws;
  ws.events = {"a b"};
  CHECK_THROWS_AS(vf::validate(ws), vf::Error);
  CHECK_NOTHROW(vf::validate(v({"a"})));
}

TEST_CASE("variant_stats on a small set") {
  vf::UniqueVariantLog vs{v({"a"}), v({"a", "b", "c"})};
  const auto st = vf::variant_stats(vs);
  CHECK(st.count == 2);
  CHECK(st.alphabet_size == 3);
  CHECK(st.max_length == 3);
  CHECK(st.mean_length == doctest::Approx(2.0));
  CHECK_THROWS_AS(vf::variant_stats({}), vf::Error);
}

TEST_CASE("codec maps labels to ids above the reserved range") {
  const auto codec = vf::make_codec({"a", "b", "c"}, 4);
  CHECK(codec.vocab_size() == 5);
  CHECK(codec.label_to_id.at("a") == 2);
  CHECK(codec.label_to_id.at("b") == 3);
  CHECK(codec.label_to_id.at("c") == 4);

  SUBCASE("encode pads to fixed width") {
    CHECK(vf::encode(codec, v({"a", "c", "b"})) == std::vector<int>{2, 4, 3, 1, 0});
  }
  SUBCASE("unknown label is an error") {
    CHECK_THROWS_WITH_AS(vf::encode(codec, v({"a", "b", "c", "d"})),
                         "unknown label d", vf::Error);
  }
  SUBCASE("full-length variant leaves no padding") {
    CHECK(vf::encode(codec, v({"a", "b", "c", "a"})) == std::vector<int>{2, 3, 4, 2, 1});
  }
  SUBCASE("over-length variant is an error") {
    CHECK_THROWS_AS(vf::encode(codec, v({"a", "a", "a", "a", "a"})), vf::Error);
  }
}

TEST_CASE("decode inverts encode and rejects malformed sequences") {
  const auto codec = vf::make_codec({"a", "b", "c"}, 4);
  const std::vector<int> good{2, 4, 3, 1, 0};
  CHECK(vf::decode(codec, good) == v({"a", "c", "b"}));

  const std::vector<int> empty{1, 0, 0, 0, 0};
  CHECK(!vf::decode(codec, empty).has_value());
  const std::vector<int> pad_before_eos{2, 0, 3, 1, 0};
  CHECK(!vf::decode(codec, pad_before_eos).has_value());
  const std::vector<int> no_eos{2, 3, 4, 2, 3};
  CHECK(!vf::decode(codec, no_eos).has_value());
  const std::vector<int> unknown{2, 9, 1, 0, 0};
  CHECK(!vf::decode(codec, unknown).has_value());
}

TEST_CASE("encode/decode round-trips random variants") {
  const std::set<std::string> alphabet{"a", "bb", "c", "d7", "e"};
  const auto codec = vf::make_codec(alphabet, 12);
  std::vector<std::string> labels(alphabet.begin(), alphabet.end());
  auto rng = vf::make_rng(99);
  for (int i = 0; i < 200; ++i) {
    Variant x;
    const auto len = 1 + vf::uniform_below(rng, 12);
    for (std::uint64_t j = 0; j < len; ++j) {
      x.events.push_back(labels[vf::uniform_below(rng, labels.size())]);
    }
    const auto enc = vf::encode(codec, x);
    CHECK(enc.size() == 13);
    CHECK(vf::decode(codec, enc) == x);
  }
}

TEST_CASE("set_ops cardinalities") {
  const vf::UniqueVariantLog xs{v({"a"}), v({"b"})};
  const vf::UniqueVariantLog ys{v({"b"}), v({"c"})};
  auto ops = vf::set_ops(xs, ys);
  CHECK(ops.common == 1);
  CHECK(ops.only_left == 1);
  CHECK(ops.only_right == 1);

  ops = vf::set_ops(xs, xs);
  CHECK(ops.common == 2);
  CHECK(ops.only_left == 0);
  CHECK(ops.only_right == 0);

  const vf::UniqueVariantLog zs{v({"z"})};
  ops = vf::set_ops(xs, zs);
  CHECK(ops.common == 0);
  CHECK(ops.only_left == 2);
  CHECK(ops.only_right == 1);
}

TEST_CASE("set_ops satisfies inclusion-exclusion on random sets") {
  auto rng = vf::make_rng(123);
  for (int trial = 0; trial < 50; ++trial) {
    vf::UniqueVariantLog xs, ys;
    for (int i = 0; i < 30; ++i) {
      Variant x;
      x.events = {std::to_string(vf::uniform_below(rng, 12))};
      x.events.push_back(std::to_string(vf::uniform_below(rng, 12)));
      if (vf::uniform_below(rng, 2) == 0) {
        xs.insert(x);
      } else {
        ys.insert(x);
      }
      if (vf::uniform_below(rng, 3) == 0) {
        xs.insert(x);
        ys.insert(x);
      }
    }
    const auto ops = vf::set_ops(xs, ys);
    CHECK(xs.size() == ops.common + ops.only_left);
    CHECK(ys.size() == ops.common + ops.only_right);
  }
}

TEST_CASE("variant file round trip") {
  const auto path = tmp_file("roundtrip.txt");

  SUBCASE("basic read") {
    std::ofstream(path) << "a b\nb a\n";
    const auto vs = vf::read_variants(path);
    CHECK(vs == vf::UniqueVariantLog{v({"a", "b"}), v({"b", "a"})});
  }
  SUBCASE("comments are ignored") {
    std::ofstream(path) << "# header\na b\n# freq=3\nb a\n";
    CHECK(vf::read_variants(path).size() == 2);
  }
  SUBCASE("duplicate lines collapse with a warning") {
    std::ofstream(path) << "a b\na b\n";
    std::vector<std::string> warnings;
    const auto vs = vf::read_variants(path, &warnings);
    CHECK(vs.size() == 1);
    REQUIRE(warnings.size() == 1);
    CHECK(warnings[0].find("duplicate") != std::string::npos);
  }
  SUBCASE("empty line mid-file is malformed") {
    std::ofstream(path) << "a b\n\nb a\n";
    CHECK_THROWS_AS(vf::read_variants(path), vf::Error);
  }
  SUBCASE("double space is malformed") {
    std::ofstream(path) << "a  b\n";
    CHECK_THROWS_AS(vf::read_variants(path), vf::Error);
  }
  SUBCASE("write then read is the identity, bytes canonical") {
    vf::UniqueVariantLog vs;
    auto rng = vf::make_rng(7);
    for (int i = 0; i < 300; ++i) {
      Variant x;
      const auto len = 1 + vf::uniform_below(rng, 6);
      for (std::uint64_t j = 0; j < len; ++j) {
        x.events.push_back(std::string(1, static_cast<char>('a' + vf::uniform_below(rng, 9))));
      }
      vs.insert(x);
    }
    vf::write_variants(path, vs);
    const auto back = vf::read_variants(path);
    CHECK(back == vs);
    const std::string once = vf::variants_to_text(vs);
    vf::write_variants(path, back);
    std::ifstream in(path, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
    CHECK(bytes == once);
  }
}
