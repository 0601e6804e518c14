#pragma once

#include <compare>
#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace vf {

// Errors raised by domain operations (parse failures, invariant breaches).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A variant: a finite, non-empty sequence of event labels.
struct Variant {
  std::vector<std::string> events;

  std::size_t length() const noexcept { return events.size(); }
  auto operator<=>(const Variant&) const = default;
};

// Throws unless the variant is non-empty with non-empty, whitespace-free labels.
void validate(const Variant& v);

// Deduplicated variant set; iteration order is lexicographic by event
// sequence, which is also the canonical file order.
using UniqueVariantLog = std::set<Variant>;

struct VariantStats {
  std::size_t count = 0;
  std::size_t alphabet_size = 0;
  std::size_t max_length = 0;  // mu
  double mean_length = 0.0;
};

// count / |alphabet| / mu / mean of a non-empty variant set.
VariantStats variant_stats(const UniqueVariantLog& vs);

std::set<std::string> alphabet_of(const UniqueVariantLog& vs);

// Bidirectional label <-> token id mapping with PAD=0, EOS=1 reserved and
// real events at ids >= 2; max_len is the width budget (mu of the training log).
struct TokenCodec {
  static constexpr int pad_id = 0;
  static constexpr int eos_id = 1;

  std::vector<std::string> id_to_label;  // indices 0 and 1 hold the reserved names
  std::map<std::string, int> label_to_id;
  int max_len = 0;

  int vocab_size() const noexcept { return static_cast<int>(id_to_label.size()); }
  int width() const noexcept { return max_len + 1; }  // ids + EOS slot
};

TokenCodec make_codec(const UniqueVariantLog& training_log);
TokenCodec make_codec(const std::set<std::string>& alphabet, int max_len);

// Fixed-width encoding: event ids, then EOS, then PAD up to max_len + 1.
// Throws on unknown labels or over-length variants.
std::vector<int> encode(const TokenCodec& codec, const Variant& v);

// Decodes tokens up to the first EOS. Returns nullopt (a rejection, not an
// error) on: PAD before EOS, missing EOS, out-of-range id, or empty prefix.
std::optional<Variant> decode(const TokenCodec& codec, std::span<const int> tokens);

struct SetOps {
  std::size_t common = 0;      // |xs ∩ ys|
  std::size_t only_left = 0;   // |xs \ ys|
  std::size_t only_right = 0;  // |ys \ xs|
};

SetOps set_ops(const UniqueVariantLog& xs, const UniqueVariantLog& ys);

// Variant file: UTF-8, one variant per line, single-space separated,
// newline-terminated; '#' comment lines ignored. Duplicate lines collapse
// with a warning; empty lines mid-file are malformed.
UniqueVariantLog read_variants(const std::filesystem::path& path,
                               std::vector<std::string>* warnings = nullptr);
UniqueVariantLog read_variants_text(const std::string& text, const std::string& origin,
                                    std::vector<std::string>* warnings = nullptr);
void write_variants(const std::filesystem::path& path, const UniqueVariantLog& vs);
std::string variants_to_text(const UniqueVariantLog& vs);

}  // namespace vf
