#pragma once

#include <cstdint>
#include <string>
#include <variant>

#include "vf/petri.hpp"
#include "vf/variant.hpp"

namespace vf {

enum class BiasSetup { b1, b2, b3, b4 };

BiasSetup bias_setup_from_string(const std::string& s);
std::string to_string(BiasSetup setup);

struct RandomRatio {
  double ratio = 0.7;
};

struct Bias {
  BiasSetup setup = BiasSetup::b1;
};

struct SplitSpec {
  std::variant<RandomRatio, Bias> kind;
  std::uint64_t seed = 0;
};

struct SplitOptions {
  bool enforce_mu = true;        // keep one max-length variant in the observed side
  double swap_fraction = 0.2;    // leaky setups: fraction of |V_u| exchanged
};

struct SplitResult {
  UniqueVariantLog observed;  // the training log
  UniqueVariantLog heldout;   // the unobserved remainder
  SplitSpec spec;
  std::string provenance;     // source system id
};

// Observed-side size: round-half-up(ratio * n), with the ratio snapped to an
// exact rational in millionths so decimal grid ratios behave exactly.
std::size_t observed_size(std::size_t n, double ratio);

// Uniform random partition of size round-half-up(r*n), then the mu-constraint
// enforced by a single max-for-non-max swap if needed.
SplitResult random_ratio_split(const SystemVariantSet& vs, double ratio,
                               std::uint64_t seed, const SplitOptions& opts = {});

// Length-ordered 70% splits (b1 shortest / b2 longest), boundary length ties
// resolved by a seeded shuffle within the tie class; b3/b4 add
// floor(swap_fraction * |V_u|) pairwise leak swaps.
SplitResult bias_split(const SystemVariantSet& vs, BiasSetup setup,
                       std::uint64_t seed, const SplitOptions& opts = {});

SplitResult apply_split(const SystemVariantSet& vs, const SplitSpec& spec,
                        const SplitOptions& opts = {});

}  // namespace vf
