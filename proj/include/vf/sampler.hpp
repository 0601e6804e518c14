#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>

#include "vf/generator.hpp"
#include "vf/variant.hpp"

namespace vf {

// The deduplicated outcome of k draws. Invariant: sum(frequency) + rejected
// == draws.
struct SampleSet {
  std::size_t draws = 0;
  std::size_t rejected = 0;
  std::map<Variant, std::size_t> frequency;

  // MH bookkeeping (zero for naive sampling)
  std::size_t proposals = 0;
  std::size_t accepted = 0;
  bool degenerate = false;

  UniqueVariantLog unique() const;
  std::size_t frequency_total() const;
};

// Exactly k ancestral draws, deduplicated; draw streams are nested across k.
SampleSet naive_sample(const TrainedGenerator& gen, std::size_t k, std::uint64_t seed);

struct MhOptions {
  std::size_t burn_in = 50;
  std::size_t thinning = 5;
};

// min(1, odds(proposed)/odds(current)) with odds(d) = d/(1-d).
double mh_acceptance(double d_current, double d_proposed);

// Independence-proposal Metropolis-Hastings over generator output, scored by
// an arbitrary (0,1) scorer. Proposals that fail to decode keep the current
// state. Records k post-burn-in states at the thinning stride.
SampleSet mh_chain(const std::function<std::optional<Variant>(Rng&)>& propose,
                   const std::function<double(const Variant&)>& score, std::size_t k,
                   const MhOptions& opts, Rng& rng);

// MH refinement of a trained generator using its discriminator as the scorer.
SampleSet mh_sample(const TrainedGenerator& gen, std::size_t k, std::uint64_t seed,
                    const MhOptions& opts = {});

// Sample-file round trip: canonical variant lines, each preceded by a
// "# freq=<n>" comment carrying its occurrence count.
void write_sample_file(const std::filesystem::path& path, const SampleSet& s);
SampleSet read_sample_file(const std::filesystem::path& path);

}  // namespace vf
