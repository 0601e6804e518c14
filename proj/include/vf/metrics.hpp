#pragma once

#include <cstddef>

#include "vf/petri.hpp"
#include "vf/sampler.hpp"
#include "vf/variant.hpp"

namespace vf {

struct EvalResult {
  double tp = 0.0;    // |V̂ ∩ V_S| / |V_S|
  double tp_u = 0.0;  // |V̂ ∩ V_u| / |V_u|
  std::size_t unique_count = 0;
  double score = 0.0;  // (tp + tp_u) / sqrt(2)

  // exact numerators and sizes, kept for reporting
  std::size_t system_hits = 0;
  std::size_t heldout_hits = 0;
  std::size_t system_size = 0;
  std::size_t heldout_size = 0;
  std::size_t draws = 0;
  std::size_t rejected = 0;
  std::size_t false_positives = 0;  // sampled variants outside V_S
};

// (tp + tp_u) / sqrt(2); throws on inputs outside [0, 1].
double score(double tp, double tp_u);

// Exact set-cardinality ratios of the sampled unique variants against the
// system set and its held-out subset. Requires heldout ⊆ vs.
EvalResult evaluate(const SampleSet& sampled, const SystemVariantSet& vs,
                    const UniqueVariantLog& heldout);

}  // namespace vf
