#include "vf/metrics.hpp"

#include <cmath>
#include <numbers>

namespace vf {

double score(double tp, double tp_u) {
  if (!(tp >= 0.0 && tp <= 1.0) || !(tp_u >= 0.0 && tp_u <= 1.0)) {
    throw Error("score: tp and tp_u must lie in [0, 1]");
  }
  return (tp + tp_u) / std::numbers::sqrt2;
}

EvalResult evaluate(const SampleSet& sampled, const SystemVariantSet& vs,
                    const UniqueVariantLog& heldout) {
  if (vs.variants.empty()) throw Error("evaluate: empty system variant set");
  if (heldout.empty()) throw Error("evaluate: empty held-out set");
  for (const auto& v : heldout) {
    if (!vs.variants.contains(v)) {
      throw Error("evaluate: held-out set is not a subset of the system set");
    }
  }
  const UniqueVariantLog unique = sampled.unique();
  const SetOps sys = set_ops(unique, vs.variants);
  const SetOps held = set_ops(unique, heldout);

  EvalResult r;
  r.unique_count = unique.size();
  r.system_hits = sys.common;
  r.heldout_hits = held.common;
  r.system_size = vs.variants.size();
  r.heldout_size = heldout.size();
  r.false_positives = sys.only_left;
  r.draws = sampled.draws;
  r.rejected = sampled.rejected;
  r.tp = static_cast<double>(r.system_hits) / static_cast<double>(r.system_size);
  r.tp_u = static_cast<double>(r.heldout_hits) / static_cast<double>(r.heldout_size);
  r.score = score(r.tp, r.tp_u);
  return r;
}

}  // namespace vf
