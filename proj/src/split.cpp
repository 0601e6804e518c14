#include "vf/split.hpp"

#include <algorithm>
#include <cmath>

#include "vf/rng.hpp"

namespace vf {

namespace {

std::vector<Variant> canonical_order(const UniqueVariantLog& vs) {
  return {vs.begin(), vs.end()};  // set iteration is already lexicographic
}

std::size_t max_length(const std::vector<Variant>& xs, std::size_t begin, std::size_t end) {
  std::size_t mu = 0;
  for (std::size_t i = begin; i < end; ++i) mu = std::max(mu, xs[i].length());
  return mu;
}

SplitResult finish(std::vector<Variant> observed, std::vector<Variant> heldout,
                   SplitSpec spec, const SystemVariantSet& vs) {
  if (observed.empty() || heldout.empty()) {
    throw Error("degenerate split: one side is empty");
  }
  SplitResult result;
  result.observed = UniqueVariantLog(observed.begin(), observed.end());
  result.heldout = UniqueVariantLog(heldout.begin(), heldout.end());
  result.spec = std::move(spec);
  if (result.observed.size() + result.heldout.size() != vs.variants.size()) {
    throw Error("split invariant violated: sides do not partition the variant set");
  }
  return result;
}

}  // namespace

BiasSetup bias_setup_from_string(const std::string& s) {
  if (s == "b1") return BiasSetup::b1;
  if (s == "b2") return BiasSetup::b2;
  if (s == "b3") return BiasSetup::b3;
  if (s == "b4") return BiasSetup::b4;
  throw Error("unknown bias setup '" + s + "' (expected b1..b4)");
}

std::string to_string(BiasSetup setup) {
  switch (setup) {
    case BiasSetup::b1: return "b1";
    case BiasSetup::b2: return "b2";
    case BiasSetup::b3: return "b3";
    case BiasSetup::b4: return "b4";
  }
  return "?";
}

std::size_t observed_size(std::size_t n, double ratio) {
  if (!(ratio > 0.0 && ratio < 1.0)) {
    throw Error("split ratio must lie strictly inside (0,1)");
  }
  // Snap to an exact rational p/1e6 so e.g. 0.7 means exactly 7/10.
  const long long denom = 1'000'000;
  const long long p = std::llround(ratio * static_cast<double>(denom));
  // round-half-up(n*p/denom) in exact integer arithmetic
  const long long num = 2 * static_cast<long long>(n) * p + denom;
  return static_cast<std::size_t>(num / (2 * denom));
}

SplitResult random_ratio_split(const SystemVariantSet& vs, double ratio,
                               std::uint64_t seed, const SplitOptions& opts) {
  const std::size_t n = vs.variants.size();
  if (n < 2) throw Error("cannot split a variant set with fewer than 2 variants");
  const std::size_t m = observed_size(n, ratio);
  if (m == 0 || m == n) {
    throw Error("ratio " + std::to_string(ratio) + " yields a degenerate split for n=" +
                std::to_string(n));
  }

  std::vector<Variant> order = canonical_order(vs.variants);
  Rng rng = make_rng(derive_seed(seed, "ratio-split"));
  shuffle(order, rng);

  std::vector<Variant> observed(order.begin(), order.begin() + static_cast<long>(m));
  std::vector<Variant> heldout(order.begin() + static_cast<long>(m), order.end());

  if (opts.enforce_mu) {
    const std::size_t mu = max_length(order, 0, order.size());
    if (max_length(observed, 0, observed.size()) < mu) {
      std::vector<std::size_t> max_in_heldout;
      for (std::size_t i = 0; i < heldout.size(); ++i) {
        if (heldout[i].length() == mu) max_in_heldout.push_back(i);
      }
      std::vector<std::size_t> non_max_in_observed;
      for (std::size_t i = 0; i < observed.size(); ++i) {
        if (observed[i].length() < mu) non_max_in_observed.push_back(i);
      }
      const std::size_t hi = max_in_heldout[static_cast<std::size_t>(
          uniform_below(rng, max_in_heldout.size()))];
      const std::size_t oi = non_max_in_observed[static_cast<std::size_t>(
          uniform_below(rng, non_max_in_observed.size()))];
      std::swap(heldout[hi], observed[oi]);
    }
  }

  SplitSpec spec{RandomRatio{ratio}, seed};
  return finish(std::move(observed), std::move(heldout), std::move(spec), vs);
}

SplitResult bias_split(const SystemVariantSet& vs, BiasSetup setup,
                       std::uint64_t seed, const SplitOptions& opts) {
  const std::size_t n = vs.variants.size();
  if (n < 2) throw Error("cannot split a variant set with fewer than 2 variants");
  const std::size_t m = observed_size(n, 0.7);
  if (m == 0 || m == n) throw Error("bias split degenerate for n=" + std::to_string(n));

  const bool shortest_first = setup == BiasSetup::b1 || setup == BiasSetup::b3;
  std::vector<Variant> order = canonical_order(vs.variants);
  std::stable_sort(order.begin(), order.end(),
                   [&](const Variant& a, const Variant& b) {
                     return shortest_first ? a.length() < b.length()
                                           : a.length() > b.length();
                   });

  Rng rng = make_rng(derive_seed(seed, "bias-split"));

  // Resolve the length tie class straddling the cut with a seeded shuffle.
  if (order[m - 1].length() == order[m].length()) {
    const std::size_t tie_len = order[m - 1].length();
    std::size_t lo = m - 1;
    while (lo > 0 && order[lo - 1].length() == tie_len) --lo;
    std::size_t hi = m;
    while (hi < n && order[hi].length() == tie_len) ++hi;
    std::vector<Variant> tie(order.begin() + static_cast<long>(lo),
                             order.begin() + static_cast<long>(hi));
    shuffle(tie, rng);
    std::copy(tie.begin(), tie.end(), order.begin() + static_cast<long>(lo));
  }

  std::vector<Variant> observed(order.begin(), order.begin() + static_cast<long>(m));
  std::vector<Variant> heldout(order.begin() + static_cast<long>(m), order.end());

  // The longest possible variant must be observed; move one over if absent.
  const std::size_t mu = max_length(order, 0, order.size());
  std::size_t forced_index = observed.size();  // sentinel: none forced
  if (opts.enforce_mu && max_length(observed, 0, observed.size()) < mu) {
    std::vector<std::size_t> max_in_heldout;
    for (std::size_t i = 0; i < heldout.size(); ++i) {
      if (heldout[i].length() == mu) max_in_heldout.push_back(i);
    }
    const std::size_t hi = max_in_heldout[static_cast<std::size_t>(
        uniform_below(rng, max_in_heldout.size()))];
    observed.push_back(heldout[hi]);
    heldout.erase(heldout.begin() + static_cast<long>(hi));
    forced_index = observed.size() - 1;
    if (heldout.empty()) throw Error("bias split degenerate: heldout emptied by mu rule");
  }

  if (setup == BiasSetup::b3 || setup == BiasSetup::b4) {
    const auto swaps = static_cast<std::size_t>(
        std::floor(opts.swap_fraction * static_cast<double>(heldout.size())));
    std::vector<std::size_t> eligible_heldout(heldout.size());
    for (std::size_t i = 0; i < heldout.size(); ++i) eligible_heldout[i] = i;
    std::vector<std::size_t> eligible_observed;
    for (std::size_t i = 0; i < observed.size(); ++i) {
      if (i != forced_index) eligible_observed.push_back(i);
    }
    for (std::size_t s = 0; s < swaps; ++s) {
      if (eligible_heldout.empty() || eligible_observed.empty()) break;
      const std::size_t ui = static_cast<std::size_t>(
          uniform_below(rng, eligible_heldout.size()));
      const std::size_t oi = static_cast<std::size_t>(
          uniform_below(rng, eligible_observed.size()));
      std::swap(heldout[eligible_heldout[ui]], observed[eligible_observed[oi]]);
      // Both swapped-in members leave the eligible pools.
      eligible_heldout.erase(eligible_heldout.begin() + static_cast<long>(ui));
      eligible_observed.erase(eligible_observed.begin() + static_cast<long>(oi));
    }
  }

  SplitSpec spec{Bias{setup}, seed};
  return finish(std::move(observed), std::move(heldout), std::move(spec), vs);
}

SplitResult apply_split(const SystemVariantSet& vs, const SplitSpec& spec,
                        const SplitOptions& opts) {
  if (std::holds_alternative<RandomRatio>(spec.kind)) {
    return random_ratio_split(vs, std::get<RandomRatio>(spec.kind).ratio, spec.seed, opts);
  }
  return bias_split(vs, std::get<Bias>(spec.kind).setup, spec.seed, opts);
}

}  // namespace vf
