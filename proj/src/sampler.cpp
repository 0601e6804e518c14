#include "vf/sampler.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace vf {

UniqueVariantLog SampleSet::unique() const {
  UniqueVariantLog out;
  for (const auto& [v, count] : frequency) out.insert(v);
  return out;
}

std::size_t SampleSet::frequency_total() const {
  std::size_t total = 0;
  for (const auto& [v, count] : frequency) total += count;
  return total;
}

SampleSet naive_sample(const TrainedGenerator& gen, std::size_t k, std::uint64_t seed) {
  if (k < 1) throw Error("naive_sample: k must be >= 1");
  SampleSet out;
  out.draws = k;
  for (const auto& drawn : sample(gen, k, seed)) {
    if (drawn.has_value()) {
      ++out.frequency[*drawn];
    } else {
      ++out.rejected;
    }
  }
  return out;
}

double mh_acceptance(double d_current, double d_proposed) {
  const double odds_current = d_current / (1.0 - d_current);
  const double odds_proposed = d_proposed / (1.0 - d_proposed);
  return std::min(1.0, odds_proposed / odds_current);
}

SampleSet mh_chain(const std::function<std::optional<Variant>(Rng&)>& propose,
                   const std::function<double(const Variant&)>& score, std::size_t k,
                   const MhOptions& opts, Rng& rng) {
  if (k < 1) throw Error("mh_chain: k must be >= 1");
  if (opts.thinning < 1) throw Error("mh_chain: thinning must be >= 1");
  SampleSet out;

  // Find an initial decodable state; cap the search so a generator that
  // rejects everything yields a flagged degenerate result instead of a hang.
  const std::size_t init_budget = 1000 + 10 * (opts.burn_in + k * opts.thinning);
  std::optional<Variant> state;
  double state_score = 0.0;
  for (std::size_t i = 0; i < init_budget && !state.has_value(); ++i) {
    ++out.proposals;
    state = propose(rng);
    if (!state.has_value()) ++out.rejected;
  }
  if (!state.has_value()) {
    out.degenerate = true;
    out.draws = out.rejected;
    return out;
  }
  state_score = score(*state);

  const std::size_t total_steps = opts.burn_in + k * opts.thinning;
  std::size_t recorded = 0;
  for (std::size_t step = 1; step <= total_steps && recorded < k; ++step) {
    ++out.proposals;
    const std::optional<Variant> proposal = propose(rng);
    if (!proposal.has_value()) {
      ++out.rejected;  // undecodable proposal: chain state retained
    } else {
      const double proposal_score = score(*proposal);
      const double alpha = mh_acceptance(state_score, proposal_score);
      if (uniform_real(rng) < alpha) {
        state = proposal;
        state_score = proposal_score;
        ++out.accepted;
      }
    }
    if (step > opts.burn_in && (step - opts.burn_in) % opts.thinning == 0) {
      ++out.frequency[*state];
      ++recorded;
    }
  }
  out.draws = recorded + out.rejected;
  return out;
}

SampleSet mh_sample(const TrainedGenerator& gen, std::size_t k, std::uint64_t seed,
                    const MhOptions& opts) {
  Rng rng = make_rng(derive_seed(seed, "mh-chain"));
  return mh_chain(
      [&gen](Rng& r) { return sample_one(gen, r); },
      [&gen](const Variant& v) { return discriminator_score(gen, v); }, k, opts, rng);
}

void write_sample_file(const std::filesystem::path& path, const SampleSet& s) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << "# draws=" << s.draws << " rejected=" << s.rejected << "\n";
  for (const auto& [v, count] : s.frequency) {
    out << "# freq=" << count << "\n";
    for (std::size_t i = 0; i < v.events.size(); ++i) {
      if (i > 0) out << ' ';
      out << v.events[i];
    }
    out << '\n';
  }
  if (!out) throw Error("write failure on " + path.string());
}

SampleSet read_sample_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  SampleSet s;
  std::string line;
  std::size_t pending_freq = 1;
  bool have_header = false;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line.front() == '#') {
      std::size_t pos = line.find("draws=");
      if (pos != std::string::npos && !have_header) {
        s.draws = std::stoull(line.substr(pos + 6));
        pos = line.find("rejected=");
        if (pos != std::string::npos) s.rejected = std::stoull(line.substr(pos + 9));
        have_header = true;
        continue;
      }
      pos = line.find("freq=");
      if (pos != std::string::npos) pending_freq = std::stoull(line.substr(pos + 5));
      continue;
    }
    Variant v;
    std::istringstream ss(line);
    std::string tok;
    while (ss >> tok) v.events.push_back(tok);
    validate(v);
    s.frequency[v] += pending_freq;
    pending_freq = 1;
  }
  if (!have_header) {
    s.draws = s.frequency_total() + s.rejected;
  }
  return s;
}

}  // namespace vf
