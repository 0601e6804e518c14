#pragma once

#include <cstddef>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "vf/variant.hpp"

namespace vf {

// Token state: place id -> count. Places absent from the map hold zero tokens.
struct Marking {
  std::map<std::string, int> tokens;

  int at(const std::string& place) const {
    auto it = tokens.find(place);
    return it == tokens.end() ? 0 : it->second;
  }
  void set(const std::string& place, int count) {
    if (count == 0) {
      tokens.erase(place);
    } else {
      tokens[place] = count;
    }
  }
  auto operator<=>(const Marking&) const = default;
};

struct NetTransition {
  std::string id;
  std::optional<std::string> label;  // nullopt: silent

  bool silent() const noexcept { return !label.has_value(); }
};

struct Arc {
  std::string source;
  std::string target;
  int multiplicity = 1;
};

// Bounded labeled Petri net. `final_markings` empty (nullopt) means the net
// uses dead-marking completion semantics: every marking without enabled
// transitions counts as final.
struct PetriNet {
  std::string id;
  std::vector<std::string> places;
  std::vector<NetTransition> transitions;
  std::vector<Arc> arcs;
  Marking initial_marking;
  std::optional<std::vector<Marking>> final_markings;
};

// Structural invariants: bipartite arcs with known endpoints, every
// transition has an input arc, non-empty initial marking. Throws Error.
void validate(const PetriNet& net);

struct PlayoutConfig {
  std::size_t max_variant_length = 64;
  std::size_t max_states = 10'000'000;
  int max_silent_chain = 50;  // consecutive silent firings
};

struct SystemVariantSet {
  UniqueVariantLog variants;
  std::set<std::string> alphabet;
};

enum class NetFormat { json_net, pnml, autodetect };

PetriNet parse_net(const std::string& source, NetFormat format,
                   const std::string& origin = "<memory>");
PetriNet load_net(const std::filesystem::path& path,
                  NetFormat format = NetFormat::autodetect);

// Transition ids enabled at m (every input place holds >= arc multiplicity).
std::set<std::string> enabled(const PetriNet& net, const Marking& m);

// Fires t from m; throws if t is not enabled or unknown.
Marking fire(const PetriNet& net, const Marking& m, const std::string& transition_id);

// Exhaustive playout: the set of visible-label sequences over all firing
// sequences from the initial marking to a final marking, deduplicated.
// Throws Error when a cap is exceeded (possibly unbounded language).
SystemVariantSet enumerate_variants(const PetriNet& net, const PlayoutConfig& cfg = {});

}  // namespace vf
