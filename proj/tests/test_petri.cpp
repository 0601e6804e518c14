#include "doctest.h"
#include "vf/petri.hpp"
#include "vf/rng.hpp"

#include <deque>
#include <filesystem>
#include <functional>

namespace {

using vf::Marking;
using vf::PetriNet;

const std::filesystem::path kData = VF_TEST_DATA_DIR;

// Independent brute-force oracle: BFS over (marking, emitted prefix) states
// with global deduplication. Only valid on nets whose visible behaviour is
// acyclic (a visible cycle would make the state space infinite).
vf::UniqueVariantLog bfs_playout(const PetriNet& net, std::size_t max_states = 10'000) {
  struct State {
    Marking m;
    std::vector<std::string> prefix;
    auto operator<=>(const State&) const = default;
  };
  const bool explicit_finals = net.final_markings.has_value();
  auto is_final = [&](const Marking& m) {
    if (explicit_finals) {
      for (const auto& f : *net.final_markings) {
        if (f == m) return true;
      }
      return false;
    }
    return vf::enabled(net, m).empty();
  };

  vf::UniqueVariantLog out;
  std::set<State> visited;
  std::deque<State> queue;
  queue.push_back({net.initial_marking, {}});
  visited.insert(queue.front());
  std::size_t states = 0;
  while (!queue.empty()) {
    const State s = queue.front();
    queue.pop_front();
    if (++states > max_states) throw vf::Error("bfs oracle exceeded state cap");
    if (is_final(s.m) && !s.prefix.empty()) {
      vf::Variant v;
      v.events = s.prefix;
      out.insert(std::move(v));
    }
    for (const auto& t : vf::enabled(net, s.m)) {
      State next{vf::fire(net, s.m, t), s.prefix};
      for (const auto& tr : net.transitions) {
        if (tr.id == t && tr.label.has_value()) next.prefix.push_back(*tr.label);
      }
      if (visited.insert(next).second) queue.push_back(std::move(next));
    }
  }
  return out;
}

PetriNet minimal_sequence_net() {
  return vf::parse_net(R"({
    "places": ["p1", "p2"],
    "transitions": [{"id": "t", "label": "a"}],
    "arcs": [["p1", "t"], ["t", "p2"]],
    "initial": {"p1": 1},
    "final": [{"p2": 1}]
  })", vf::NetFormat::json_net, "seq");
}

}  // namespace

TEST_CASE("json-net parsing of the minimal sequence net") {
  const PetriNet net = minimal_sequence_net();
  CHECK(net.places.size() == 2);
  CHECK(net.transitions.size() == 1);
  CHECK(net.transitions[0].label == "a");
  const auto vs = vf::enumerate_variants(net);
  CHECK(vs.variants.size() == 1);
  CHECK(vs.alphabet == std::set<std::string>{"a"});
}

TEST_CASE("parse errors carry locations") {
  SUBCASE("dangling arc") {
    CHECK_THROWS_WITH_AS(vf::parse_net(R"({
      "places": ["p1"],
      "transitions": [{"id": "t", "label": "a"}],
      "arcs": [["p1", "t"], ["t", "nowhere"]],
      "initial": {"p1": 1}
    })", vf::NetFormat::json_net, "bad"),
                         "dangling arc: unknown target nowhere", vf::Error);
  }
  SUBCASE("missing initial marking") {
    CHECK_THROWS_AS(vf::parse_net(R"({
      "places": ["p1", "p2"],
      "transitions": [{"id": "t", "label": "a"}],
      "arcs": [["p1", "t"], ["t", "p2"]]
    })", vf::NetFormat::json_net, "bad"), vf::Error);
  }
  SUBCASE("malformed document") {
    CHECK_THROWS_AS(vf::parse_net("{not json", vf::NetFormat::json_net, "bad"),
                    vf::Error);
  }
  SUBCASE("non-bipartite arc") {
    CHECK_THROWS_AS(vf::parse_net(R"({
      "places": ["p1", "p2"],
      "transitions": [{"id": "t", "label": "a"}],
      "arcs": [["p1", "p2"], ["p1", "t"]],
      "initial": {"p1": 1}
    })", vf::NetFormat::json_net, "bad"), vf::Error);
  }
  SUBCASE("transition without input arc") {
    CHECK_THROWS_AS(vf::parse_net(R"({
      "places": ["p1", "p2"],
      "transitions": [{"id": "t", "label": "a"}, {"id": "u", "label": "b"}],
      "arcs": [["p1", "t"], ["t", "p2"]],
      "initial": {"p1": 1}
    })", vf::NetFormat::json_net, "bad"), vf::Error);
  }
  SUBCASE("non-positive arc multiplicity") {
    CHECK_THROWS_AS(vf::parse_net(R"({
      "places": ["p1", "p2"],
      "transitions": [{"id": "t", "label": "a"}],
      "arcs": [["p1", "t", 0], ["t", "p2"]],
      "initial": {"p1": 1}
    })", vf::NetFormat::json_net, "bad"), vf::Error);
  }
  SUBCASE("negative initial tokens") {
    CHECK_THROWS_AS(vf::parse_net(R"({
      "places": ["p1", "p2"],
      "transitions": [{"id": "t", "label": "a"}],
      "arcs": [["p1", "t"], ["t", "p2"]],
      "initial": {"p1": -1}
    })", vf::NetFormat::json_net, "bad"), vf::Error);
  }
  SUBCASE("final marking over an unknown place") {
    CHECK_THROWS_AS(vf::parse_net(R"({
      "places": ["p1", "p2"],
      "transitions": [{"id": "t", "label": "a"}],
      "arcs": [["p1", "t"], ["t", "p2"]],
      "initial": {"p1": 1},
      "final": [{"ghost": 1}]
    })", vf::NetFormat::json_net, "bad"), vf::Error);
  }
  SUBCASE("duplicate node ids") {
    CHECK_THROWS_AS(vf::parse_net(R"({
      "places": ["x", "p2"],
      "transitions": [{"id": "x", "label": "a"}],
      "arcs": [["p2", "x"]],
      "initial": {"p2": 1}
    })", vf::NetFormat::json_net, "bad"), vf::Error);
  }
}

TEST_CASE("variants at the length cap pass, one beyond errors") {
  auto chain_net = [](int length) {
    PetriNet net;
    for (int i = 0; i <= length; ++i) net.places.push_back("p" + std::to_string(i));
    for (int i = 0; i < length; ++i) {
      net.transitions.push_back({"t" + std::to_string(i), "e" + std::to_string(i)});
      net.arcs.push_back({"p" + std::to_string(i), "t" + std::to_string(i), 1});
      net.arcs.push_back({"t" + std::to_string(i), "p" + std::to_string(i + 1), 1});
    }
    net.initial_marking.set("p0", 1);
    Marking fin;
    fin.set("p" + std::to_string(length), 1);
    net.final_markings = std::vector<Marking>{fin};
    return net;
  };
  vf::PlayoutConfig cfg;
  cfg.max_variant_length = 64;
  const auto ok = vf::enumerate_variants(chain_net(64), cfg);
  CHECK(ok.variants.size() == 1);
  CHECK(ok.variants.begin()->length() == 64);
  CHECK_THROWS_AS(vf::enumerate_variants(chain_net(65), cfg), vf::Error);
}

TEST_CASE("random nets agree with the BFS oracle whenever both complete") {
  auto rng = vf::make_rng(31337);
  int compared = 0;
  for (int trial = 0; trial < 60; ++trial) {
    PetriNet net;
    const int n_places = 3 + static_cast<int>(vf::uniform_below(rng, 4));
    const int n_trans = 2 + static_cast<int>(vf::uniform_below(rng, 5));
    for (int p = 0; p < n_places; ++p) net.places.push_back("p" + std::to_string(p));
    for (int t = 0; t < n_trans; ++t) {
      vf::NetTransition tr;
      tr.id = "t" + std::to_string(t);
      // Roughly one transition in five is silent; labels may repeat.
      if (vf::uniform_below(rng, 5) != 0) {
        tr.label = std::string(1, static_cast<char>('a' + vf::uniform_below(rng, 4)));
      }
      net.transitions.push_back(std::move(tr));
      // Guaranteed input arc plus a few random arcs either way.
      const auto in = vf::uniform_below(rng, static_cast<std::uint64_t>(n_places));
      net.arcs.push_back({"p" + std::to_string(in), "t" + std::to_string(t), 1});
      const auto extra = vf::uniform_below(rng, 3);
      for (std::uint64_t e = 0; e < extra; ++e) {
        const auto place = vf::uniform_below(rng, static_cast<std::uint64_t>(n_places));
        if (vf::uniform_below(rng, 2) == 0) {
          net.arcs.push_back({"p" + std::to_string(place), "t" + std::to_string(t), 1});
        } else {
          net.arcs.push_back({"t" + std::to_string(t), "p" + std::to_string(place), 1});
        }
      }
    }
    net.initial_marking.set("p0", 1);
    if (vf::uniform_below(rng, 2) == 0) {
      net.initial_marking.set("p" + std::to_string(1 + vf::uniform_below(rng, 2)), 1);
    }
    // Dead markings act as final; some nets will blow the caps, skip those.
    vf::PlayoutConfig cfg;
    cfg.max_variant_length = 10;
    cfg.max_states = 200000;
    cfg.max_silent_chain = 12;
    vf::UniqueVariantLog ours, oracle;
    try {
      ours = vf::enumerate_variants(net, cfg).variants;
      oracle = bfs_playout(net, 200000);
    } catch (const vf::Error&) {
      continue;
    }
    CAPTURE(trial);
    CHECK(ours == oracle);
    ++compared;
  }
  CHECK(compared >= 20);  // enough nets actually completed
}

TEST_CASE("pnml subset parsing") {
  const PetriNet net = vf::load_net(kData / "toy_e.pnml");
  CHECK(net.id == "toy_e");
  CHECK(net.places.size() == 5);
  int silent = 0;
  for (const auto& t : net.transitions) silent += t.silent() ? 1 : 0;
  CHECK(silent == 1);  // the toolspecific $invisible$ transition
  CHECK(!net.final_markings.has_value());  // dead markings are final

  const auto vs = vf::enumerate_variants(net);
  vf::UniqueVariantLog expected;
  for (auto events : {std::vector<std::string>{"a", "b", "c", "d"},
                      {"a", "b", "c", "e"},
                      {"a", "c", "d"},
                      {"a", "c", "e"}}) {
    expected.insert(vf::Variant{std::move(events)});
  }
  CHECK(vs.variants == expected);
}

TEST_CASE("enabled firing rule") {
  const PetriNet net = minimal_sequence_net();
  CHECK(vf::enabled(net, net.initial_marking) == std::set<std::string>{"t"});
  CHECK(vf::enabled(net, Marking{}).empty());

  const PetriNet par = vf::load_net(kData / "par2.json");
  CHECK(vf::enabled(par, par.initial_marking) == std::set<std::string>{"t_a", "t_b"});
}

TEST_CASE("fire consumes and produces tokens") {
  const PetriNet net = minimal_sequence_net();
  const Marking after = vf::fire(net, net.initial_marking, "t");
  CHECK(after.at("p1") == 0);
  CHECK(after.at("p2") == 1);
  CHECK_THROWS_AS(vf::fire(net, after, "t"), vf::Error);  // disabled
  CHECK_THROWS_AS(vf::fire(net, after, "ghost"), vf::Error);
}

TEST_CASE("fire on a self-loop place keeps its token count") {
  const PetriNet net = vf::parse_net(R"({
    "places": ["p", "q"],
    "transitions": [{"id": "t", "label": "a"}],
    "arcs": [["p", "t"], ["t", "p"], ["t", "q"]],
    "initial": {"p": 1}
  })", vf::NetFormat::json_net, "selfloop");
  const Marking after = vf::fire(net, net.initial_marking, "t");
  CHECK(after.at("p") == 1);
  CHECK(after.at("q") == 1);
}

TEST_CASE("parallel interleaving enumerates both orders") {
  const PetriNet net = vf::load_net(kData / "par2.json");
  const auto vs = vf::enumerate_variants(net);
  CHECK(vs.variants == vf::UniqueVariantLog{vf::Variant{{"a", "b"}},
                                            vf::Variant{{"b", "a"}}});
}

TEST_CASE("distinct firing sequences with the same visible labels deduplicate") {
  // Silent choice into two branches that emit the same label.
  const PetriNet net = vf::parse_net(R"({
    "places": ["s", "l", "r", "e"],
    "transitions": [
      {"id": "go_l", "label": null},
      {"id": "go_r", "label": null},
      {"id": "a_l", "label": "a"},
      {"id": "a_r", "label": "a"}
    ],
    "arcs": [["s", "go_l"], ["go_l", "l"], ["s", "go_r"], ["go_r", "r"],
             ["l", "a_l"], ["a_l", "e"], ["r", "a_r"], ["a_r", "e"]],
    "initial": {"s": 1},
    "final": [{"e": 1}]
  })", vf::NetFormat::json_net, "dup");
  const auto vs = vf::enumerate_variants(net);
  CHECK(vs.variants.size() == 1);
}

TEST_CASE("silent cycles are pruned, not followed forever") {
  // s -eps-> s (via back-and-forth places) with a visible exit.
  const PetriNet net = vf::parse_net(R"({
    "places": ["s", "m", "e"],
    "transitions": [
      {"id": "fwd", "label": null},
      {"id": "back", "label": null},
      {"id": "out", "label": "a"}
    ],
    "arcs": [["s", "fwd"], ["fwd", "m"], ["m", "back"], ["back", "s"],
             ["m", "out"], ["out", "e"]],
    "initial": {"s": 1},
    "final": [{"e": 1}]
  })", vf::NetFormat::json_net, "silentcycle");
  const auto vs = vf::enumerate_variants(net);
  CHECK(vs.variants == vf::UniqueVariantLog{vf::Variant{{"a"}}});
}

TEST_CASE("visible cycles exceed the length cap and error") {
  const PetriNet net = vf::parse_net(R"({
    "places": ["s", "e"],
    "transitions": [
      {"id": "loop", "label": "a"},
      {"id": "done", "label": "b"}
    ],
    "arcs": [["s", "loop"], ["loop", "s"], ["s", "done"], ["done", "e"]],
    "initial": {"s": 1},
    "final": [{"e": 1}]
  })", vf::NetFormat::json_net, "loop");
  CHECK_THROWS_AS(vf::enumerate_variants(net), vf::Error);
}

TEST_CASE("state cap errors instead of returning partial results") {
  const PetriNet net = vf::load_net(kData / "toy_grid.json");
  vf::PlayoutConfig cfg;
  cfg.max_states = 5;
  CHECK_THROWS_AS(vf::enumerate_variants(net, cfg), vf::Error);
}

TEST_CASE("format autodetection keys off the leading byte and extension") {
  const PetriNet a = vf::load_net(kData / "toy_e.pnml");           // extension
  const PetriNet b = vf::load_net(kData / "toy_a.json");           // json body
  CHECK(a.id == "toy_e");
  CHECK(b.places.size() == 7);
  const std::string pnml_text = R"(<pnml><net id="x">
    <place id="p"><initialMarking><text>1</text></initialMarking></place>
    <transition id="t"><name><text>a</text></name></transition>
    <arc id="a1" source="p" target="t"/>
  </net></pnml>)";
  CHECK(vf::parse_net(pnml_text, vf::NetFormat::autodetect, "mem").id == "x");
}

TEST_CASE("silent-only nets with empty names stay silent in pnml") {
  const PetriNet net = vf::parse_net(R"(<pnml><net id="x">
    <place id="p"><initialMarking><text>1</text></initialMarking></place>
    <place id="q"/>
    <transition id="t"><name><text></text></name></transition>
    <transition id="u"/>
    <transition id="w"><name><text>go</text></name></transition>
    <arc id="a1" source="p" target="t"/><arc id="a2" source="t" target="q"/>
    <arc id="a3" source="p" target="u"/><arc id="a4" source="u" target="q"/>
    <arc id="a5" source="p" target="w"/><arc id="a6" source="w" target="q"/>
  </net></pnml>)", vf::NetFormat::pnml, "mem");
  int silent = 0;
  for (const auto& t : net.transitions) silent += t.silent() ? 1 : 0;
  CHECK(silent == 2);
}

TEST_CASE("silent chain cap guards against silent livelock") {
  // A ladder of fresh markings via token accumulation, never repeating.
  const PetriNet net = vf::parse_net(R"({
    "places": ["p", "sink"],
    "transitions": [{"id": "grow", "label": null}, {"id": "out", "label": "a"}],
    "arcs": [["p", "grow"], ["grow", "p", 2], ["p", "out"], ["out", "sink"]],
    "initial": {"p": 1},
    "final": [{"sink": 1}]
  })", vf::NetFormat::json_net, "growing");
  vf::PlayoutConfig cfg;
  cfg.max_silent_chain = 10;
  cfg.max_states = 100000;
  CHECK_THROWS_AS(vf::enumerate_variants(net, cfg), vf::Error);
}

TEST_CASE("multiple final markings all collect variants") {
  const PetriNet net = vf::parse_net(R"({
    "places": ["s", "l", "r"],
    "transitions": [{"id": "tl", "label": "a"}, {"id": "tr", "label": "b"}],
    "arcs": [["s", "tl"], ["tl", "l"], ["s", "tr"], ["tr", "r"]],
    "initial": {"s": 1},
    "final": [{"l": 1}, {"r": 1}]
  })", vf::NetFormat::json_net, "twofinals");
  const auto vs = vf::enumerate_variants(net);
  CHECK(vs.variants.size() == 2);
}

TEST_CASE("enumeration is deterministic") {
  const PetriNet net = vf::load_net(kData / "toy_b.json");
  const auto a = vf::enumerate_variants(net);
  const auto b = vf::enumerate_variants(net);
  CHECK(a.variants == b.variants);
  CHECK(a.alphabet == b.alphabet);
}

TEST_CASE("enumeration matches the BFS reachability oracle on toy nets") {
  for (const auto* name : {"seq1.json", "par2.json", "toy_a.json", "toy_b.json",
                           "toy_c.json", "toy_d.json", "toy_grid.json"}) {
    CAPTURE(name);
    const PetriNet net = vf::load_net(kData / name);
    CHECK(vf::enumerate_variants(net).variants == bfs_playout(net));
  }
  const PetriNet pnml_net = vf::load_net(kData / "toy_e.pnml");
  CHECK(vf::enumerate_variants(pnml_net).variants == bfs_playout(pnml_net));
}

TEST_CASE("every enumerated variant is replayable to a final marking") {
  for (const auto* name : {"toy_a.json", "toy_b.json", "toy_d.json"}) {
    CAPTURE(name);
    const PetriNet net = vf::load_net(kData / name);
    const auto vs = vf::enumerate_variants(net);
    // Replay by searching over silent-transition choices.
    for (const auto& v : vs.variants) {
      std::function<bool(const Marking&, std::size_t, int)> replay =
          [&](const Marking& m, std::size_t pos, int silent_budget) -> bool {
        if (pos == v.events.size()) {
          if (net.final_markings.has_value()) {
            for (const auto& f : *net.final_markings) {
              if (f == m) return true;
            }
          } else if (vf::enabled(net, m).empty()) {
            return true;
          }
        }
        for (const auto& t : vf::enabled(net, m)) {
          const vf::NetTransition* tr = nullptr;
          for (const auto& cand : net.transitions) {
            if (cand.id == t) tr = &cand;
          }
          if (tr->silent()) {
            if (silent_budget > 0 && replay(vf::fire(net, m, t), pos, silent_budget - 1)) {
              return true;
            }
          } else if (pos < v.events.size() && *tr->label == v.events[pos]) {
            if (replay(vf::fire(net, m, t), pos + 1, 8)) return true;
          }
        }
        return false;
      };
      CAPTURE(v.events);
      CHECK(replay(net.initial_marking, 0, 8));
    }
  }
}
