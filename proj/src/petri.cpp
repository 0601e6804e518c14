#include "vf/petri.hpp"

#include <algorithm>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <unordered_set>

#include "json.hpp"
#include "vf/xml.hpp"

namespace vf {

namespace {

using nlohmann::json;

bool is_place(const PetriNet& net, const std::string& id) {
  return std::find(net.places.begin(), net.places.end(), id) != net.places.end();
}

const NetTransition* find_transition(const PetriNet& net, const std::string& id) {
  for (const auto& t : net.transitions) {
    if (t.id == id) return &t;
  }
  return nullptr;
}

PetriNet parse_json_net(const std::string& source, const std::string& origin) {
  json doc;
  try {
    doc = json::parse(source);
  } catch (const json::parse_error& e) {
    throw Error(origin + ": malformed json-net document: " + e.what());
  }
  PetriNet net;
  try {
    net.id = doc.value("id", origin);
    for (const auto& p : doc.at("places")) net.places.push_back(p.get<std::string>());
    for (const auto& t : doc.at("transitions")) {
      NetTransition tr;
      tr.id = t.at("id").get<std::string>();
      if (t.contains("label") && !t.at("label").is_null()) {
        const auto label = t.at("label").get<std::string>();
        if (!label.empty()) tr.label = label;
      }
      net.transitions.push_back(std::move(tr));
    }
    for (const auto& a : doc.at("arcs")) {
      Arc arc;
      arc.source = a.at(0).get<std::string>();
      arc.target = a.at(1).get<std::string>();
      if (a.size() > 2) arc.multiplicity = a.at(2).get<int>();
      net.arcs.push_back(std::move(arc));
    }
    if (!doc.contains("initial")) throw Error(origin + ": missing initial marking");
    for (const auto& [place, count] : doc.at("initial").items()) {
      net.initial_marking.set(place, count.get<int>());
    }
    if (doc.contains("final")) {
      std::vector<Marking> finals;
      for (const auto& fm : doc.at("final")) {
        Marking m;
        for (const auto& [place, count] : fm.items()) m.set(place, count.get<int>());
        finals.push_back(std::move(m));
      }
      if (!finals.empty()) net.final_markings = std::move(finals);
    }
  } catch (const json::exception& e) {
    throw Error(origin + ": malformed json-net document: " + e.what());
  }
  return net;
}

std::string first_text(const XmlNode& node, const std::string& child_name) {
  if (const XmlNode* c = node.child(child_name)) {
    if (const XmlNode* t = c->child("text")) return t->text;
    return c->text;
  }
  return {};
}

bool has_invisible_flag(const XmlNode& transition) {
  for (const auto& child : transition.children) {
    if (child.name != "toolspecific") continue;
    for (const auto& [k, v] : child.attributes) {
      std::string lv = v;
      std::transform(lv.begin(), lv.end(), lv.begin(), ::tolower);
      if (lv.find("invisible") != std::string::npos || (k == "invisible" && lv == "true")) {
        return true;
      }
    }
    if (child.serialized_text_contains("invisible")) return true;
  }
  return false;
}

PetriNet parse_pnml(const std::string& source, const std::string& origin) {
  const XmlNode root = parse_xml(source, origin);
  const XmlNode* pnml = root.name == "pnml" ? &root : root.child("pnml");
  if (pnml == nullptr) throw Error(origin + ": not a pnml document (no <pnml> root)");
  const XmlNode* netnode = pnml->child("net");
  if (netnode == nullptr) throw Error(origin + ": pnml document without <net>");

  PetriNet net;
  net.id = netnode->attribute("id").value_or(origin);

  // Elements may sit directly under <net> or inside <page> wrappers.
  std::vector<const XmlNode*> scopes{netnode};
  for (const auto& child : netnode->children) {
    if (child.name == "page") scopes.push_back(&child);
  }

  for (const XmlNode* scope : scopes) {
    for (const auto& el : scope->children) {
      if (el.name == "place") {
        const auto id = el.attribute("id");
        if (!id) throw Error(origin + ": <place> without id attribute");
        net.places.push_back(*id);
        if (const XmlNode* im = el.child("initialMarking")) {
          const XmlNode* t = im->child("text");
          const std::string text = t != nullptr ? t->text : im->text;
          if (!text.empty()) {
            try {
              net.initial_marking.set(*id, std::stoi(text));
            } catch (const std::exception&) {
              throw Error(origin + ": place " + *id + ": bad initialMarking '" + text + "'");
            }
          }
        }
      } else if (el.name == "transition") {
        const auto id = el.attribute("id");
        if (!id) throw Error(origin + ": <transition> without id attribute");
        NetTransition tr;
        tr.id = *id;
        const std::string name = first_text(el, "name");
        if (!name.empty() && !has_invisible_flag(el)) tr.label = name;
        net.transitions.push_back(std::move(tr));
      } else if (el.name == "arc") {
        const auto src = el.attribute("source");
        const auto dst = el.attribute("target");
        if (!src || !dst) {
          throw Error(origin + ": <arc " + el.attribute("id").value_or("?") +
                      "> missing source/target");
        }
        Arc arc;
        arc.source = *src;
        arc.target = *dst;
        const std::string mult = first_text(el, "inscription");
        if (!mult.empty()) {
          try {
            arc.multiplicity = std::stoi(mult);
          } catch (const std::exception&) {
            throw Error(origin + ": arc " + *src + "->" + *dst + ": bad inscription '" +
                        mult + "'");
          }
        }
        net.arcs.push_back(std::move(arc));
      }
    }
  }
  return net;
}

// --- compiled form for playout ------------------------------------------

struct CompiledNet {
  std::size_t num_places = 0;
  std::vector<int> initial;                                   // tokens per place index
  std::vector<std::vector<int>> finals;                       // explicit final markings
  bool dead_markings_final = false;
  std::vector<std::optional<std::string>> labels;             // per transition
  std::vector<std::vector<std::pair<int, int>>> inputs;       // (place, mult)
  std::vector<std::vector<std::pair<int, int>>> outputs;
};

CompiledNet compile(const PetriNet& net) {
  CompiledNet cn;
  cn.num_places = net.places.size();
  std::map<std::string, int> place_idx;
  for (std::size_t i = 0; i < net.places.size(); ++i) {
    place_idx[net.places[i]] = static_cast<int>(i);
  }
  std::map<std::string, int> trans_idx;
  for (std::size_t i = 0; i < net.transitions.size(); ++i) {
    trans_idx[net.transitions[i].id] = static_cast<int>(i);
    cn.labels.push_back(net.transitions[i].label);
  }
  cn.inputs.resize(net.transitions.size());
  cn.outputs.resize(net.transitions.size());
  for (const auto& arc : net.arcs) {
    auto ps = place_idx.find(arc.source);
    if (ps != place_idx.end()) {
      cn.inputs[static_cast<std::size_t>(trans_idx.at(arc.target))].emplace_back(
          ps->second, arc.multiplicity);
    } else {
      cn.outputs[static_cast<std::size_t>(trans_idx.at(arc.source))].emplace_back(
          place_idx.at(arc.target), arc.multiplicity);
    }
  }
  cn.initial.assign(cn.num_places, 0);
  for (const auto& [place, count] : net.initial_marking.tokens) {
    cn.initial[static_cast<std::size_t>(place_idx.at(place))] = count;
  }
  if (net.final_markings.has_value()) {
    for (const auto& fm : *net.final_markings) {
      std::vector<int> f(cn.num_places, 0);
      for (const auto& [place, count] : fm.tokens) {
        auto it = place_idx.find(place);
        if (it == place_idx.end()) throw Error("final marking references unknown place " + place);
        f[static_cast<std::size_t>(it->second)] = count;
      }
      cn.finals.push_back(std::move(f));
    }
  } else {
    cn.dead_markings_final = true;
  }
  return cn;
}

bool transition_enabled(const CompiledNet& cn, const std::vector<int>& m, std::size_t t) {
  for (const auto& [place, mult] : cn.inputs[t]) {
    if (m[static_cast<std::size_t>(place)] < mult) return false;
  }
  return true;
}

void fire_into(const CompiledNet& cn, std::vector<int>& m, std::size_t t) {
  for (const auto& [place, mult] : cn.inputs[t]) m[static_cast<std::size_t>(place)] -= mult;
  for (const auto& [place, mult] : cn.outputs[t]) m[static_cast<std::size_t>(place)] += mult;
}

bool any_enabled(const CompiledNet& cn, const std::vector<int>& m) {
  for (std::size_t t = 0; t < cn.labels.size(); ++t) {
    if (transition_enabled(cn, m, t)) return true;
  }
  return false;
}

bool is_final(const CompiledNet& cn, const std::vector<int>& m) {
  if (cn.dead_markings_final) return !any_enabled(cn, m);
  return std::find(cn.finals.begin(), cn.finals.end(), m) != cn.finals.end();
}

struct Playout {
  const CompiledNet& cn;
  const PlayoutConfig& cfg;
  UniqueVariantLog result;
  std::size_t states = 0;
  std::vector<std::string> prefix;
  std::set<std::vector<int>> since_visible;  // markings on path since last emission

  void explore(std::vector<int>& marking, int silent_chain) {
    if (++states > cfg.max_states) {
      throw Error("playout exceeded max_states cap (" + std::to_string(cfg.max_states) +
                  "); language possibly too large or unbounded");
    }
    if (is_final(cn, marking) && !prefix.empty()) {
      Variant v;
      v.events = prefix;
      result.insert(std::move(v));
    }
    for (std::size_t t = 0; t < cn.labels.size(); ++t) {
      if (!transition_enabled(cn, marking, t)) continue;
      std::vector<int> next = marking;
      fire_into(cn, next, t);
      if (cn.labels[t].has_value()) {
        if (prefix.size() + 1 > cfg.max_variant_length) {
          throw Error("playout exceeded max_variant_length cap (" +
                      std::to_string(cfg.max_variant_length) +
                      "); language possibly unbounded");
        }
        prefix.push_back(*cn.labels[t]);
        auto saved = std::move(since_visible);
        since_visible.clear();
        since_visible.insert(next);
        explore(next, 0);
        since_visible = std::move(saved);
        prefix.pop_back();
      } else {
        if (since_visible.contains(next)) continue;  // silent cycle, prune
        if (silent_chain + 1 > cfg.max_silent_chain) {
          throw Error("playout exceeded silent-chain cap (" +
                      std::to_string(cfg.max_silent_chain) + "); silent livelock suspected");
        }
        since_visible.insert(next);
        explore(next, silent_chain + 1);
        since_visible.erase(next);
      }
    }
  }
};

}  // namespace

void validate(const PetriNet& net) {
  if (net.places.empty()) throw Error("net has no places");
  if (net.transitions.empty()) throw Error("net has no transitions");
  std::set<std::string> ids;
  for (const auto& p : net.places) {
    if (!ids.insert(p).second) throw Error("duplicate node id " + p);
  }
  for (const auto& t : net.transitions) {
    if (!ids.insert(t.id).second) throw Error("duplicate node id " + t.id);
  }
  std::set<std::string> with_input;
  for (const auto& arc : net.arcs) {
    const bool src_place = is_place(net, arc.source);
    const bool dst_place = is_place(net, arc.target);
    if (!ids.contains(arc.source)) throw Error("dangling arc: unknown source " + arc.source);
    if (!ids.contains(arc.target)) throw Error("dangling arc: unknown target " + arc.target);
    if (src_place == dst_place) {
      throw Error("arc " + arc.source + "->" + arc.target +
                  " violates bipartite structure (place<->transition only)");
    }
    if (arc.multiplicity < 1) {
      throw Error("arc " + arc.source + "->" + arc.target + " has non-positive multiplicity");
    }
    if (src_place) with_input.insert(arc.target);
  }
  for (const auto& t : net.transitions) {
    if (!with_input.contains(t.id)) {
      throw Error("transition " + t.id + " has no input arc");
    }
  }
  if (net.initial_marking.tokens.empty()) throw Error("missing or empty initial marking");
  for (const auto& [place, count] : net.initial_marking.tokens) {
    if (!is_place(net, place)) throw Error("initial marking references unknown place " + place);
    if (count < 0) throw Error("negative token count on place " + place);
  }
  if (net.final_markings.has_value()) {
    if (net.final_markings->empty()) throw Error("explicit final marking set is empty");
    for (const auto& fm : *net.final_markings) {
      for (const auto& [place, count] : fm.tokens) {
        if (!is_place(net, place)) {
          throw Error("final marking references unknown place " + place);
        }
        if (count < 0) throw Error("negative token count on place " + place);
      }
    }
  }
}

PetriNet parse_net(const std::string& source, NetFormat format, const std::string& origin) {
  if (format == NetFormat::autodetect) {
    const auto first = source.find_first_not_of(" \t\r\n");
    format = (first != std::string::npos && source[first] == '<') ? NetFormat::pnml
                                                                  : NetFormat::json_net;
  }
  PetriNet net = format == NetFormat::pnml ? parse_pnml(source, origin)
                                           : parse_json_net(source, origin);
  validate(net);
  return net;
}

PetriNet load_net(const std::filesystem::path& path, NetFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open net file " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  if (format == NetFormat::autodetect && path.extension() == ".pnml") {
    format = NetFormat::pnml;
  }
  return parse_net(buf.str(), format, path.string());
}

std::set<std::string> enabled(const PetriNet& net, const Marking& m) {
  for (const auto& [place, count] : m.tokens) {
    if (!is_place(net, place)) throw Error("marking references unknown place " + place);
  }
  std::set<std::string> out;
  for (const auto& t : net.transitions) {
    bool ok = true;
    for (const auto& arc : net.arcs) {
      if (arc.target == t.id && m.at(arc.source) < arc.multiplicity) {
        ok = false;
        break;
      }
    }
    if (ok) out.insert(t.id);
  }
  return out;
}

Marking fire(const PetriNet& net, const Marking& m, const std::string& transition_id) {
  if (find_transition(net, transition_id) == nullptr) {
    throw Error("unknown transition " + transition_id);
  }
  if (!enabled(net, m).contains(transition_id)) {
    throw Error("transition " + transition_id + " is not enabled");
  }
  Marking out = m;
  for (const auto& arc : net.arcs) {
    if (arc.target == transition_id) {
      out.set(arc.source, out.at(arc.source) - arc.multiplicity);
    }
  }
  for (const auto& arc : net.arcs) {
    if (arc.source == transition_id) {
      out.set(arc.target, out.at(arc.target) + arc.multiplicity);
    }
  }
  return out;
}

SystemVariantSet enumerate_variants(const PetriNet& net, const PlayoutConfig& cfg) {
  validate(net);
  const CompiledNet cn = compile(net);
  Playout playout{cn, cfg, {}, 0, {}, {}};
  std::vector<int> m = cn.initial;
  playout.since_visible.insert(m);
  playout.explore(m, 0);
  SystemVariantSet vs;
  vs.variants = std::move(playout.result);
  vs.alphabet = alphabet_of(vs.variants);
  return vs;
}

}  // namespace vf
