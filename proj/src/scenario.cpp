#include "hierion/scenario.hpp"

#include <algorithm>
#include <set>

#include "hierion/error.hpp"

namespace hierion::scenario {

std::string_view to_string(SymbolKind k) {
  return k == SymbolKind::General ? "general" : "individual";
}

std::string_view to_string(EventKind k) {
  switch (k) {
    case EventKind::Fire: return "fire";
    case EventKind::CoupledFire: return "coupled-fire";
    case EventKind::ChildFire: return "child-fire";
    case EventKind::UpwardFire: return "upward-fire";
    case EventKind::Decay: return "decay";
    case EventKind::Redundant: return "redundant";
    case EventKind::MixedInput: return "mixed-input";
    case EventKind::ChildSkipped: return "child-skipped";
  }
  return "fire";
}

std::optional<EventKind> parse_event_kind(std::string_view name) {
  for (auto k : {EventKind::Fire, EventKind::CoupledFire, EventKind::ChildFire,
                 EventKind::UpwardFire, EventKind::Decay, EventKind::Redundant,
                 EventKind::MixedInput, EventKind::ChildSkipped}) {
    if (to_string(k) == name) return k;
  }
  return std::nullopt;
}

bool is_transition(EventKind k) {
  return k == EventKind::Fire || k == EventKind::CoupledFire ||
         k == EventKind::ChildFire || k == EventKind::UpwardFire ||
         k == EventKind::Decay;
}

// ---------------------------------------------------------------------------
// ControlDiagram

const State* ControlDiagram::find_state(std::string_view sid) const {
  auto it = std::find_if(states.begin(), states.end(),
                         [&](const State& s) { return s.id == sid; });
  return it == states.end() ? nullptr : &*it;
}

const Symbol* ControlDiagram::find_symbol(std::string_view sid) const {
  auto it = std::find_if(alphabet.begin(), alphabet.end(),
                         [&](const Symbol& s) { return s.id == sid; });
  return it == alphabet.end() ? nullptr : &*it;
}

std::vector<const P1Arc*> ControlDiagram::arcs_for(std::string_view symbol) const {
  std::vector<const P1Arc*> out;
  for (const auto& a : p1_arcs) {
    if (a.symbol == symbol) out.push_back(&a);
  }
  return out;
}

const P1Arc* ControlDiagram::find_p1(std::string_view src, std::string_view dst) const {
  for (const auto& a : p1_arcs) {
    if (a.src == src && a.dst == dst) return &a;
  }
  return nullptr;
}

ValidationReport validate_control_diagram(const ControlDiagram& d) {
  ValidationReport r;
  const std::string at = "diagram " + d.id + ": ";
  std::map<std::string, int> rank;
  for (const auto& s : d.states) {
    if (!rank.emplace(s.id, s.rank).second) r.push_back(at + "duplicate state id " + s.id);
  }
  if (d.states.empty()) r.push_back(at + "no states");
  if (!rank.contains(d.s0)) r.push_back(at + "unknown initial state " + d.s0);
  if (!rank.contains(d.s_star)) r.push_back(at + "unknown final state " + d.s_star);
  std::set<std::string> symbols;
  for (const auto& x : d.alphabet) {
    if (!symbols.insert(x.id).second) r.push_back(at + "duplicate symbol " + x.id);
  }
  std::set<std::pair<std::string, std::string>> p1_pairs;
  for (const auto& a : d.p1_arcs) {
    const std::string tag = "(" + a.src + "," + a.dst + ")";
    if (!rank.contains(a.src) || !rank.contains(a.dst)) {
      r.push_back(at + "P1 arc references unknown state " + tag);
    }
    if (!symbols.contains(a.symbol)) {
      r.push_back(at + "P1 arc " + tag + " uses undeclared symbol " + a.symbol);
    }
    if (a.src == a.dst) r.push_back(at + "P1 self-loop " + tag);
    if (a.delta < 1) r.push_back(at + "P1 arc " + tag + " has non-positive delta");
    if (a.src == d.s_star) r.push_back(at + "P1 arc " + tag + " leaves the final state");
    p1_pairs.insert({a.src, a.dst});
  }
  for (const auto& a : d.p2_arcs) {
    const std::string tag = "(" + a.src + "," + a.dst + ")";
    if (!rank.contains(a.src) || !rank.contains(a.dst)) {
      r.push_back(at + "P2 arc references unknown state " + tag);
      continue;
    }
    if (!(rank[a.dst] < rank[a.src])) r.push_back(at + "P2 arc violates rank order: " + tag);
    if (a.decay && *a.decay < 1) r.push_back(at + "P2 arc " + tag + " has non-positive decay");
    if (p1_pairs.contains({a.src, a.dst})) r.push_back(at + "arc in both P1 and P2: " + tag);
    if (a.src == d.s_star) r.push_back(at + "P2 arc " + tag + " leaves the final state");
  }
  return r;
}

// ---------------------------------------------------------------------------
// Scenario validation

namespace {

std::string node_of(const Scenario& s, const std::string& diagram) {
  for (const auto& [node, did] : s.mapping) {
    if (did == diagram) return node;
  }
  return {};
}

}  // namespace

ScenarioReport validate_scenario(const Scenario& s) {
  ScenarioReport r;
  std::map<std::string, SymbolKind> kinds;
  for (const auto& [id, d] : s.diagrams) {
    if (id != d.id) r.errors.push_back("diagram keyed " + id + " has id " + d.id);
    auto sub = validate_control_diagram(d);
    r.errors.insert(r.errors.end(), sub.begin(), sub.end());
    for (const auto& x : d.alphabet) {
      auto [it, fresh] = kinds.emplace(x.id, x.kind);
      if (!fresh && it->second != x.kind) {
        r.errors.push_back("symbol " + x.id + " is individual in one diagram and general in another");
      }
    }
  }
  for (const auto& e : s.hierarchy.validate()) r.errors.push_back(e);
  for (const auto& [node, did] : s.mapping) {
    if (!s.hierarchy.contains(node)) r.errors.push_back("mapping names unknown hierarchy node " + node);
    if (!s.diagrams.contains(did)) r.errors.push_back("mapping names unknown diagram " + did);
  }

  for (const auto& e : s.schedule) {
    const std::string at = "schedule entry at tick " + std::to_string(e.tick) + ": ";
    if (e.tick < 0) r.errors.push_back(at + "negative tick");
    if (!kinds.contains(e.symbol)) {
      r.errors.push_back(at + "dangling symbol " + e.symbol);
      continue;
    }
    if (e.addressee != kBroadcast) {
      auto it = s.diagrams.find(e.addressee);
      if (it == s.diagrams.end()) {
        r.errors.push_back(at + "unknown addressee " + e.addressee);
      } else if (it->second.find_symbol(e.symbol) == nullptr) {
        r.errors.push_back(at + "symbol " + e.symbol + " is not in the alphabet of " + e.addressee);
      }
    }
  }

  std::set<std::string> group_ids;
  std::set<std::string> coupled_symbols;
  for (const auto& g : s.after_effect) {
    const std::string at = "group " + g.id + ": ";
    if (!group_ids.insert(g.id).second) r.errors.push_back(at + "duplicate group id");
    auto pit = s.diagrams.find(g.parent_arc.diagram);
    if (pit == s.diagrams.end()) {
      r.errors.push_back(at + "unknown parent diagram " + g.parent_arc.diagram);
      continue;
    }
    const P1Arc* parc = pit->second.find_p1(g.parent_arc.src, g.parent_arc.dst);
    if (parc == nullptr) {
      r.errors.push_back(at + "parent arc (" + g.parent_arc.src + "," + g.parent_arc.dst +
                         ") is not a P1 arc of " + g.parent_arc.diagram);
    } else if (kinds.contains(parc->symbol) && kinds[parc->symbol] != SymbolKind::General) {
      r.errors.push_back(at + "parent arc is not coupled (symbol " + parc->symbol + " is individual)");
    } else {
      coupled_symbols.insert(parc->symbol);
    }
    if (g.child_arcs.empty()) r.errors.push_back(at + "no child arcs");
    std::set<std::string> child_diagrams;
    for (const auto& c : g.child_arcs) {
      if (!child_diagrams.insert(c.diagram).second) {
        r.errors.push_back(at + "two child arcs in diagram " + c.diagram);
      }
      if (c.diagram == g.parent_arc.diagram) {
        r.errors.push_back(at + "child arc in the parent diagram");
      }
      auto cit = s.diagrams.find(c.diagram);
      if (cit == s.diagrams.end()) {
        r.errors.push_back(at + "unknown child diagram " + c.diagram);
        continue;
      }
      const P1Arc* carc = cit->second.find_p1(c.src, c.dst);
      if (carc == nullptr) {
        r.errors.push_back(at + "child arc (" + c.src + "," + c.dst + ") is not a P1 arc of " +
                           c.diagram);
      } else if (kinds.contains(carc->symbol) && kinds[carc->symbol] != SymbolKind::General) {
        r.errors.push_back(at + "child arc in " + c.diagram + " is not coupled");
      }
      if (!s.mapping.empty()) {
        const std::string pn = node_of(s, g.parent_arc.diagram);
        const std::string cn = node_of(s, c.diagram);
        if (pn.empty() || cn.empty() || !s.hierarchy.is_child_of(cn, pn)) {
          r.errors.push_back(at + c.diagram + " is not a hierarchy child of " +
                             g.parent_arc.diagram);
        }
      }
    }
    if (!g.policy.all() && g.policy.at_least > g.child_arcs.size()) {
      r.errors.push_back(at + "policy needs more child arcs than the group has");
    }
  }

  std::set<std::string> flagged;
  for (const auto& e : s.schedule) {
    auto it = kinds.find(e.symbol);
    if (it != kinds.end() && it->second == SymbolKind::General &&
        !coupled_symbols.contains(e.symbol) && flagged.insert(e.symbol).second) {
      r.warnings.push_back("general symbol " + e.symbol + " triggers no parent arc");
    }
  }
  return r;
}

// ---------------------------------------------------------------------------
// Simulation

namespace {

struct Pending {
  std::string dst;
  Tick arrive = 0;
  TransitionCause cause = TransitionCause::Symbol;
  std::string detail;
};

struct Runtime {
  std::string state;
  Tick since = 0;
  std::optional<Pending> pending;

  bool idle() const { return !pending.has_value(); }
};

class Simulator {
 public:
  Simulator(const Scenario& s, const SimulationOptions& opts) : s_(s), opts_(opts) {
    for (const auto& [id, d] : s.diagrams) {
      rt_[id] = Runtime{d.s0, 0, std::nullopt};
      out_.traces[id].push_back({0, d.s0, TransitionCause::Initial, ""});
      for (const auto& x : d.alphabet) kinds_[x.id] = x.kind;
    }
    fired_.resize(s.after_effect.size());
  }

  SimulationResult run(Tick horizon) {
    std::vector<const ScheduleEntry*> schedule;
    for (const auto& e : s_.schedule) schedule.push_back(&e);
    std::stable_sort(schedule.begin(), schedule.end(),
                     [](const auto* a, const auto* b) { return a->tick < b->tick; });
    out_.horizon = horizon;
    std::size_t next = 0;
    for (Tick t = 0; t <= horizon; ++t) {
      arrivals(t);
      received_.clear();
      while (next < schedule.size() && schedule[next]->tick == t) deliver(*schedule[next++], t);
      for (const auto& [d, flags] : received_) {
        if (flags.first && flags.second) {
          emit({t, EventKind::MixedInput, d, "", "", "", "", "individual and general input", false});
        }
      }
      upward(t);
      decay(t);
      out_.metric_trace.push_back({t, metrics_now()});
    }
    out_.metrics = evaluate_scenario(s_, out_.traces, out_.events);
    return std::move(out_);
  }

 private:
  const ControlDiagram& diagram(const std::string& id) const { return s_.diagrams.at(id); }

  void emit(Event e) {
    if (is_transition(e.kind)) {
      ++total_;
      if (e.coupled) ++coupled_;
    }
    if (e.kind == EventKind::Redundant || e.kind == EventKind::MixedInput) ++redundant_;
    if (e.kind == EventKind::Decay) ++omitted_;
    out_.events.push_back(std::move(e));
  }

  std::map<std::string, double> metrics_now() const {
    std::size_t done = 0;
    for (const auto& [id, r] : rt_) {
      if (r.state == diagram(id).s_star) ++done;
    }
    const double n = static_cast<double>(rt_.size());
    return {
        {"completeness", rt_.empty() ? 0.0 : static_cast<double>(done) / n},
        {"redundancy", static_cast<double>(redundant_)},
        {"omitted", static_cast<double>(omitted_)},
        {"complexness", total_ == 0 ? 0.0 : static_cast<double>(coupled_) / static_cast<double>(total_)},
    };
  }

  bool general(const std::string& symbol) const {
    auto it = kinds_.find(symbol);
    return it != kinds_.end() && it->second == SymbolKind::General;
  }

  void arrivals(Tick t) {
    for (auto& [id, r] : rt_) {
      if (!r.pending || r.pending->arrive != t) continue;
      r.state = r.pending->dst;
      r.since = t;
      out_.traces[id].push_back({t, r.state, r.pending->cause, r.pending->detail});
      r.pending.reset();
    }
  }

  void start(const std::string& d, const P1Arc& arc, Tick t, TransitionCause cause,
             std::string detail) {
    rt_[d].pending = Pending{arc.dst, t + arc.delta, cause, std::move(detail)};
  }

  // Count an arc firing toward every group listing it as a child arc, except
  // the group whose parent arc caused it.
  void note_child_fire(const std::string& d, const P1Arc& arc, const CoupledGroup* by) {
    for (std::size_t g = 0; g < s_.after_effect.size(); ++g) {
      const auto& group = s_.after_effect[g];
      if (&group == by) continue;
      for (std::size_t c = 0; c < group.child_arcs.size(); ++c) {
        const auto& ref = group.child_arcs[c];
        if (ref.diagram == d && ref.src == arc.src && ref.dst == arc.dst) fired_[g].insert(c);
      }
    }
  }

  void plain_fire(const std::string& d, const std::string& symbol, Tick t) {
    Runtime& r = rt_[d];
    if (!r.idle()) {
      emit({t, EventKind::Redundant, d, symbol, r.state, "", "", "transition in progress", false});
      return;
    }
    std::vector<const P1Arc*> enabled;
    for (const P1Arc* a : diagram(d).arcs_for(symbol)) {
      if (a->src == r.state) enabled.push_back(a);
    }
    if (enabled.empty()) {
      emit({t, EventKind::Redundant, d, symbol, r.state, "", "", "no enabled arc", false});
      return;
    }
    if (enabled.size() > 1) {
      throw Error(ErrorCode::AmbiguousArc,
                  "symbol " + symbol + " enables " + std::to_string(enabled.size()) +
                      " arcs from " + r.state + " in " + d + " at tick " + std::to_string(t),
                  {}, t);
    }
    const P1Arc& arc = *enabled.front();
    emit({t, EventKind::Fire, d, symbol, arc.src, arc.dst, "", "", general(symbol)});
    start(d, arc, t, TransitionCause::Symbol, symbol);
    note_child_fire(d, arc, nullptr);
  }

  void deliver(const ScheduleEntry& e, Tick t) {
    std::vector<std::string> receivers;
    if (e.addressee == kBroadcast) {
      for (const auto& [id, d] : s_.diagrams) {
        if (d.find_symbol(e.symbol)) receivers.push_back(id);
      }
    } else {
      receivers.push_back(e.addressee);
    }
    const bool is_general = general(e.symbol);
    for (const auto& r : receivers) {
      auto& flags = received_[r];
      (is_general ? flags.second : flags.first) = true;
    }
    if (!is_general) {
      for (const auto& r : receivers) plain_fire(r, e.symbol, t);
      return;
    }
    for (const auto& r : receivers) deliver_general(r, e.symbol, t);
  }

  void deliver_general(const std::string& d, const std::string& symbol, Tick t) {
    std::vector<const CoupledGroup*> candidates;
    for (const auto& g : s_.after_effect) {
      if (g.parent_arc.diagram != d) continue;
      const P1Arc* arc = diagram(d).find_p1(g.parent_arc.src, g.parent_arc.dst);
      if (arc != nullptr && arc->symbol == symbol) candidates.push_back(&g);
    }
    if (candidates.empty()) {
      plain_fire(d, symbol, t);
      return;
    }
    Runtime& parent = rt_[d];
    std::vector<const CoupledGroup*> enabled;
    if (parent.idle()) {
      for (const auto* g : candidates) {
        if (g->parent_arc.src == parent.state) enabled.push_back(g);
      }
    }
    if (enabled.size() > 1) {
      throw Error(ErrorCode::AmbiguousArc,
                  "symbol " + symbol + " enables groups " + enabled[0]->id + " and " +
                      enabled[1]->id + " at tick " + std::to_string(t),
                  {}, t);
    }
    if (enabled.empty()) {
      emit({t, EventKind::Redundant, d, symbol, parent.state, "", "",
            parent.idle() ? "parent not at arc source" : "transition in progress", false});
      return;
    }
    const CoupledGroup& g = *enabled.front();
    std::vector<std::string> unready;
    for (const auto& c : g.child_arcs) {
      const Runtime& cr = rt_[c.diagram];
      if (!cr.idle() || cr.state != c.src) unready.push_back(c.diagram);
    }
    if (!unready.empty() && !opts_.lenient_general) {
      std::string who;
      for (const auto& u : unready) who += (who.empty() ? "" : ",") + u;
      emit({t, EventKind::Redundant, d, symbol, parent.state, "", g.id,
            "children not ready: " + who, false});
      return;
    }
    const P1Arc& parc = *diagram(d).find_p1(g.parent_arc.src, g.parent_arc.dst);
    emit({t, EventKind::CoupledFire, d, symbol, parc.src, parc.dst, g.id, "", true});
    start(d, parc, t, TransitionCause::Symbol, symbol);
    note_child_fire(d, parc, &g);
    for (const auto& c : g.child_arcs) {
      if (std::find(unready.begin(), unready.end(), c.diagram) != unready.end()) {
        emit({t, EventKind::ChildSkipped, c.diagram, symbol, rt_[c.diagram].state, c.dst, g.id,
              "child not ready", false});
        continue;
      }
      const P1Arc& carc = *diagram(c.diagram).find_p1(c.src, c.dst);
      emit({t, EventKind::ChildFire, c.diagram, symbol, carc.src, carc.dst, g.id, "", true});
      start(c.diagram, carc, t, TransitionCause::Propagation, g.id);
      note_child_fire(c.diagram, carc, &g);
    }
  }

  void upward(Tick t) {
    bool changed = true;
    while (changed) {
      changed = false;
      for (std::size_t i = 0; i < s_.after_effect.size(); ++i) {
        const auto& g = s_.after_effect[i];
        const std::size_t need = g.policy.all() ? g.child_arcs.size() : g.policy.at_least;
        if (fired_[i].size() < need) continue;
        Runtime& parent = rt_[g.parent_arc.diagram];
        if (!parent.idle() || parent.state != g.parent_arc.src) continue;
        const P1Arc& arc = *diagram(g.parent_arc.diagram).find_p1(g.parent_arc.src, g.parent_arc.dst);
        std::string children;
        for (std::size_t c : fired_[i]) {
          children += (children.empty() ? "" : ",") + g.child_arcs[c].diagram;
        }
        emit({t, EventKind::UpwardFire, g.parent_arc.diagram, arc.symbol, arc.src, arc.dst, g.id,
              "child arcs fired: " + children, true});
        start(g.parent_arc.diagram, arc, t, TransitionCause::Propagation, g.id);
        fired_[i].clear();
        note_child_fire(g.parent_arc.diagram, arc, &g);
        changed = true;
      }
    }
  }

  void decay(Tick t) {
    for (auto& [id, r] : rt_) {
      if (!r.idle()) continue;
      const P2Arc* pick = nullptr;
      for (const auto& a : diagram(id).p2_arcs) {
        if (a.src != r.state || !a.decay || t - r.since < *a.decay) continue;
        if (pick != nullptr && *pick->decay == *a.decay) {
          throw Error(ErrorCode::AmbiguousArc,
                      "two decay arcs leave " + r.state + " in " + id + " at tick " +
                          std::to_string(t),
                      {}, t);
        }
        if (pick == nullptr || *a.decay < *pick->decay) pick = &a;
      }
      if (pick == nullptr) continue;
      emit({t, EventKind::Decay, id, "", pick->src, pick->dst, "", "", false});
      r.state = pick->dst;
      r.since = t;
      out_.traces[id].push_back({t, r.state, TransitionCause::Decay, ""});
    }
  }

  const Scenario& s_;
  SimulationOptions opts_;
  std::map<std::string, Runtime> rt_;
  std::map<std::string, SymbolKind> kinds_;
  std::vector<std::set<std::size_t>> fired_;
  // diagram -> (received individual, received general) this tick
  std::map<std::string, std::pair<bool, bool>> received_;
  std::size_t total_ = 0;
  std::size_t coupled_ = 0;
  std::size_t redundant_ = 0;
  std::size_t omitted_ = 0;
  SimulationResult out_;
};

}  // namespace

SimulationResult simulate(const Scenario& s, Tick horizon, const SimulationOptions& opts) {
  auto report = validate_scenario(s);
  if (!report.ok()) {
    throw Error(ErrorCode::MalformedScenario, "scenario " + s.id + " is malformed",
                report.errors);
  }
  if (horizon < 0) throw Error(ErrorCode::InvalidArgument, "horizon must be non-negative");
  for (const auto& e : s.schedule) {
    if (e.tick > horizon) {
      throw Error(ErrorCode::InvalidArgument,
                  "schedule entry at tick " + std::to_string(e.tick) + " is beyond the horizon");
    }
  }
  return Simulator(s, opts).run(horizon);
}

ScenarioMetrics evaluate_scenario(const Scenario& s,
                                  const std::map<std::string, StateTrace>& traces,
                                  const std::vector<Event>& events, Tick upto) {
  ScenarioMetrics m;
  std::size_t done = 0;
  for (const auto& [id, d] : s.diagrams) {
    auto it = traces.find(id);
    std::string final_state = d.s0;
    if (it != traces.end()) final_state = state_at(it->second, upto).value_or(d.s0);
    if (final_state == d.s_star) ++done;
  }
  if (!s.diagrams.empty()) {
    m.completeness = static_cast<double>(done) / static_cast<double>(s.diagrams.size());
  }
  for (const auto& e : events) {
    if (e.tick > upto) continue;
    if (e.kind == EventKind::Redundant || e.kind == EventKind::MixedInput) ++m.redundancy_count;
    if (e.kind == EventKind::Decay) ++m.omitted_possibilities;
    if (is_transition(e.kind)) {
      ++m.total_transitions;
      if (e.coupled) ++m.coupled_transitions;
    }
  }
  if (m.total_transitions > 0) {
    m.complexness = static_cast<double>(m.coupled_transitions) /
                    static_cast<double>(m.total_transitions);
  }
  return m;
}

// ---------------------------------------------------------------------------
// Partial diagrams

ValidationReport validate_partial_diagram(const PartialDiagram& p) {
  ValidationReport r;
  for (std::size_t i = 1; i < p.supports.size(); ++i) {
    if (p.supports[i].deadline < p.supports[i - 1].deadline) {
      r.push_back("partial diagram " + p.id + ": deadlines decrease at support " +
                  std::to_string(i));
    }
  }
  if (p.budget.max_ticks < 0 || p.budget.max_resources < 0) {
    r.push_back("partial diagram " + p.id + ": negative budget");
  }
  return r;
}

PartialDiagram initial_final_pair(const Scenario& s, Tick horizon) {
  PartialDiagram p;
  p.id = s.id + ":initial-final";
  for (const auto& [id, d] : s.diagrams) p.supports.push_back({id, d.s0, 0});
  for (const auto& [id, d] : s.diagrams) p.supports.push_back({id, d.s_star, horizon});
  return p;
}

PartialCheck check_partial_diagram(const Trajectory& tr, const PartialDiagram& partial,
                                   const std::map<std::string, ControlDiagram>& diagrams) {
  for (const auto& sup : partial.supports) {
    auto d = diagrams.find(sup.diagram);
    if (d == diagrams.end() || !tr.traces.contains(sup.diagram)) {
      throw Error(ErrorCode::UnknownSupportState, "unknown support diagram " + sup.diagram);
    }
    if (d->second.find_state(sup.state) == nullptr) {
      throw Error(ErrorCode::UnknownSupportState,
                  "unknown support state " + sup.diagram + "/" + sup.state);
    }
    if (sup.deadline > tr.horizon) {
      throw Error(ErrorCode::InvalidArgument,
                  "trace ends at " + std::to_string(tr.horizon) + " before deadline " +
                      std::to_string(sup.deadline));
    }
  }

  PartialCheck out;
  Tick cursor = 0;
  for (std::size_t i = 0; i < partial.supports.size(); ++i) {
    const auto& sup = partial.supports[i];
    const StateTrace& trace = tr.traces.at(sup.diagram);
    std::optional<Tick> met;
    for (std::size_t j = 0; j < trace.size() && !met; ++j) {
      if (trace[j].state != sup.state) continue;
      const Tick from = std::max(trace[j].tick, cursor);
      const bool still_there = j + 1 == trace.size() || from < trace[j + 1].tick;
      if (still_there && from <= sup.deadline) met = from;
    }
    if (!met) {
      out.confirmed = false;
      out.first_miss = i;
      out.actual_state = state_at(trace, sup.deadline);
      break;
    }
    out.met_at.push_back(*met);
    cursor = *met;
  }
  if (tr.horizon > partial.budget.max_ticks ||
      tr.resources_spent > partial.budget.max_resources) {
    out.budget_exceeded = true;
    out.confirmed = false;
  }
  return out;
}

}  // namespace hierion::scenario
