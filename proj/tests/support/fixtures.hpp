#pragma once

// Builders shared by the unit tests and the acceptance suite.

#include <algorithm>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "hierion/model.hpp"
#include "hierion/rules.hpp"
#include "hierion/scenario.hpp"

namespace fixtures {

using namespace hierion;

// States <prefix>1 .. <prefix>n with ranks 0..n-1 and unit devArcs i -> i+1.
inline CanonicalDiagram chain(const std::string& id, int n, const std::string& prefix,
                              int level = 1, Tick delta = 1) {
  CanonicalDiagram d;
  d.id = id;
  for (int i = 1; i <= n; ++i) d.states.push_back({prefix + std::to_string(i), i - 1, level, {}});
  for (int i = 1; i < n; ++i) {
    d.dev_arcs.push_back({prefix + std::to_string(i), prefix + std::to_string(i + 1), delta});
  }
  d.s0 = prefix + "1";
  d.s_star = prefix + std::to_string(n);
  return d;
}

inline Series series(std::vector<double> values, Tick start = 0) {
  Series s;
  for (std::size_t i = 0; i < values.size(); ++i) s.push_back({start + static_cast<Tick>(i), values[i]});
  return s;
}

// Control chain S<p>1 -> ... -> S<p>n; arc i is fired by symbols[i].
inline scenario::ControlDiagram control_chain(const std::string& id, const std::string& prefix,
                                              const std::vector<std::string>& symbols,
                                              const std::vector<std::string>& general = {}) {
  scenario::ControlDiagram d;
  d.id = id;
  const int n = static_cast<int>(symbols.size()) + 1;
  for (int i = 1; i <= n; ++i) d.states.push_back({prefix + std::to_string(i), i - 1, 0, {}});
  d.s0 = prefix + "1";
  d.s_star = prefix + std::to_string(n);
  for (std::size_t i = 0; i < symbols.size(); ++i) {
    const bool is_general =
        std::find(general.begin(), general.end(), symbols[i]) != general.end();
    bool declared = false;
    for (const auto& x : d.alphabet) declared = declared || x.id == symbols[i];
    if (!declared) {
      d.alphabet.push_back({symbols[i], is_general ? scenario::SymbolKind::General
                                                   : scenario::SymbolKind::Individual});
    }
    d.p1_arcs.push_back({prefix + std::to_string(i + 1), prefix + std::to_string(i + 2), symbols[i], 1});
  }
  return d;
}

// Two six-state children under a two-state parent. The general symbol g is
// coupled to the child arcs S13->S14 and S23->S24. Children reach S13/S23 at
// tick 2; g arrives early at tick 1 and again at tick 3.
inline scenario::Scenario fig9_scenario() {
  scenario::Scenario s;
  s.id = "fig9";
  s.diagrams["w1"] = control_chain("w1", "S1", {"a1", "a2", "g", "a4", "a5"}, {"g"});
  s.diagrams["w2"] = control_chain("w2", "S2", {"b1", "b2", "g", "b4", "b5"}, {"g"});
  scenario::ControlDiagram parent = control_chain("w0", "S", {"g"}, {"g"});
  s.diagrams["w0"] = parent;
  s.hierarchy = ParameterHierarchy({{"top", 0, false, {"left", "right"}},
                                    {"left", 1, false, {}},
                                    {"right", 1, false, {}}});
  s.mapping = {{"top", "w0"}, {"left", "w1"}, {"right", "w2"}};
  s.after_effect.push_back({"G", {"w0", "S1", "S2"}, {{"w1", "S13", "S14"}, {"w2", "S23", "S24"}}, {}});
  s.schedule = {{0, "a1", "w1"}, {0, "b1", "w2"}, {1, "a2", "w1"},
                {1, "b2", "w2"}, {1, "g", "w0"},  {3, "g", "w0"}};
  return s;
}

// Flat scenario of `n` chains d0..d{n-1} with private individual symbols and
// occasional decay arcs. With `coupled` (n >= 3) the first arcs of d0, d1 and
// d2 share the general symbol g and form group G with d0 as parent.
inline scenario::Scenario random_scenario(std::mt19937_64& rng, int n, Tick horizon, bool coupled) {
  using namespace scenario;
  Scenario s;
  s.id = "random";
  std::uniform_int_distribution<int> length(2, 5);
  std::uniform_int_distribution<Tick> decay(1, 4);
  for (int k = 0; k < n; ++k) {
    const std::string id = "d" + std::to_string(k);
    const int len = length(rng);
    std::vector<std::string> symbols;
    for (int i = 1; i < len; ++i) symbols.push_back(id + "_s" + std::to_string(i));
    const bool in_group = coupled && k < 3;
    if (in_group) symbols[0] = "g";
    ControlDiagram d = control_chain(id, id + "_", symbols, in_group ? std::vector<std::string>{"g"}
                                                                      : std::vector<std::string>{});
    for (std::size_t i = 1; i + 1 < d.states.size(); ++i) {
      if (rng() % 3 == 0) d.p2_arcs.push_back({d.states[i].id, d.states[i - 1].id, decay(rng)});
    }
    for (auto& a : d.p1_arcs) a.delta = 1 + static_cast<Tick>(rng() % 2);
    s.diagrams[id] = d;
  }
  if (coupled && n >= 3) {
    CoupledGroup g;
    g.id = "G";
    g.parent_arc = {"d0", "d0_1", "d0_2"};
    g.child_arcs = {{"d1", "d1_1", "d1_2"}, {"d2", "d2_1", "d2_2"}};
    if (rng() % 2) g.policy.at_least = 1;
    s.after_effect.push_back(g);
  }
  std::uniform_int_distribution<Tick> when(0, horizon);
  const int entries = static_cast<int>(rng() % static_cast<unsigned>(3 * n + 1));
  for (int e = 0; e < entries; ++e) {
    const auto& d = s.diagrams.at("d" + std::to_string(rng() % static_cast<unsigned>(n)));
    const auto& sym = d.alphabet[rng() % d.alphabet.size()].id;
    s.schedule.push_back({when(rng), sym, d.id});
  }
  std::stable_sort(s.schedule.begin(), s.schedule.end(),
                   [](const auto& a, const auto& b) { return a.tick < b.tick; });
  return s;
}

struct ForecastInstance {
  scenario::SystemState initial;
  std::vector<scenario::ElementaryRule> rules;
  scenario::PartialDiagram partial;
  scenario::DecayModel decay;
};

// Up to two subsystems with up to six states each, up to ten rules between
// random state pairs and up to three support states with non-decreasing
// deadlines. Decay arcs step one state down.
inline ForecastInstance random_forecast_instance(std::mt19937_64& rng, bool with_decay) {
  using namespace scenario;
  auto uniform = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  ForecastInstance f;
  const int n_diagrams = uniform(1, 2);
  std::vector<int> sizes;
  for (int k = 0; k < n_diagrams; ++k) {
    const std::string d = "w" + std::to_string(k);
    sizes.push_back(uniform(2, 6));
    f.initial.states[d] = d + "_" + std::to_string(uniform(1, 2));
    if (with_decay) {
      for (int i = 2; i <= sizes.back(); ++i) {
        if (uniform(0, 2) == 0) {
          f.decay.arcs[d].push_back({d + "_" + std::to_string(i), d + "_" + std::to_string(i - 1),
                                     static_cast<Tick>(uniform(1, 2))});
        }
      }
    }
  }
  auto state = [&](int k, int i) { return "w" + std::to_string(k) + "_" + std::to_string(i); };
  const int n_rules = uniform(1, 10);
  for (int r = 0; r < n_rules; ++r) {
    const int k = uniform(0, n_diagrams - 1);
    const int from = uniform(1, sizes[k]);
    int to = uniform(1, sizes[k] - 1);
    if (to >= from) ++to;
    ElementaryRule rule;
    rule.id = "r" + std::to_string(r);
    rule.subsystem = "w" + std::to_string(k);
    rule.from = state(k, from);
    rule.to = state(k, to);
    if (sizes[k] > 2 && uniform(0, 2) == 0) {
      int z = uniform(1, sizes[k]);
      if (z != from && z != to) rule.forbidden = state(k, z);
    }
    rule.action = "act" + std::to_string(r);
    rule.resources = uniform(0, 3);
    rule.duration = uniform(1, 3);
    f.rules.push_back(rule);
  }
  f.initial.pool = uniform(2, 12);
  f.partial.id = "target";
  Tick deadline = 0;
  const int n_supports = uniform(1, 3);
  for (int i = 0; i < n_supports; ++i) {
    const int k = uniform(0, n_diagrams - 1);
    deadline += uniform(0, 4);
    f.partial.supports.push_back({"w" + std::to_string(k), state(k, uniform(1, sizes[k])), deadline});
  }
  if (uniform(0, 1) == 0) f.partial.budget.max_resources = uniform(1, 8);
  if (uniform(0, 3) == 0) f.partial.budget.max_ticks = uniform(2, 10);
  return f;
}

}  // namespace fixtures
