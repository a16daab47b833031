#include "hierion/rules.hpp"

#include <cmath>
#include <functional>
#include <queue>
#include <set>
#include <tuple>

#include "hierion/error.hpp"

namespace hierion::scenario {

ValidationReport validate_rule(const ElementaryRule& r) {
  ValidationReport out;
  const std::string at = "rule " + r.id + ": ";
  if (r.subsystem.empty()) out.push_back(at + "no subsystem");
  if (r.from == r.to) out.push_back(at + "source and target coincide");
  if (!r.forbidden.empty() && (r.forbidden == r.from || r.forbidden == r.to)) {
    out.push_back(at + "forbidden state equals the source or target");
  }
  if (r.duration < 1) out.push_back(at + "duration must be at least 1");
  if (!(r.resources >= 0.0) || !std::isfinite(r.resources)) {
    out.push_back(at + "resources must be finite and non-negative");
  }
  return out;
}

DecayModel DecayModel::from(const std::map<std::string, ControlDiagram>& diagrams) {
  DecayModel m;
  for (const auto& [id, d] : diagrams) {
    for (const auto& a : d.p2_arcs) {
      if (a.decay) m.arcs[id].push_back(a);
    }
  }
  return m;
}

std::string_view to_string(RuleFailure f) {
  switch (f) {
    case RuleFailure::WrongSourceState: return "WrongSourceState";
    case RuleFailure::InsufficientResources: return "InsufficientResources";
    case RuleFailure::ForbiddenBackstep: return "ForbiddenBackstep";
  }
  return "WrongSourceState";
}

RuleOutcome apply_rule(const ElementaryRule& rule, const SystemState& state,
                       const DecayModel& decay) {
  RuleOutcome out;
  out.state = state;
  out.finished = state.tick;
  auto it = state.states.find(rule.subsystem);
  if (it == state.states.end() || it->second != rule.from) {
    out.failure = RuleFailure::WrongSourceState;
    return out;
  }
  if (state.pool < rule.resources) {
    out.failure = RuleFailure::InsufficientResources;
    return out;
  }
  out.spent = rule.resources;
  out.state.pool -= rule.resources;

  const Tick end = state.tick + rule.duration;
  std::string current = rule.from;
  Tick clock = state.tick;
  auto arcs = decay.arcs.find(rule.subsystem);
  while (arcs != decay.arcs.end()) {
    const P2Arc* next = nullptr;
    for (const auto& a : arcs->second) {
      if (a.src == current && a.decay && (next == nullptr || *a.decay < *next->decay)) next = &a;
    }
    if (next == nullptr || clock + *next->decay >= end) break;
    clock += *next->decay;
    current = next->dst;
    out.path.push_back({clock, current, TransitionCause::Decay, rule.id});
    if (!rule.forbidden.empty() && current == rule.forbidden) {
      out.failure = RuleFailure::ForbiddenBackstep;
      out.state.states[rule.subsystem] = current;
      out.state.tick = clock;
      out.finished = clock;
      return out;
    }
  }
  out.path.push_back({end, rule.to, TransitionCause::Rule, rule.id});
  out.state.states[rule.subsystem] = rule.to;
  out.state.tick = end;
  out.finished = end;
  return out;
}

ValidationReport validate_goal_tree(const GoalTree& t) {
  ValidationReport out;
  std::set<std::string> ids;
  std::function<void(const GoalNode&)> walk = [&](const GoalNode& n) {
    const std::string at = "goal tree " + t.id + ", node " + n.id + ": ";
    if (!ids.insert(n.id).second) out.push_back(at + "duplicate node id");
    if (n.children.empty() && !n.rule) out.push_back(at + "terminal node without a rule");
    if (!n.children.empty() && n.rule) out.push_back(at + "internal node carries a rule");
    if (n.rule) {
      for (const auto& e : validate_rule(*n.rule)) out.push_back(at + e);
    }
    for (const auto& c : n.children) walk(c);
  };
  walk(t.root);
  return out;
}

namespace {

void collect_ids(const GoalNode& n, std::vector<std::string>& out) {
  out.push_back(n.id);
  for (const auto& c : n.children) collect_ids(c, out);
}

class GoalRunner {
 public:
  GoalRunner(const SystemState& initial, const DecayModel& decay) : decay_(decay) {
    report_.final_state = initial;
    for (const auto& [d, s] : initial.states) {
      report_.traces[d].push_back({initial.tick, s, TransitionCause::Initial, ""});
    }
  }

  bool run(const GoalNode& n) {
    if (n.rule) return run_terminal(n);
    bool ok = true;
    for (std::size_t i = 0; i < n.children.size(); ++i) {
      const GoalNode& child = n.children[i];
      if (run(child)) continue;
      ok = false;
      if (child.rule) {
        for (std::size_t j = i + 1; j < n.children.size(); ++j) {
          collect_ids(n.children[j], report_.skipped);
        }
        break;
      }
    }
    report_.node_success[n.id] = ok;
    return ok;
  }

  GoalReport finish(bool ok) {
    report_.success = ok;
    return std::move(report_);
  }

 private:
  bool run_terminal(const GoalNode& n) {
    const ElementaryRule& rule = *n.rule;
    const Tick start = report_.final_state.tick;
    RuleOutcome o = apply_rule(rule, report_.final_state, decay_);
    report_.applied.push_back({n.id, rule.id, start, o.finished, o.spent, o.failure});
    report_.spent += o.spent;
    report_.final_state = o.state;
    auto& trace = report_.traces[rule.subsystem];
    trace.insert(trace.end(), o.path.begin(), o.path.end());
    if (o.failure && !report_.first_failure) report_.first_failure = n.id;
    report_.node_success[n.id] = o.ok();
    return o.ok();
  }

  const DecayModel& decay_;
  GoalReport report_;
};

}  // namespace

GoalReport run_goal_tree(const GoalTree& tree, const SystemState& initial,
                         const DecayModel& decay) {
  auto problems = validate_goal_tree(tree);
  if (!problems.empty()) {
    throw Error(ErrorCode::InvalidArgument, "goal tree " + tree.id + " is malformed", problems);
  }
  GoalRunner runner(initial, decay);
  const bool ok = runner.run(tree.root);
  return runner.finish(ok);
}

// ---------------------------------------------------------------------------
// Forecast

namespace {

using StateVector = std::map<std::string, std::string>;

struct SearchNode {
  StateVector states;
  std::size_t met = 0;
  Tick elapsed = 0;
  double spent = 0.0;
  std::vector<Tick> met_at;
  std::ptrdiff_t parent = -1;
  std::optional<PlanStep> step;
  StateTrace path;
};

// Advance through the supports satisfied by `states` at absolute tick `t`.
void advance(const PartialDiagram& p, const StateVector& states, Tick t, std::size_t& met,
             std::vector<Tick>& met_at) {
  while (met < p.supports.size()) {
    const auto& s = p.supports[met];
    auto it = states.find(s.diagram);
    if (it == states.end() || it->second != s.state || t > s.deadline) return;
    met_at.push_back(t);
    ++met;
  }
}

bool dead(const PartialDiagram& p, std::size_t met, Tick now) {
  return met < p.supports.size() && p.supports[met].deadline < now;
}

}  // namespace

ForecastResult forecast(const SystemState& initial, const std::vector<ElementaryRule>& rules,
                        const PartialDiagram& partial, const ForecastOptions& opts) {
  std::vector<SearchNode> nodes;
  using Priority = std::tuple<double, double, std::size_t>;
  std::priority_queue<Priority, std::vector<Priority>, std::greater<>> open;
  std::set<std::tuple<StateVector, std::size_t, Tick, double>> closed;

  auto priority = [&](const SearchNode& n, std::size_t index) {
    const double ticks = static_cast<double>(n.elapsed);
    return opts.order == CostOrder::TicksThenResources ? Priority{ticks, n.spent, index}
                                                       : Priority{n.spent, ticks, index};
  };

  ForecastResult out;
  std::set<StateVector> frontier;
  auto note_prefix = [&](const SearchNode& n) {
    if (n.met > out.prefix) {
      out.prefix = n.met;
      frontier.clear();
    }
    if (n.met == out.prefix) frontier.insert(n.states);
  };

  {
    SearchNode root;
    root.states = initial.states;
    advance(partial, root.states, initial.tick, root.met, root.met_at);
    note_prefix(root);
    if (!dead(partial, root.met, initial.tick)) {
      nodes.push_back(std::move(root));
      open.push(priority(nodes.back(), 0));
    }
  }

  std::optional<std::size_t> goal;
  while (!open.empty()) {
    const std::size_t index = std::get<2>(open.top());
    open.pop();
    {
      const SearchNode& n = nodes[index];
      if (!closed.insert({n.states, n.met, n.elapsed, n.spent}).second) continue;
      if (n.met == partial.supports.size()) {
        goal = index;
        break;
      }
    }
    for (const auto& rule : rules) {
      const SearchNode& n = nodes[index];
      auto it = n.states.find(rule.subsystem);
      if (it == n.states.end() || it->second != rule.from) continue;
      const double pool = initial.pool - n.spent;
      if (pool < rule.resources || n.spent + rule.resources > partial.budget.max_resources) continue;
      if (n.elapsed > partial.budget.max_ticks - rule.duration) continue;
      const Tick now = initial.tick + n.elapsed;
      RuleOutcome o = apply_rule(rule, SystemState{n.states, pool, now}, opts.decay);
      if (!o.ok()) continue;

      SearchNode child;
      child.states = n.states;
      child.met = n.met;
      child.met_at = n.met_at;
      for (const auto& e : o.path) {
        child.states[rule.subsystem] = e.state;
        advance(partial, child.states, e.tick, child.met, child.met_at);
      }
      child.elapsed = n.elapsed + rule.duration;
      child.spent = n.spent + o.spent;
      child.parent = static_cast<std::ptrdiff_t>(index);
      child.step = PlanStep{rule.id, rule.subsystem, rule.from, rule.to,
                            now,     o.finished,     child.spent};
      child.path = std::move(o.path);
      note_prefix(child);
      if (dead(partial, child.met, o.finished)) continue;
      nodes.push_back(std::move(child));
      open.push(priority(nodes.back(), nodes.size() - 1));
    }
  }

  if (!goal) {
    out.frontier.assign(frontier.begin(), frontier.end());
    return out;
  }

  const SearchNode& g = nodes[*goal];
  out.feasible = true;
  out.prefix = partial.supports.size();
  out.ticks = g.elapsed;
  out.resources = g.spent;
  out.support_ticks = g.met_at;
  for (std::size_t i = 1; i < g.met_at.size(); ++i) {
    out.chain.push_back({i - 1, i, g.met_at[i] - g.met_at[i - 1]});
  }
  std::vector<const SearchNode*> lineage;
  for (std::ptrdiff_t i = static_cast<std::ptrdiff_t>(*goal); i >= 0; i = nodes[i].parent) {
    lineage.push_back(&nodes[i]);
  }
  for (const auto& [d, s] : initial.states) {
    out.predicted[d].push_back({initial.tick, s, TransitionCause::Initial, ""});
  }
  for (auto it = lineage.rbegin(); it != lineage.rend(); ++it) {
    if (!(*it)->step) continue;
    out.plan.push_back(*(*it)->step);
    auto& trace = out.predicted[(*it)->step->subsystem];
    trace.insert(trace.end(), (*it)->path.begin(), (*it)->path.end());
  }
  out.frontier.push_back(g.states);
  return out;
}

}  // namespace hierion::scenario
