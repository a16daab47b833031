#pragma once

// Controllable development: hypothesis automata driven by input symbols,
// scenarios binding them into a hierarchy with a timed symbol schedule and an
// after-effect scheme, the tick-step simulator and the four scenario metrics.

#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hierion/model.hpp"

namespace hierion::scenario {

enum class SymbolKind { Individual, General };

std::string_view to_string(SymbolKind k);

struct Symbol {
  std::string id;
  SymbolKind kind = SymbolKind::Individual;

  bool operator==(const Symbol&) const = default;
};

// Transition initiated by an input symbol.
struct P1Arc {
  std::string src;
  std::string dst;
  std::string symbol;
  Tick delta = 1;

  bool operator==(const P1Arc&) const = default;
};

// Backstep taken after `decay` idle ticks; nullopt never fires.
struct P2Arc {
  std::string src;
  std::string dst;
  std::optional<Tick> decay;

  bool operator==(const P2Arc&) const = default;
};

struct ControlDiagram {
  std::string id;
  std::vector<State> states;
  std::string s0;
  std::string s_star;
  std::vector<Symbol> alphabet;
  std::vector<P1Arc> p1_arcs;
  std::vector<P2Arc> p2_arcs;

  const State* find_state(std::string_view id) const;
  const Symbol* find_symbol(std::string_view id) const;
  // The arcs a symbol triggers (the symbol/arc correspondence).
  std::vector<const P1Arc*> arcs_for(std::string_view symbol) const;
  const P1Arc* find_p1(std::string_view src, std::string_view dst) const;

  bool operator==(const ControlDiagram&) const = default;
};

// Unique ids, resolvable arcs and symbols, positive deltas and thresholds,
// rank-decreasing P2 arcs, P1 and P2 disjoint, and a terminal final state.
ValidationReport validate_control_diagram(const ControlDiagram& d);

struct ArcRef {
  std::string diagram;
  std::string src;
  std::string dst;

  auto operator<=>(const ArcRef&) const = default;
};

// Upward after-effect condition: all child arcs, or at least k of them.
struct UpwardPolicy {
  std::size_t at_least = 0;  // 0 means all

  bool all() const { return at_least == 0; }
  bool operator==(const UpwardPolicy&) const = default;
};

struct CoupledGroup {
  std::string id;
  ArcRef parent_arc;
  std::vector<ArcRef> child_arcs;
  UpwardPolicy policy;

  bool operator==(const CoupledGroup&) const = default;
};

inline constexpr std::string_view kBroadcast = "*";

struct ScheduleEntry {
  Tick tick = 0;
  std::string symbol;
  // Diagram id or kBroadcast.
  std::string addressee;

  bool operator==(const ScheduleEntry&) const = default;
};

struct Scenario {
  std::string id;
  std::map<std::string, ControlDiagram> diagrams;
  ParameterHierarchy hierarchy;
  // hierarchy node -> diagram id
  std::map<std::string, std::string> mapping;
  std::vector<ScheduleEntry> schedule;
  std::vector<CoupledGroup> after_effect;

  bool operator==(const Scenario&) const = default;
};

struct ScenarioReport {
  std::vector<std::string> errors;
  std::vector<std::string> warnings;

  bool ok() const { return errors.empty(); }
};

// Child arcs must belong to hierarchy children of the parent's node when a
// mapping is present; flat scenarios (empty mapping) skip that check.
ScenarioReport validate_scenario(const Scenario& s);

enum class EventKind {
  Fire,         // individual or uncoupled general symbol took a P1 arc
  CoupledFire,  // general symbol took a parent arc
  ChildFire,    // child arc taken as a consequence of a parent arc
  UpwardFire,   // parent arc taken because its child arcs fired
  Decay,        // P2 backstep
  Redundant,    // delivery with no enabled arc
  MixedInput,   // individual and general symbols reached one subsystem in one tick
  ChildSkipped, // lenient mode: child not ready while its parent arc fired
};

std::string_view to_string(EventKind k);
std::optional<EventKind> parse_event_kind(std::string_view name);

struct Event {
  Tick tick = 0;
  EventKind kind = EventKind::Fire;
  std::string diagram;
  std::string symbol;
  std::string src;
  std::string dst;
  std::string group;
  std::string detail;
  // Transition on a coupled (general-symbol) arc.
  bool coupled = false;

  bool operator==(const Event&) const = default;
};

bool is_transition(EventKind k);

struct ScenarioMetrics {
  double completeness = 0.0;
  std::size_t redundancy_count = 0;
  std::size_t omitted_possibilities = 0;
  double complexness = 0.0;
  std::size_t coupled_transitions = 0;
  std::size_t total_transitions = 0;

  bool operator==(const ScenarioMetrics&) const = default;
};

struct SimulationOptions {
  // Fire a parent arc even when some children are not at their arc source.
  bool lenient_general = false;
};

struct SimulationResult {
  Tick horizon = 0;
  std::map<std::string, StateTrace> traces;
  std::vector<Event> events;
  ScenarioMetrics metrics;
  MetricTrace metric_trace;

  bool operator==(const SimulationResult&) const = default;
};

// Per tick: arrivals of in-flight transitions, then scheduled deliveries,
// then upward after-effects, then decay. Throws MalformedScenario,
// AmbiguousArc (with tick) or InvalidArgument (horizon before a schedule
// entry).
SimulationResult simulate(const Scenario& s, Tick horizon, const SimulationOptions& opts = {});

// Metrics from the trace and event log, counting events up to `upto`.
ScenarioMetrics evaluate_scenario(const Scenario& s,
                                  const std::map<std::string, StateTrace>& traces,
                                  const std::vector<Event>& events,
                                  Tick upto = std::numeric_limits<Tick>::max());

struct SupportState {
  std::string diagram;
  std::string state;
  Tick deadline = 0;

  bool operator==(const SupportState&) const = default;
};

struct Budget {
  Tick max_ticks = std::numeric_limits<Tick>::max();
  double max_resources = std::numeric_limits<double>::infinity();

  bool operator==(const Budget&) const = default;
};

struct PartialDiagram {
  std::string id;
  std::vector<SupportState> supports;
  Budget budget;

  bool operator==(const PartialDiagram&) const = default;
};

ValidationReport validate_partial_diagram(const PartialDiagram& p);

// Initial states at tick 0 followed by final states at `horizon`, for every
// diagram of the scenario.
PartialDiagram initial_final_pair(const Scenario& s, Tick horizon);

struct Trajectory {
  std::map<std::string, StateTrace> traces;
  Tick horizon = 0;
  double resources_spent = 0.0;
};

struct PartialCheck {
  bool confirmed = true;
  std::optional<std::size_t> first_miss;
  // State of the missed support's diagram at its deadline.
  std::optional<std::string> actual_state;
  bool budget_exceeded = false;
  // Tick each support was met at, in order, up to the first miss.
  std::vector<Tick> met_at;
};

// Supports must be occupied in list order, each at or before its deadline;
// throws UnknownSupportState for ids outside `diagrams` or `trajectory`.
PartialCheck check_partial_diagram(const Trajectory& trajectory, const PartialDiagram& partial,
                                   const std::map<std::string, ControlDiagram>& diagrams);

}  // namespace hierion::scenario
