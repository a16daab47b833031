#pragma once

// Elementary planning rules, goal trees and forecast search over rule
// sequences toward a partial diagram.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hierion/model.hpp"
#include "hierion/scenario.hpp"

namespace hierion::scenario {

// IF subsystem is at `from` THEN apply `action`, reaching `to` after
// `duration` ticks at a cost of `resources`, ELSE fail; never admit a backstep
// into `forbidden` (empty = no forbidden state).
struct ElementaryRule {
  std::string id;
  std::string subsystem;
  std::string from;
  std::string to;
  std::string forbidden;
  // Opaque control-action id.
  std::string action;
  double resources = 0.0;
  Tick duration = 1;

  bool operator==(const ElementaryRule&) const = default;
};

ValidationReport validate_rule(const ElementaryRule& r);

struct SystemState {
  std::map<std::string, std::string> states;
  double pool = 0.0;
  Tick tick = 0;

  bool operator==(const SystemState&) const = default;
};

// P2 arcs per diagram; the backsteps that can occur while a rule executes.
struct DecayModel {
  std::map<std::string, std::vector<P2Arc>> arcs;

  static DecayModel from(const std::map<std::string, ControlDiagram>& diagrams);
};

enum class RuleFailure { WrongSourceState, InsufficientResources, ForbiddenBackstep };

std::string_view to_string(RuleFailure f);

struct RuleOutcome {
  SystemState state;
  std::optional<RuleFailure> failure;
  // Resources deducted; sunk on ForbiddenBackstep, zero on the other failures.
  double spent = 0.0;
  // Tick the rule completed or aborted.
  Tick finished = 0;
  // Entries for the subsystem after the rule started.
  StateTrace path;

  bool ok() const { return !failure; }
};

// The decay clock starts when the rule starts. Backsteps that fall inside
// [tick, tick + duration) are taken in order; entering the forbidden state
// aborts there. Otherwise the subsystem reaches `to` at tick + duration.
RuleOutcome apply_rule(const ElementaryRule& rule, const SystemState& state,
                       const DecayModel& decay = {});

struct GoalNode {
  std::string id;
  std::vector<GoalNode> children;
  // Present exactly on terminal nodes.
  std::optional<ElementaryRule> rule;

  bool operator==(const GoalNode&) const = default;
};

struct GoalTree {
  std::string id;
  GoalNode root;

  bool operator==(const GoalTree&) const = default;
};

ValidationReport validate_goal_tree(const GoalTree& t);

struct AppliedRule {
  std::string node;
  std::string rule;
  Tick start = 0;
  Tick finished = 0;
  double spent = 0.0;
  std::optional<RuleFailure> failure;
};

struct GoalReport {
  bool success = false;
  std::vector<AppliedRule> applied;
  std::vector<std::string> skipped;
  std::optional<std::string> first_failure;
  std::map<std::string, bool> node_success;
  SystemState final_state;
  double spent = 0.0;
  std::map<std::string, StateTrace> traces;
};

// Depth-first, left to right. A failing terminal stops the remaining children
// of its parent; ancestors still run their other children. Throws
// InvalidArgument on a malformed tree.
GoalReport run_goal_tree(const GoalTree& tree, const SystemState& initial,
                         const DecayModel& decay = {});

enum class CostOrder { TicksThenResources, ResourcesThenTicks };

struct ForecastOptions {
  CostOrder order = CostOrder::TicksThenResources;
  DecayModel decay;
};

struct PlanStep {
  std::string rule;
  std::string subsystem;
  std::string from;
  std::string to;
  Tick start = 0;
  Tick end = 0;
  double cumulative_resources = 0.0;

  bool operator==(const PlanStep&) const = default;
};

struct SupportLink {
  std::size_t from = 0;
  std::size_t to = 0;
  Tick delta = 0;

  bool operator==(const SupportLink&) const = default;
};

struct ForecastResult {
  bool feasible = false;
  std::vector<PlanStep> plan;
  Tick ticks = 0;
  double resources = 0.0;
  // Tick each support state is reached along the plan.
  std::vector<Tick> support_ticks;
  // Predicted development diagram: support chain with realized durations.
  std::vector<SupportLink> chain;
  std::map<std::string, StateTrace> predicted;
  // Infeasible: number of leading supports some plan can meet, and the state
  // vectors reached by the plans meeting that many.
  std::size_t prefix = 0;
  std::vector<std::map<std::string, std::string>> frontier;
};

// Uniform-cost search over rule sequences. A support is met at the earliest
// tick its diagram occupies its state, not before the previous support and not
// after its deadline. Rules that would abort are not applied.
ForecastResult forecast(const SystemState& initial, const std::vector<ElementaryRule>& rules,
                        const PartialDiagram& partial, const ForecastOptions& opts = {});

}  // namespace hierion::scenario
