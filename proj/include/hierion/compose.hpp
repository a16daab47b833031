#pragma once

// Structural algebra over canonical diagrams: sequential and parallel
// composition, generalization over subsets of the Cartesian product of child
// states, and the consistency (timed reachability) check.

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hierion/model.hpp"

namespace hierion::compose {

struct Timed {
  CanonicalDiagram diagram;
  TimeInterval interval;
};

// Children must satisfy end_i < start_{i+1} (IntervalOrderViolation), be
// valid and have pairwise distinct state ids (InvalidChild). Child i+1's
// ranks are shifted above child i's; a bridging devArc joins child i's final
// state to child i+1's initial state with delta = start_{i+1} - end_i.
// Target schedules are merged in the composite's local time, which starts at
// the first child's interval start.
CanonicalDiagram compose_sequential(const std::vector<Timed>& children);

// Co-resident diagrams on one interval. The fragment's state is the tuple of
// child states.
class ParallelFragment {
 public:
  ParallelFragment(std::vector<CanonicalDiagram> children, TimeInterval interval)
      : children_(std::move(children)), interval_(interval) {}

  const std::vector<CanonicalDiagram>& children() const { return children_; }
  TimeInterval interval() const { return interval_; }

  std::size_t joint_state_count() const;
  std::vector<std::vector<std::string>> joint_states() const;
  // Tuple of child states at `tick` given one trace per child.
  std::vector<std::string> state_at(const std::vector<StateTrace>& traces, Tick tick) const;

 private:
  std::vector<CanonicalDiagram> children_;
  TimeInterval interval_;
};

// Throws IntervalMismatch unless every interval is identical.
ParallelFragment compose_parallel(const std::vector<Timed>& children);

using StateTuple = std::vector<std::string>;

struct StateBlock {
  std::string id;
  std::vector<StateTuple> members;

  bool operator==(const StateBlock&) const = default;
};

struct BlockArc {
  std::string src;
  std::string dst;
  Tick delta = 1;
};

class Generalization {
 public:
  const CanonicalDiagram& parent() const { return parent_; }
  const std::vector<StateBlock>& blocks() const { return blocks_; }
  // Block covering the tuple, if any.
  std::optional<std::string> membership(const StateTuple& tuple) const;

 private:
  friend Generalization generalize(const std::vector<CanonicalDiagram>&,
                                   const std::vector<StateBlock>&,
                                   const std::vector<BlockArc>&, bool, std::string);
  CanonicalDiagram parent_;
  std::vector<StateBlock> blocks_;
  std::map<StateTuple, std::string> index_;
};

// Blocks are ranked by list position. Arcs between blocks become devArcs
// when they increase rank and backArcs when they decrease it.
// Errors: UnknownStateId (tuple or arc names something undeclared),
// OverlappingBlocks, OrderInconsistent (a lower block holds a tuple that
// Pareto-dominates a tuple of a higher block in child ranks),
// UncoveredRequiredTuple (only when require_total).
Generalization generalize(const std::vector<CanonicalDiagram>& children,
                          const std::vector<StateBlock>& blocks,
                          const std::vector<BlockArc>& arcs, bool require_total = false,
                          std::string parent_id = "generalization");

// Arcs of the synchronous product: every child takes one devArc at once.
// Delta is the slowest child's delta.
std::vector<BlockArc> synchronous_product_arcs(
    const std::vector<CanonicalDiagram>& children,
    const std::map<StateTuple, std::string>& block_of);

// Root block occupied at each tick where some child trace changes; ticks
// where the tuple is uncovered yield nullopt. This is the output of a
// hierarchical network built by generalization.
std::vector<std::pair<Tick, std::optional<std::string>>> block_trajectory(
    const Generalization& g, const std::vector<StateTrace>& child_traces);

struct Requirement {
  // State id, or "diagram/state" to disambiguate inside a parallel fragment.
  std::string state;
  Tick deadline = 0;
};

struct ConsistencyResult {
  bool consistent = true;
  // First unmet requirement.
  std::optional<std::size_t> witness_index;
  std::string witness_state;
  // Earliest arrival at the witness; nullopt when unreachable.
  std::optional<Tick> earliest_arrival;
};

// Timed reachability along devArcs. Every child starts in its initial state
// at tick 0 and may wait in any state. Requirement i is met at
// max(t_{i-1}, t_prev_same_child + shortest delta-path) and must not exceed
// its deadline. Throws UnknownStateId.
ConsistencyResult check_consistency(const ParallelFragment& fragment,
                                    const std::vector<Requirement>& requirements);
ConsistencyResult check_consistency(const CanonicalDiagram& diagram,
                                    const std::vector<Requirement>& requirements);

}  // namespace hierion::compose
