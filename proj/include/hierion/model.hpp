#pragma once

// Domain types shared by every module: model time, the parameter hierarchy,
// tracked objects, ordered states, canonical development diagrams, object
// distributions, arc counters and traces. All of them are plain values.

#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace hierion {

// Abstract model time unit.
using Tick = std::int64_t;

struct TimeInterval {
  Tick start = 0;
  Tick end = 0;

  bool valid() const { return start <= end; }
  bool contains(Tick t) const { return start <= t && t <= end; }
  Tick length() const { return end - start; }

  auto operator<=>(const TimeInterval&) const = default;
};

enum class TrendClass {
  Increasing,
  Decreasing,
  Constant,
  SinglePeak,
  SingleTrough,
  Cyclic,
  Bounded,
  Unclassified,
};

inline constexpr TrendClass kAllTrendClasses[] = {
    TrendClass::Increasing, TrendClass::Decreasing,   TrendClass::Constant,
    TrendClass::SinglePeak, TrendClass::SingleTrough, TrendClass::Cyclic,
    TrendClass::Bounded,    TrendClass::Unclassified,
};

std::string_view to_string(TrendClass c);
std::optional<TrendClass> parse_trend_class(std::string_view name);

struct ParameterNode {
  std::string id;
  int level = 0;
  bool polymorphic = false;
  std::vector<std::string> children;

  bool operator==(const ParameterNode&) const = default;
};

// Tree of parameters (and, by the same structure, of subsystems).
class ParameterHierarchy {
 public:
  ParameterHierarchy() = default;
  explicit ParameterHierarchy(std::vector<ParameterNode> nodes)
      : nodes_(std::move(nodes)) {}

  const std::vector<ParameterNode>& nodes() const { return nodes_; }
  const ParameterNode* find(std::string_view id) const;
  bool contains(std::string_view id) const { return find(id) != nullptr; }
  bool has_level(int level) const;
  // True when `child` is listed among the children of `parent`.
  bool is_child_of(std::string_view child, std::string_view parent) const;

  // Unique ids, resolvable children, root level 0, child = parent + 1, no
  // cycles and no node with two parents.
  std::vector<std::string> validate() const;

  bool operator==(const ParameterHierarchy&) const = default;

 private:
  std::vector<ParameterNode> nodes_;
};

struct SeriesPoint {
  Tick tick = 0;
  double value = 0.0;

  bool operator==(const SeriesPoint&) const = default;
};

using Series = std::vector<SeriesPoint>;

struct TrackedObject {
  std::string id;
  int level = 0;
  std::map<std::string, Series> series;

  bool operator==(const TrackedObject&) const = default;
};

using TrajectorySignature = std::set<std::pair<std::string, TrendClass>>;

struct State {
  std::string id;
  int rank = 0;
  int level = 0;
  TrajectorySignature signature;

  bool operator==(const State&) const = default;
};

struct Arc {
  std::string src;
  std::string dst;
  Tick delta = 1;

  bool operator==(const Arc&) const = default;
};

// Object ids per state id. An object occupies exactly one state; the
// invariant is checked by locate() and validate_diagram, not by construction.
struct Distribution {
  std::map<std::string, std::set<std::string>> assignment;

  std::size_t count(const std::string& state) const;
  std::size_t object_count() const;
  std::set<std::string> objects() const;
  bool disjoint() const;
  // object id -> state id; throws DistributionNotDisjoint.
  std::map<std::string, std::string> locate() const;

  bool operator==(const Distribution&) const = default;
};

// Same object placement, ignoring states that hold no objects.
bool same_occupancy(const Distribution& a, const Distribution& b);

struct ScheduledDistribution {
  Tick tick = 0;
  Distribution distribution;

  bool operator==(const ScheduledDistribution&) const = default;
};

struct CanonicalDiagram {
  std::string id;
  // Classifier whose leaf states place objects on this diagram (optional).
  std::string classifier;
  std::vector<State> states;
  std::vector<Arc> dev_arcs;
  std::vector<Arc> back_arcs;
  std::string s0;
  std::string s_star;
  std::vector<ScheduledDistribution> target_schedule;

  const State* find_state(std::string_view id) const;
  bool has_dev_arc(std::string_view src, std::string_view dst) const;
  bool has_back_arc(std::string_view src, std::string_view dst) const;

  bool operator==(const CanonicalDiagram&) const = default;
};

using ValidationReport = std::vector<std::string>;

ValidationReport validate_diagram(const CanonicalDiagram& diagram);

// Ranks replaced by their dense position in the rank order (0, 1, ...).
CanonicalDiagram normalize_ranks(CanonicalDiagram diagram);

struct Move {
  std::string object;
  std::string src;
  std::string dst;

  auto operator<=>(const Move&) const = default;
};

// Objects whose state differs between the two snapshots, sorted by object id.
// Throws ObjectUniverseMismatch when the object sets differ.
std::vector<Move> distribution_delta(const Distribution& prev,
                                     const Distribution& next);

Distribution apply_moves(Distribution dist, const std::vector<Move>& moves);

struct ArcCounters {
  std::map<std::pair<std::string, std::string>, std::uint64_t> per_arc;
  std::map<std::string, std::vector<std::pair<Tick, std::size_t>>> per_state;

  std::uint64_t eta(const std::string& src, const std::string& dst) const;
  // N_i at `tick`, or nullopt if nothing was recorded for that tick.
  std::optional<std::size_t> occupancy(const std::string& state, Tick tick) const;

  bool operator==(const ArcCounters&) const = default;
};

enum class TransitionCause { Initial, Symbol, Decay, Rule, Propagation };

std::string_view to_string(TransitionCause c);
std::optional<TransitionCause> parse_transition_cause(std::string_view name);

struct TraceEntry {
  Tick tick = 0;
  std::string state;
  TransitionCause cause = TransitionCause::Initial;
  // Symbol, rule or group id that caused the entry; empty for Initial/Decay.
  std::string detail;

  bool operator==(const TraceEntry&) const = default;
};

using StateTrace = std::vector<TraceEntry>;

// State occupied at `tick` according to the trace (last entry at or before).
std::optional<std::string> state_at(const StateTrace& trace, Tick tick);

struct MetricSample {
  Tick tick = 0;
  std::map<std::string, double> metrics;

  bool operator==(const MetricSample&) const = default;
};

using MetricTrace = std::vector<MetricSample>;

}  // namespace hierion
