#pragma once

// Predicate scales, hierarchical classifiers, object distributions over
// canonical states, arc counters and retrospective comparison.

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "hierion/model.hpp"

namespace hierion::classify {

struct Formula;

struct TrendIs {
  std::string parameter;
  TrendClass cls = TrendClass::Constant;

  bool operator==(const TrendIs&) const = default;
};

// lo <= x <= hi, with either end optionally open.
struct ValueIn {
  std::string parameter;
  double lo = 0.0;
  double hi = 0.0;
  bool lo_open = false;
  bool hi_open = false;

  bool contains(double x) const;
  bool operator==(const ValueIn&) const = default;
};

struct AllOf {
  std::vector<Formula> terms;
  bool operator==(const AllOf&) const;
};

struct AnyOf {
  std::vector<Formula> terms;
  bool operator==(const AnyOf&) const;
};

struct Negation {
  std::shared_ptr<const Formula> term;
  bool operator==(const Negation& other) const;
};

struct Formula {
  std::variant<TrendIs, ValueIn, AllOf, AnyOf, Negation> node;

  static Formula trend_is(std::string parameter, TrendClass cls);
  static Formula value_in(std::string parameter, double lo, double hi,
                          bool lo_open = false, bool hi_open = false);
  static Formula all_of(std::vector<Formula> terms);
  static Formula any_of(std::vector<Formula> terms);
  static Formula negate(Formula term);

  bool operator==(const Formula&) const = default;
};

// What is known about one object on one window: the latest value and the
// trend class of each parameter.
struct Evaluation {
  std::map<std::string, double> values;
  std::map<std::string, TrendClass> trends;
};

// Throws MissingData when an atom needs a parameter the evaluation lacks.
bool evaluate(const Formula& f, const Evaluation& e);
void collect_parameters(const Formula& f, std::set<std::string>& out);
bool uses_trend(const Formula& f, const std::string& parameter);

struct Predicate {
  std::string id;
  Formula formula;

  bool operator==(const Predicate&) const = default;
};

// Predicates K1 < ... < Kn, each inducing the state at the same position.
struct Scale {
  std::vector<Predicate> predicates;
  std::vector<std::string> state_ids;

  bool operator==(const Scale&) const = default;
};

struct Classifier {
  std::string id;
  Scale root;
  // predicate id -> scale of sub-predicates refining it
  std::map<std::string, Scale> continuations;
  TimeInterval interval;
  double tolerance = 0.0;

  std::set<std::string> parameters() const;
  // States of predicates with no continuation, in depth-first scale order.
  std::vector<std::string> leaf_states() const;

  bool operator==(const Classifier&) const = default;
};

// Structural checks: matching list sizes, unique predicate and state ids,
// continuation keys naming predicates, tree shape, and (when a hierarchy is
// given) parameter ids resolving in it.
ValidationReport validate_classifier(const Classifier& classifier,
                                     const ParameterHierarchy* hierarchy = nullptr);

struct ScaleBreach {
  std::size_t probe = 0;
  std::vector<std::string> predicates;

  bool operator==(const ScaleBreach&) const = default;
};

struct ScaleReport {
  std::vector<ScaleBreach> breaches;
  std::vector<std::size_t> uncovered;

  bool disjoint() const { return breaches.empty(); }
  bool full_coverage() const { return uncovered.empty(); }
};

// Probe-based disjointness and coverage check. Probes must be non-empty.
ScaleReport validate_scale(const Scale& scale, const std::vector<Evaluation>& probes);

// Latest value and trend class of every parameter the classifier uses, taken
// from the object's samples inside `window`.
Evaluation evaluate_object(const TrackedObject& object, const Classifier& classifier,
                           TimeInterval window);

// Deepest state on the unique chain of satisfied predicates. Every predicate
// of the classifier is evaluated, so a sub-predicate holding while its parent
// does not is reported as DisjointnessViolated as well.
std::string classify_evaluation(const Evaluation& e, const Classifier& classifier);
std::string classify_object(const TrackedObject& object, const Classifier& classifier,
                            TimeInterval window);

// Every leaf state appears as a key, possibly with no objects.
Distribution distribute(const std::vector<TrackedObject>& objects,
                        const Classifier& classifier, TimeInterval window);

struct CounterUpdate {
  ArcCounters counters;
  std::vector<Move> moves;
  // Moves along no arc of P or P0.
  std::vector<Move> anomalies;
};

CounterUpdate update_counters(const CanonicalDiagram& diagram, const Distribution& prev,
                              const Distribution& next, ArcCounters counters, Tick tick);

struct Snapshot {
  Tick tick = 0;
  Distribution distribution;
};

struct StateDeviation {
  std::string state;
  std::size_t required = 0;
  std::size_t actual = 0;
  // actual - required
  long long deviation = 0;
};

struct TickComparison {
  Tick scheduled_tick = 0;
  Tick actual_tick = 0;
  std::vector<StateDeviation> states;
  // Objects whose observed state differs from the scheduled one:
  // (object, required state, observed state).
  std::vector<Move> misplaced;
  bool matches = true;
};

struct DivergenceReport {
  std::vector<TickComparison> ticks;
  bool confirmed = true;
  std::optional<Tick> first_violation;
};

// Snapshots are matched to scheduled ticks by nearest tick, ties toward the
// earlier snapshot. Throws EmptySchedule or InvalidArgument (no snapshots).
DivergenceReport compare_with_canonical(const std::vector<Snapshot>& actual,
                                        const CanonicalDiagram& diagram);

// One-level classification rules: cell(row, column) is a formula on the row
// parameter; a missing cell is true.
struct ClassificationMatrix {
  std::string id;
  std::vector<std::string> rows;
  std::vector<std::string> columns;
  std::map<std::pair<std::string, std::string>, Formula> cells;

  bool operator==(const ClassificationMatrix&) const = default;
};

// Column j becomes predicate AND_i cell(i, j) inducing state j, conjoined in
// row order.
Scale compile_matrix(const ClassificationMatrix& matrix);

}  // namespace hierion::classify
