#include "hierion/classify.hpp"

#include <algorithm>
#include <cstdlib>
#include <functional>

#include "hierion/error.hpp"
#include "hierion/trend.hpp"

namespace hierion::classify {

bool ValueIn::contains(double x) const {
  const bool above = lo_open ? x > lo : x >= lo;
  const bool below = hi_open ? x < hi : x <= hi;
  return above && below;
}

bool AllOf::operator==(const AllOf& other) const { return terms == other.terms; }
bool AnyOf::operator==(const AnyOf& other) const { return terms == other.terms; }

bool Negation::operator==(const Negation& other) const {
  if (!term || !other.term) return term == other.term;
  return *term == *other.term;
}

Formula Formula::trend_is(std::string parameter, TrendClass cls) {
  return Formula{TrendIs{std::move(parameter), cls}};
}

Formula Formula::value_in(std::string parameter, double lo, double hi, bool lo_open,
                          bool hi_open) {
  return Formula{ValueIn{std::move(parameter), lo, hi, lo_open, hi_open}};
}

Formula Formula::all_of(std::vector<Formula> terms) {
  return Formula{AllOf{std::move(terms)}};
}

Formula Formula::any_of(std::vector<Formula> terms) {
  return Formula{AnyOf{std::move(terms)}};
}

Formula Formula::negate(Formula term) {
  return Formula{Negation{std::make_shared<const Formula>(std::move(term))}};
}

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

}  // namespace

bool evaluate(const Formula& f, const Evaluation& e) {
  return std::visit(
      overloaded{
          [&](const TrendIs& a) {
            auto it = e.trends.find(a.parameter);
            if (it == e.trends.end()) {
              throw Error(ErrorCode::MissingData,
                          "no trend estimate for parameter " + a.parameter);
            }
            return it->second == a.cls;
          },
          [&](const ValueIn& a) {
            auto it = e.values.find(a.parameter);
            if (it == e.values.end()) {
              throw Error(ErrorCode::MissingData,
                          "no value for parameter " + a.parameter);
            }
            return a.contains(it->second);
          },
          [&](const AllOf& a) {
            bool all = true;
            // No short-circuit: missing data must surface regardless of order.
            for (const auto& t : a.terms) all = evaluate(t, e) && all;
            return all;
          },
          [&](const AnyOf& a) {
            bool any = false;
            for (const auto& t : a.terms) any = evaluate(t, e) || any;
            return any;
          },
          [&](const Negation& a) { return !evaluate(*a.term, e); },
      },
      f.node);
}

void collect_parameters(const Formula& f, std::set<std::string>& out) {
  std::visit(overloaded{
                 [&](const TrendIs& a) { out.insert(a.parameter); },
                 [&](const ValueIn& a) { out.insert(a.parameter); },
                 [&](const AllOf& a) {
                   for (const auto& t : a.terms) collect_parameters(t, out);
                 },
                 [&](const AnyOf& a) {
                   for (const auto& t : a.terms) collect_parameters(t, out);
                 },
                 [&](const Negation& a) { collect_parameters(*a.term, out); },
             },
             f.node);
}

bool uses_trend(const Formula& f, const std::string& parameter) {
  return std::visit(
      overloaded{
          [&](const TrendIs& a) { return a.parameter == parameter; },
          [&](const ValueIn&) { return false; },
          [&](const AllOf& a) {
            return std::any_of(a.terms.begin(), a.terms.end(),
                               [&](const Formula& t) { return uses_trend(t, parameter); });
          },
          [&](const AnyOf& a) {
            return std::any_of(a.terms.begin(), a.terms.end(),
                               [&](const Formula& t) { return uses_trend(t, parameter); });
          },
          [&](const Negation& a) { return uses_trend(*a.term, parameter); },
      },
      f.node);
}

// ---------------------------------------------------------------------------
// Classifier structure

std::set<std::string> Classifier::parameters() const {
  std::set<std::string> out;
  for (const auto& p : root.predicates) collect_parameters(p.formula, out);
  for (const auto& [_, scale] : continuations) {
    for (const auto& p : scale.predicates) collect_parameters(p.formula, out);
  }
  return out;
}

std::vector<std::string> Classifier::leaf_states() const {
  std::vector<std::string> out;
  std::set<std::string> visiting;
  std::function<void(const Scale&)> walk = [&](const Scale& s) {
    for (std::size_t i = 0; i < s.predicates.size() && i < s.state_ids.size(); ++i) {
      auto it = continuations.find(s.predicates[i].id);
      if (it != continuations.end() && visiting.insert(it->first).second) {
        walk(it->second);
      } else if (it == continuations.end()) {
        out.push_back(s.state_ids[i]);
      }
    }
  };
  walk(root);
  return out;
}

ValidationReport validate_classifier(const Classifier& c,
                                     const ParameterHierarchy* hierarchy) {
  ValidationReport report;
  std::set<std::string> predicate_ids;
  std::set<std::string> state_ids;
  std::map<std::string, int> key_uses;

  auto check_scale = [&](const Scale& s, const std::string& where) {
    if (s.predicates.size() != s.state_ids.size()) {
      report.push_back(where + ": predicate and state lists differ in length");
    }
    if (s.predicates.empty()) report.push_back(where + ": empty scale");
    for (const auto& p : s.predicates) {
      if (!predicate_ids.insert(p.id).second) {
        report.push_back("duplicate predicate id: " + p.id);
      }
    }
    for (const auto& sid : s.state_ids) {
      if (!state_ids.insert(sid).second) {
        report.push_back("duplicate state id in classifier: " + sid);
      }
    }
  };
  check_scale(c.root, "root scale");
  for (const auto& [key, scale] : c.continuations) {
    check_scale(scale, "continuation of " + key);
  }

  // Each continuation must hang off exactly one reachable predicate.
  std::set<std::string> reached;
  std::function<void(const Scale&, int)> walk = [&](const Scale& s, int depth) {
    if (depth > static_cast<int>(c.continuations.size()) + 1) return;
    for (const auto& p : s.predicates) {
      auto it = c.continuations.find(p.id);
      if (it == c.continuations.end()) continue;
      if (!reached.insert(p.id).second) {
        report.push_back("continuation graph is not a tree at " + p.id);
        continue;
      }
      walk(it->second, depth + 1);
    }
  };
  walk(c.root, 0);
  for (const auto& [key, _] : c.continuations) {
    if (!predicate_ids.contains(key)) {
      report.push_back("continuation refines unknown predicate: " + key);
    } else if (!reached.contains(key)) {
      report.push_back("continuation unreachable from root: " + key);
    }
  }

  if (hierarchy != nullptr) {
    for (const auto& p : c.parameters()) {
      if (!hierarchy->contains(p)) {
        report.push_back("classifier references unknown parameter: " + p);
      }
    }
  }
  if (!c.interval.valid()) report.push_back("classifier interval has end < start");
  if (c.tolerance < 0) report.push_back("classifier tolerance is negative");
  return report;
}

ScaleReport validate_scale(const Scale& scale, const std::vector<Evaluation>& probes) {
  if (probes.empty()) {
    throw Error(ErrorCode::InvalidArgument, "validate_scale needs at least one probe");
  }
  ScaleReport report;
  for (std::size_t i = 0; i < probes.size(); ++i) {
    std::vector<std::string> hits;
    for (const auto& p : scale.predicates) {
      if (evaluate(p.formula, probes[i])) hits.push_back(p.id);
    }
    if (hits.empty()) report.uncovered.push_back(i);
    if (hits.size() >= 2) report.breaches.push_back({i, std::move(hits)});
  }
  return report;
}

// ---------------------------------------------------------------------------
// Classification

Evaluation evaluate_object(const TrackedObject& object, const Classifier& classifier,
                           TimeInterval window) {
  Evaluation e;
  for (const auto& param : classifier.parameters()) {
    auto it = object.series.find(param);
    if (it == object.series.end()) continue;
    Series slice;
    for (const auto& p : it->second) {
      if (window.contains(p.tick)) slice.push_back(p);
    }
    if (slice.empty()) continue;
    e.values[param] = slice.back().value;
    if (slice.size() >= 2) {
      e.trends[param] = trend::classify_series(slice, classifier.tolerance).cls;
    }
  }
  return e;
}

std::string classify_evaluation(const Evaluation& e, const Classifier& c) {
  // Evaluate every predicate; remember which hold.
  std::map<std::string, bool> truth;
  std::function<void(const Scale&, const std::string*)> walk =
      [&](const Scale& s, const std::string* parent) {
        std::vector<std::string> hits;
        for (const auto& p : s.predicates) {
          const bool holds = evaluate(p.formula, e);
          truth[p.id] = holds;
          if (holds) hits.push_back(p.id);
          if (holds && parent != nullptr && !truth[*parent]) {
            throw Error(ErrorCode::DisjointnessViolated,
                        "sub-predicate " + p.id + " holds but its parent " +
                            *parent + " does not");
          }
        }
        if (hits.size() >= 2) {
          throw Error(ErrorCode::DisjointnessViolated,
                      "predicates " + hits[0] + " and " + hits[1] +
                          " hold simultaneously",
                      hits);
        }
        for (const auto& p : s.predicates) {
          auto it = c.continuations.find(p.id);
          if (it != c.continuations.end()) walk(it->second, &p.id);
        }
      };
  walk(c.root, nullptr);

  const Scale* scale = &c.root;
  std::string state;
  std::string matched;
  while (scale != nullptr) {
    const Scale* next = nullptr;
    bool found = false;
    for (std::size_t i = 0; i < scale->predicates.size(); ++i) {
      if (!truth[scale->predicates[i].id]) continue;
      found = true;
      matched = scale->predicates[i].id;
      state = scale->state_ids.at(i);
      auto it = c.continuations.find(matched);
      if (it != c.continuations.end()) next = &it->second;
      break;
    }
    if (!found) {
      throw Error(ErrorCode::NoPredicateSatisfied,
                  matched.empty() ? "no root predicate holds"
                                  : "no refinement of " + matched + " holds");
    }
    scale = next;
  }
  return state;
}

std::string classify_object(const TrackedObject& object, const Classifier& classifier,
                            TimeInterval window) {
  return classify_evaluation(evaluate_object(object, classifier, window), classifier);
}

Distribution distribute(const std::vector<TrackedObject>& objects,
                        const Classifier& classifier, TimeInterval window) {
  Distribution d;
  for (const auto& s : classifier.leaf_states()) d.assignment[s];
  for (const auto& o : objects) {
    try {
      d.assignment[classify_object(o, classifier, window)].insert(o.id);
    } catch (const Error& err) {
      throw err.annotated("object " + o.id);
    }
  }
  return d;
}

CounterUpdate update_counters(const CanonicalDiagram& diagram, const Distribution& prev,
                              const Distribution& next, ArcCounters counters, Tick tick) {
  CounterUpdate out;
  out.moves = distribution_delta(prev, next);
  for (const auto& m : out.moves) {
    if (diagram.has_dev_arc(m.src, m.dst) || diagram.has_back_arc(m.src, m.dst)) {
      ++counters.per_arc[{m.src, m.dst}];
    } else {
      out.anomalies.push_back(m);
    }
  }
  std::set<std::string> states;
  for (const auto& s : diagram.states) states.insert(s.id);
  for (const auto& [sid, _] : next.assignment) states.insert(sid);
  for (const auto& sid : states) {
    auto& series = counters.per_state[sid];
    const std::size_t n = next.count(sid);
    if (!series.empty() && series.back().first == tick) {
      series.back().second = n;
    } else {
      series.emplace_back(tick, n);
    }
  }
  out.counters = std::move(counters);
  return out;
}

DivergenceReport compare_with_canonical(const std::vector<Snapshot>& actual,
                                        const CanonicalDiagram& diagram) {
  if (diagram.target_schedule.empty()) {
    throw Error(ErrorCode::EmptySchedule,
                "diagram " + diagram.id + " has no target schedule");
  }
  if (actual.empty()) {
    throw Error(ErrorCode::InvalidArgument, "no observed snapshots to compare");
  }
  DivergenceReport report;
  for (const auto& target : diagram.target_schedule) {
    const Snapshot* best = nullptr;
    for (const auto& snap : actual) {
      if (best == nullptr) {
        best = &snap;
        continue;
      }
      const Tick d_new = std::llabs(snap.tick - target.tick);
      const Tick d_best = std::llabs(best->tick - target.tick);
      if (d_new < d_best || (d_new == d_best && snap.tick < best->tick)) best = &snap;
    }

    TickComparison row;
    row.scheduled_tick = target.tick;
    row.actual_tick = best->tick;
    std::set<std::string> states;
    for (const auto& s : diagram.states) states.insert(s.id);
    for (const auto& [sid, _] : target.distribution.assignment) states.insert(sid);
    for (const auto& [sid, _] : best->distribution.assignment) states.insert(sid);
    for (const auto& sid : states) {
      StateDeviation dev;
      dev.state = sid;
      dev.required = target.distribution.count(sid);
      dev.actual = best->distribution.count(sid);
      dev.deviation = static_cast<long long>(dev.actual) -
                      static_cast<long long>(dev.required);
      if (dev.deviation != 0) row.matches = false;
      row.states.push_back(std::move(dev));
    }
    const auto required_at = target.distribution.locate();
    const auto observed_at = best->distribution.locate();
    for (const auto& [obj, req] : required_at) {
      auto it = observed_at.find(obj);
      if (it != observed_at.end() && it->second != req) {
        row.misplaced.push_back({obj, req, it->second});
      }
    }
    if (!row.matches && report.confirmed) {
      report.confirmed = false;
      report.first_violation = target.tick;
    }
    report.ticks.push_back(std::move(row));
  }
  return report;
}

Scale compile_matrix(const ClassificationMatrix& m) {
  Scale s;
  for (const auto& col : m.columns) {
    std::vector<Formula> terms;
    for (const auto& row : m.rows) {
      auto it = m.cells.find({row, col});
      if (it != m.cells.end()) terms.push_back(it->second);
    }
    s.predicates.push_back({col, Formula::all_of(std::move(terms))});
    s.state_ids.push_back(col);
  }
  return s;
}

}  // namespace hierion::classify
