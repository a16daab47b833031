#include "hierion/model.hpp"

#include <algorithm>
#include <functional>

#include "hierion/error.hpp"

namespace hierion {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ObjectUniverseMismatch: return "ObjectUniverseMismatch";
    case ErrorCode::DistributionNotDisjoint: return "DistributionNotDisjoint";
    case ErrorCode::TooShortSeries: return "TooShortSeries";
    case ErrorCode::NonMonotoneTicks: return "NonMonotoneTicks";
    case ErrorCode::BreakpointOutOfRange: return "BreakpointOutOfRange";
    case ErrorCode::NoPredicateSatisfied: return "NoPredicateSatisfied";
    case ErrorCode::DisjointnessViolated: return "DisjointnessViolated";
    case ErrorCode::MissingData: return "MissingData";
    case ErrorCode::EmptySchedule: return "EmptySchedule";
    case ErrorCode::IntervalOrderViolation: return "IntervalOrderViolation";
    case ErrorCode::InvalidChild: return "InvalidChild";
    case ErrorCode::IntervalMismatch: return "IntervalMismatch";
    case ErrorCode::OverlappingBlocks: return "OverlappingBlocks";
    case ErrorCode::UncoveredRequiredTuple: return "UncoveredRequiredTuple";
    case ErrorCode::OrderInconsistent: return "OrderInconsistent";
    case ErrorCode::UnknownStateId: return "UnknownStateId";
    case ErrorCode::MalformedScenario: return "MalformedScenario";
    case ErrorCode::AmbiguousArc: return "AmbiguousArc";
    case ErrorCode::UnknownSupportState: return "UnknownSupportState";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::DanglingReference: return "DanglingReference";
    case ErrorCode::ValidationFailed: return "ValidationFailed";
    case ErrorCode::UnreadableInput: return "UnreadableInput";
    case ErrorCode::MissingReport: return "MissingReport";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

std::string_view to_string(TrendClass c) {
  switch (c) {
    case TrendClass::Increasing: return "Increasing";
    case TrendClass::Decreasing: return "Decreasing";
    case TrendClass::Constant: return "Constant";
    case TrendClass::SinglePeak: return "SinglePeak";
    case TrendClass::SingleTrough: return "SingleTrough";
    case TrendClass::Cyclic: return "Cyclic";
    case TrendClass::Bounded: return "Bounded";
    case TrendClass::Unclassified: return "Unclassified";
  }
  return "Unclassified";
}

std::optional<TrendClass> parse_trend_class(std::string_view name) {
  for (TrendClass c : kAllTrendClasses) {
    if (to_string(c) == name) return c;
  }
  return std::nullopt;
}

std::string_view to_string(TransitionCause c) {
  switch (c) {
    case TransitionCause::Initial: return "initial";
    case TransitionCause::Symbol: return "symbol";
    case TransitionCause::Decay: return "decay";
    case TransitionCause::Rule: return "rule";
    case TransitionCause::Propagation: return "propagation";
  }
  return "initial";
}

std::optional<TransitionCause> parse_transition_cause(std::string_view name) {
  for (auto c : {TransitionCause::Initial, TransitionCause::Symbol,
                 TransitionCause::Decay, TransitionCause::Rule,
                 TransitionCause::Propagation}) {
    if (to_string(c) == name) return c;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// ParameterHierarchy

const ParameterNode* ParameterHierarchy::find(std::string_view id) const {
  auto it = std::find_if(nodes_.begin(), nodes_.end(),
                         [&](const ParameterNode& n) { return n.id == id; });
  return it == nodes_.end() ? nullptr : &*it;
}

bool ParameterHierarchy::has_level(int level) const {
  return std::any_of(nodes_.begin(), nodes_.end(),
                     [&](const ParameterNode& n) { return n.level == level; });
}

bool ParameterHierarchy::is_child_of(std::string_view child,
                                     std::string_view parent) const {
  const ParameterNode* p = find(parent);
  if (p == nullptr) return false;
  return std::find(p->children.begin(), p->children.end(), child) !=
         p->children.end();
}

std::vector<std::string> ParameterHierarchy::validate() const {
  std::vector<std::string> out;
  std::map<std::string, const ParameterNode*> by_id;
  for (const auto& n : nodes_) {
    if (!by_id.emplace(n.id, &n).second) {
      out.push_back("duplicate hierarchy node id: " + n.id);
    }
  }
  std::map<std::string, std::string> parent_of;
  for (const auto& n : nodes_) {
    for (const auto& c : n.children) {
      auto it = by_id.find(c);
      if (it == by_id.end()) {
        out.push_back("hierarchy node " + n.id + " lists unknown child " + c);
        continue;
      }
      if (!parent_of.emplace(c, n.id).second) {
        out.push_back("hierarchy node " + c + " has more than one parent");
      }
      if (it->second->level != n.level + 1) {
        out.push_back("hierarchy level mismatch: " + c + " should be level " +
                      std::to_string(n.level + 1));
      }
    }
  }
  for (const auto& n : nodes_) {
    if (!parent_of.contains(n.id) && n.level != 0) {
      out.push_back("hierarchy root " + n.id + " must have level 0");
    }
  }
  // Cycle check: walking up from every node must terminate.
  for (const auto& n : nodes_) {
    std::set<std::string> seen{n.id};
    std::string cur = n.id;
    while (parent_of.contains(cur)) {
      cur = parent_of.at(cur);
      if (!seen.insert(cur).second) {
        out.push_back("hierarchy cycle through " + n.id);
        break;
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Distribution

std::size_t Distribution::count(const std::string& state) const {
  auto it = assignment.find(state);
  return it == assignment.end() ? 0 : it->second.size();
}

std::size_t Distribution::object_count() const {
  std::size_t n = 0;
  for (const auto& [_, objs] : assignment) n += objs.size();
  return n;
}

std::set<std::string> Distribution::objects() const {
  std::set<std::string> out;
  for (const auto& [_, objs] : assignment) out.insert(objs.begin(), objs.end());
  return out;
}

bool Distribution::disjoint() const { return objects().size() == object_count(); }

std::map<std::string, std::string> Distribution::locate() const {
  std::map<std::string, std::string> where;
  for (const auto& [state, objs] : assignment) {
    for (const auto& o : objs) {
      auto [it, fresh] = where.emplace(o, state);
      if (!fresh) {
        throw Error(ErrorCode::DistributionNotDisjoint,
                    "object " + o + " occupies both " + it->second + " and " +
                        state);
      }
    }
  }
  return where;
}

bool same_occupancy(const Distribution& a, const Distribution& b) {
  return a.disjoint() && b.disjoint() && a.locate() == b.locate();
}

// ---------------------------------------------------------------------------
// CanonicalDiagram

const State* CanonicalDiagram::find_state(std::string_view sid) const {
  auto it = std::find_if(states.begin(), states.end(),
                         [&](const State& s) { return s.id == sid; });
  return it == states.end() ? nullptr : &*it;
}

namespace {

bool has_arc(const std::vector<Arc>& arcs, std::string_view src,
             std::string_view dst) {
  return std::any_of(arcs.begin(), arcs.end(), [&](const Arc& a) {
    return a.src == src && a.dst == dst;
  });
}

}  // namespace

bool CanonicalDiagram::has_dev_arc(std::string_view src, std::string_view dst) const {
  return has_arc(dev_arcs, src, dst);
}

bool CanonicalDiagram::has_back_arc(std::string_view src, std::string_view dst) const {
  return has_arc(back_arcs, src, dst);
}

ValidationReport validate_diagram(const CanonicalDiagram& d) {
  ValidationReport report;
  std::map<std::string, int> rank;
  for (const auto& s : d.states) {
    if (!rank.emplace(s.id, s.rank).second) {
      report.push_back("duplicate state id: " + s.id);
    }
  }

  auto check_arcs = [&](const std::vector<Arc>& arcs, std::string_view kind,
                        bool increasing) {
    std::set<std::pair<std::string, std::string>> seen;
    for (const auto& a : arcs) {
      const std::string tag = "(" + a.src + "," + a.dst + ")";
      if (!rank.contains(a.src) || !rank.contains(a.dst)) {
        report.push_back(std::string(kind) + " references unknown state: " + tag);
        continue;
      }
      if (!seen.insert({a.src, a.dst}).second) {
        report.push_back("duplicate " + std::string(kind) + ": " + tag);
      }
      const bool ok = increasing ? rank[a.src] < rank[a.dst]
                                 : rank[a.dst] < rank[a.src];
      if (!ok) {
        report.push_back(std::string(kind) + " violates rank order: " + tag);
      }
      if (a.delta < 1) {
        report.push_back(std::string(kind) + " has non-positive delta: " + tag);
      }
    }
  };
  check_arcs(d.dev_arcs, "devArc", true);
  check_arcs(d.back_arcs, "backArc", false);

  for (const auto& a : d.dev_arcs) {
    if (d.has_back_arc(a.src, a.dst)) {
      report.push_back("arc is both devArc and backArc: (" + a.src + "," +
                       a.dst + ")");
    }
  }

  if (d.states.empty()) report.push_back("diagram has no states");
  if (!rank.contains(d.s0)) {
    report.push_back("unknown initial state: " + d.s0);
  }
  if (!rank.contains(d.s_star)) {
    report.push_back("unknown final state: " + d.s_star);
  }
  if (rank.contains(d.s0) && rank.contains(d.s_star)) {
    for (const auto& s : d.states) {
      if (s.rank < rank[d.s0]) {
        report.push_back("initial state " + d.s0 + " is not of minimal rank");
        break;
      }
    }
    for (const auto& s : d.states) {
      if (s.rank > rank[d.s_star]) {
        report.push_back("final state " + d.s_star + " is not of maximal rank");
        break;
      }
    }
  }

  std::optional<Tick> last;
  for (const auto& sd : d.target_schedule) {
    const std::string at = " at tick " + std::to_string(sd.tick);
    if (sd.tick < 0) report.push_back("negative schedule tick" + at);
    if (last && sd.tick <= *last) {
      report.push_back("schedule ticks not strictly increasing" + at);
    }
    last = sd.tick;
    if (!sd.distribution.disjoint()) {
      report.push_back("distribution not disjoint");
    }
    for (const auto& [sid, _] : sd.distribution.assignment) {
      if (!rank.contains(sid)) {
        report.push_back("distribution references unknown state " + sid + at);
      }
    }
  }
  if (!d.target_schedule.empty() && d.target_schedule.front().tick != 0) {
    report.push_back("target schedule must start with the initial distribution at tick 0");
  }
  return report;
}

CanonicalDiagram normalize_ranks(CanonicalDiagram d) {
  std::set<int> ranks;
  for (const auto& s : d.states) ranks.insert(s.rank);
  std::map<int, int> dense;
  int i = 0;
  for (int r : ranks) dense[r] = i++;
  for (auto& s : d.states) s.rank = dense[s.rank];
  return d;
}

// ---------------------------------------------------------------------------
// Moves and counters

std::vector<Move> distribution_delta(const Distribution& prev,
                                     const Distribution& next) {
  const auto before = prev.locate();
  const auto after = next.locate();
  std::vector<Move> moves;
  for (const auto& [obj, src] : before) {
    auto it = after.find(obj);
    if (it == after.end()) {
      throw Error(ErrorCode::ObjectUniverseMismatch,
                  "object " + obj + " is missing from the next distribution");
    }
    if (it->second != src) moves.push_back({obj, src, it->second});
  }
  for (const auto& [obj, _] : after) {
    if (!before.contains(obj)) {
      throw Error(ErrorCode::ObjectUniverseMismatch,
                  "object " + obj + " is missing from the previous distribution");
    }
  }
  return moves;
}

Distribution apply_moves(Distribution dist, const std::vector<Move>& moves) {
  for (const auto& m : moves) {
    dist.assignment[m.src].erase(m.object);
    dist.assignment[m.dst].insert(m.object);
  }
  return dist;
}

std::uint64_t ArcCounters::eta(const std::string& src, const std::string& dst) const {
  auto it = per_arc.find({src, dst});
  return it == per_arc.end() ? 0 : it->second;
}

std::optional<std::size_t> ArcCounters::occupancy(const std::string& state,
                                                  Tick tick) const {
  auto it = per_state.find(state);
  if (it == per_state.end()) return std::nullopt;
  for (const auto& [t, n] : it->second) {
    if (t == tick) return n;
  }
  return std::nullopt;
}

std::optional<std::string> state_at(const StateTrace& trace, Tick tick) {
  std::optional<std::string> out;
  for (const auto& e : trace) {
    if (e.tick > tick) break;
    out = e.state;
  }
  return out;
}

}  // namespace hierion
