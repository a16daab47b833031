#include "hierion/compose.hpp"

#include <algorithm>
#include <functional>
#include <limits>
#include <queue>
#include <set>

#include "hierion/error.hpp"

namespace hierion::compose {

namespace {

int min_rank(const CanonicalDiagram& d) {
  int r = std::numeric_limits<int>::max();
  for (const auto& s : d.states) r = std::min(r, s.rank);
  return r;
}

int max_rank(const CanonicalDiagram& d) {
  int r = std::numeric_limits<int>::min();
  for (const auto& s : d.states) r = std::max(r, s.rank);
  return r;
}

std::string interval_text(TimeInterval i) {
  return "[" + std::to_string(i.start) + "," + std::to_string(i.end) + "]";
}

void check_children_valid(const std::vector<Timed>& children) {
  if (children.empty()) {
    throw Error(ErrorCode::InvalidArgument, "composition needs at least one diagram");
  }
  for (const auto& c : children) {
    auto report = validate_diagram(c.diagram);
    if (!report.empty()) {
      throw Error(ErrorCode::InvalidChild, "child " + c.diagram.id + " is invalid",
                  std::move(report));
    }
    if (!c.interval.valid()) {
      throw Error(ErrorCode::InvalidChild,
                  "child " + c.diagram.id + " has interval " +
                      interval_text(c.interval));
    }
  }
}

}  // namespace

CanonicalDiagram compose_sequential(const std::vector<Timed>& children) {
  check_children_valid(children);
  for (std::size_t i = 1; i < children.size(); ++i) {
    if (!(children[i - 1].interval.end < children[i].interval.start)) {
      throw Error(ErrorCode::IntervalOrderViolation,
                  "interval " + interval_text(children[i - 1].interval) +
                      " does not precede " + interval_text(children[i].interval));
    }
  }
  if (children.size() == 1) return children.front().diagram;

  std::set<std::string> seen;
  for (const auto& c : children) {
    for (const auto& s : c.diagram.states) {
      if (!seen.insert(s.id).second) {
        throw Error(ErrorCode::InvalidChild,
                    "state id " + s.id + " appears in more than one child");
      }
    }
  }

  CanonicalDiagram out;
  const Tick origin = children.front().interval.start;
  std::map<Tick, Distribution> schedule;
  int top = 0;
  for (std::size_t i = 0; i < children.size(); ++i) {
    const auto& child = children[i].diagram;
    out.id += (i == 0 ? "" : "+") + child.id;
    const int offset = i == 0 ? 0 : top + 1 - min_rank(child);
    for (auto s : child.states) {
      s.rank += offset;
      out.states.push_back(std::move(s));
    }
    top = max_rank(child) + offset;
    if (i > 0) {
      const auto& prev = children[i - 1];
      out.dev_arcs.push_back({prev.diagram.s_star, child.s0,
                              children[i].interval.start - prev.interval.end});
    }
    out.dev_arcs.insert(out.dev_arcs.end(), child.dev_arcs.begin(), child.dev_arcs.end());
    out.back_arcs.insert(out.back_arcs.end(), child.back_arcs.begin(),
                         child.back_arcs.end());
    const Tick shift = children[i].interval.start - origin;
    for (const auto& sd : child.target_schedule) {
      auto& merged = schedule[sd.tick + shift];
      for (const auto& [sid, objs] : sd.distribution.assignment) {
        merged.assignment[sid].insert(objs.begin(), objs.end());
      }
    }
  }
  out.s0 = children.front().diagram.s0;
  out.s_star = children.back().diagram.s_star;
  for (auto& [tick, dist] : schedule) out.target_schedule.push_back({tick, std::move(dist)});
  return out;
}

// ---------------------------------------------------------------------------
// Parallel fragments

std::size_t ParallelFragment::joint_state_count() const {
  std::size_t n = 1;
  for (const auto& c : children_) n *= c.states.size();
  return n;
}

std::vector<std::vector<std::string>> ParallelFragment::joint_states() const {
  std::vector<std::vector<std::string>> out{{}};
  for (const auto& c : children_) {
    std::vector<std::vector<std::string>> next;
    for (const auto& prefix : out) {
      for (const auto& s : c.states) {
        auto t = prefix;
        t.push_back(s.id);
        next.push_back(std::move(t));
      }
    }
    out = std::move(next);
  }
  return out;
}

std::vector<std::string> ParallelFragment::state_at(const std::vector<StateTrace>& traces,
                                                    Tick tick) const {
  if (traces.size() != children_.size()) {
    throw Error(ErrorCode::InvalidArgument, "one trace per child is required");
  }
  std::vector<std::string> out;
  for (std::size_t i = 0; i < traces.size(); ++i) {
    out.push_back(hierion::state_at(traces[i], tick).value_or(children_[i].s0));
  }
  return out;
}

ParallelFragment compose_parallel(const std::vector<Timed>& children) {
  check_children_valid(children);
  std::vector<CanonicalDiagram> diagrams;
  for (const auto& c : children) {
    if (c.interval != children.front().interval) {
      throw Error(ErrorCode::IntervalMismatch,
                  "interval " + interval_text(c.interval) + " of " + c.diagram.id +
                      " differs from " + interval_text(children.front().interval));
    }
    diagrams.push_back(c.diagram);
  }
  return ParallelFragment(std::move(diagrams), children.front().interval);
}

// ---------------------------------------------------------------------------
// Generalization

std::optional<std::string> Generalization::membership(const StateTuple& tuple) const {
  auto it = index_.find(tuple);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

namespace {

std::string tuple_text(const StateTuple& t) {
  std::string s = "(";
  for (std::size_t i = 0; i < t.size(); ++i) s += (i ? "," : "") + t[i];
  return s + ")";
}

}  // namespace

Generalization generalize(const std::vector<CanonicalDiagram>& children,
                          const std::vector<StateBlock>& blocks,
                          const std::vector<BlockArc>& arcs, bool require_total,
                          std::string parent_id) {
  if (children.empty() || blocks.empty()) {
    throw Error(ErrorCode::InvalidArgument,
                "generalization needs children and at least one block");
  }
  std::vector<std::map<std::string, int>> ranks(children.size());
  for (std::size_t k = 0; k < children.size(); ++k) {
    for (const auto& s : children[k].states) ranks[k][s.id] = s.rank;
  }

  Generalization g;
  std::map<std::string, int> block_rank;
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const auto& block = blocks[b];
    if (!block_rank.emplace(block.id, static_cast<int>(b)).second) {
      throw Error(ErrorCode::InvalidArgument, "duplicate block id " + block.id);
    }
    if (block.members.empty()) {
      throw Error(ErrorCode::InvalidArgument, "block " + block.id + " is empty");
    }
    for (const auto& t : block.members) {
      if (t.size() != children.size()) {
        throw Error(ErrorCode::InvalidArgument,
                    "tuple " + tuple_text(t) + " has wrong arity in block " + block.id);
      }
      for (std::size_t k = 0; k < t.size(); ++k) {
        if (!ranks[k].contains(t[k])) {
          throw Error(ErrorCode::UnknownStateId,
                      "state " + t[k] + " is not in child " + children[k].id);
        }
      }
      auto [it, fresh] = g.index_.emplace(t, block.id);
      if (!fresh && it->second != block.id) {
        throw Error(ErrorCode::OverlappingBlocks, "tuple " + tuple_text(t) +
                                                      " is in blocks " + it->second +
                                                      " and " + block.id);
      }
    }
  }

  // Pareto dominance in child ranks must not contradict the block order.
  auto dominates = [&](const StateTuple& a, const StateTuple& b) {
    bool strict = false;
    for (std::size_t k = 0; k < a.size(); ++k) {
      const int ra = ranks[k].at(a[k]);
      const int rb = ranks[k].at(b[k]);
      if (ra < rb) return false;
      if (ra > rb) strict = true;
    }
    return strict;
  };
  for (std::size_t lo = 0; lo < blocks.size(); ++lo) {
    for (std::size_t hi = lo + 1; hi < blocks.size(); ++hi) {
      for (const auto& a : blocks[lo].members) {
        for (const auto& b : blocks[hi].members) {
          if (dominates(a, b)) {
            throw Error(ErrorCode::OrderInconsistent,
                        "block " + blocks[lo].id + " < " + blocks[hi].id + " but " +
                            tuple_text(a) + " dominates " + tuple_text(b));
          }
        }
      }
    }
  }

  if (require_total) {
    ParallelFragment all(children, {});
    for (const auto& t : all.joint_states()) {
      if (!g.index_.contains(t)) {
        throw Error(ErrorCode::UncoveredRequiredTuple,
                    "tuple " + tuple_text(t) + " is not covered by any block");
      }
    }
  }

  int child_level = 0;
  if (!children.front().states.empty()) child_level = children.front().states.front().level;
  CanonicalDiagram& parent = g.parent_;
  parent.id = std::move(parent_id);
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    parent.states.push_back(
        State{blocks[b].id, static_cast<int>(b), std::max(0, child_level - 1), {}});
  }
  for (const auto& a : arcs) {
    if (!block_rank.contains(a.src) || !block_rank.contains(a.dst)) {
      throw Error(ErrorCode::UnknownStateId,
                  "arc (" + a.src + "," + a.dst + ") names an undeclared block");
    }
    if (a.src == a.dst) {
      throw Error(ErrorCode::InvalidArgument, "self-arc on block " + a.src);
    }
    auto& target = block_rank[a.src] < block_rank[a.dst] ? parent.dev_arcs : parent.back_arcs;
    target.push_back({a.src, a.dst, a.delta});
  }
  parent.s0 = blocks.front().id;
  parent.s_star = blocks.back().id;
  g.blocks_ = blocks;
  return g;
}

std::vector<BlockArc> synchronous_product_arcs(
    const std::vector<CanonicalDiagram>& children,
    const std::map<StateTuple, std::string>& block_of) {
  std::vector<BlockArc> out;
  std::map<std::pair<std::string, std::string>, std::size_t> seen;
  std::vector<const Arc*> pick(children.size());
  std::function<void(std::size_t)> rec = [&](std::size_t k) {
    if (k == children.size()) {
      StateTuple src, dst;
      Tick delta = 0;
      for (const Arc* a : pick) {
        src.push_back(a->src);
        dst.push_back(a->dst);
        delta = std::max(delta, a->delta);
      }
      auto s = block_of.find(src);
      auto d = block_of.find(dst);
      if (s == block_of.end() || d == block_of.end() || s->second == d->second) return;
      auto [it, fresh] = seen.emplace(std::make_pair(s->second, d->second), out.size());
      if (fresh) {
        out.push_back({s->second, d->second, delta});
      } else {
        out[it->second].delta = std::min(out[it->second].delta, delta);
      }
      return;
    }
    for (const auto& a : children[k].dev_arcs) {
      pick[k] = &a;
      rec(k + 1);
    }
  };
  rec(0);
  return out;
}

std::vector<std::pair<Tick, std::optional<std::string>>> block_trajectory(
    const Generalization& g, const std::vector<StateTrace>& child_traces) {
  std::set<Tick> ticks;
  for (const auto& tr : child_traces) {
    for (const auto& e : tr) ticks.insert(e.tick);
  }
  std::vector<std::pair<Tick, std::optional<std::string>>> out;
  for (Tick t : ticks) {
    StateTuple tuple;
    for (const auto& tr : child_traces) tuple.push_back(state_at(tr, t).value_or(""));
    auto block = g.membership(tuple);
    if (!out.empty() && out.back().second == block) continue;
    out.emplace_back(t, std::move(block));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Consistency

namespace {

std::optional<Tick> shortest_delta(const CanonicalDiagram& d, const std::string& from,
                                   const std::string& to) {
  using Item = std::pair<Tick, std::string>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> open;
  std::map<std::string, Tick> dist{{from, 0}};
  open.push({0, from});
  while (!open.empty()) {
    auto [t, s] = open.top();
    open.pop();
    if (t > dist[s]) continue;
    if (s == to) return t;
    for (const auto& a : d.dev_arcs) {
      if (a.src != s) continue;
      const Tick nt = t + a.delta;
      auto it = dist.find(a.dst);
      if (it == dist.end() || nt < it->second) {
        dist[a.dst] = nt;
        open.push({nt, a.dst});
      }
    }
  }
  return std::nullopt;
}

}  // namespace

ConsistencyResult check_consistency(const ParallelFragment& fragment,
                                    const std::vector<Requirement>& requirements) {
  const auto& children = fragment.children();
  std::vector<std::pair<std::size_t, std::string>> resolved;
  for (const auto& r : requirements) {
    std::optional<std::size_t> found;
    std::string state = r.state;
    if (auto slash = r.state.find('/'); slash != std::string::npos) {
      const std::string did = r.state.substr(0, slash);
      state = r.state.substr(slash + 1);
      for (std::size_t k = 0; k < children.size(); ++k) {
        if (children[k].id == did && children[k].find_state(state)) found = k;
      }
    } else {
      for (std::size_t k = 0; k < children.size(); ++k) {
        if (!children[k].find_state(state)) continue;
        if (found) {
          throw Error(ErrorCode::UnknownStateId,
                      "state " + state + " is ambiguous; qualify it as diagram/state");
        }
        found = k;
      }
    }
    if (!found) throw Error(ErrorCode::UnknownStateId, "unknown state " + r.state);
    resolved.emplace_back(*found, state);
  }

  std::vector<std::string> at;
  std::vector<Tick> since(children.size(), 0);
  for (const auto& c : children) at.push_back(c.s0);
  Tick last = 0;
  ConsistencyResult out;
  for (std::size_t i = 0; i < resolved.size(); ++i) {
    const auto& [k, state] = resolved[i];
    const auto dist = shortest_delta(children[k], at[k], state);
    if (!dist) {
      out.consistent = false;
      out.witness_index = i;
      out.witness_state = requirements[i].state;
      return out;
    }
    const Tick arrival = std::max(last, since[k] + *dist);
    if (arrival > requirements[i].deadline) {
      out.consistent = false;
      out.witness_index = i;
      out.witness_state = requirements[i].state;
      out.earliest_arrival = arrival;
      return out;
    }
    at[k] = state;
    since[k] = arrival;
    last = arrival;
  }
  return out;
}

ConsistencyResult check_consistency(const CanonicalDiagram& diagram,
                                    const std::vector<Requirement>& requirements) {
  return check_consistency(ParallelFragment({diagram}, {}), requirements);
}

}  // namespace hierion::compose
