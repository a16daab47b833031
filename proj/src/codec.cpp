#include "hierion/codec.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "hierion/error.hpp"

namespace hierion::io {

namespace {

using classify::Classifier;
using classify::Formula;
using classify::Scale;
using scenario::ControlDiagram;

[[noreturn]] void parse_fail(const std::string& path, const std::string& what) {
  throw Error(ErrorCode::ParseError, path + ": " + what);
}

[[noreturn]] void dangling(const std::string& id, const std::string& site) {
  throw Error(ErrorCode::DanglingReference, "dangling reference to " + id + " in " + site);
}

struct Ctx {
  bool lenient = false;
  std::vector<std::string>* warnings = nullptr;
};

std::string as_string(const json& j, const std::string& path) {
  if (!j.is_string()) parse_fail(path, "expected string");
  return j.get<std::string>();
}

Tick as_tick(const json& j, const std::string& path) {
  if (j.is_number_unsigned()) {
    if (j.get<std::uint64_t>() > static_cast<std::uint64_t>(std::numeric_limits<Tick>::max())) {
      parse_fail(path, "integer out of range");
    }
    return static_cast<Tick>(j.get<std::uint64_t>());
  }
  if (!j.is_number_integer()) parse_fail(path, "expected integer");
  return j.get<Tick>();
}

int as_int(const json& j, const std::string& path) {
  const Tick v = as_tick(j, path);
  if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) {
    parse_fail(path, "integer out of range");
  }
  return static_cast<int>(v);
}

double as_number(const json& j, const std::string& path) {
  if (!j.is_number()) parse_fail(path, "expected number");
  return j.get<double>();
}

bool as_bool(const json& j, const std::string& path) {
  if (!j.is_boolean()) parse_fail(path, "expected boolean");
  return j.get<bool>();
}

const json& as_array(const json& j, const std::string& path) {
  if (!j.is_array()) parse_fail(path, "expected array");
  return j;
}

std::string index_path(const std::string& path, std::size_t i) {
  return path + "[" + std::to_string(i) + "]";
}

std::vector<std::string> string_list(const json& j, const std::string& path) {
  std::vector<std::string> out;
  std::size_t i = 0;
  for (const auto& e : as_array(j, path)) out.push_back(as_string(e, index_path(path, i++)));
  return out;
}

// Field access on one JSON object; done() reports fields nobody asked for.
class Obj {
 public:
  Obj(const json& j, std::string path, Ctx& ctx) : j_(j), path_(std::move(path)), ctx_(ctx) {
    if (!j_.is_object()) parse_fail(path_, "expected object");
  }

  const std::string& path() const { return path_; }
  std::string sub(const std::string& key) const { return path_ + "." + key; }

  const json& at(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    if (it == j_.end()) parse_fail(sub(key), "missing field");
    return *it;
  }

  const json* opt(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() || it->is_null() ? nullptr : &*it;
  }

  std::string str(const std::string& key) { return as_string(at(key), sub(key)); }
  std::string str_or(const std::string& key, std::string fallback) {
    const json* v = opt(key);
    return v ? as_string(*v, sub(key)) : fallback;
  }
  Tick tick(const std::string& key) { return as_tick(at(key), sub(key)); }
  Tick tick_or(const std::string& key, Tick fallback) {
    const json* v = opt(key);
    return v ? as_tick(*v, sub(key)) : fallback;
  }
  int integer_or(const std::string& key, int fallback) {
    const json* v = opt(key);
    return v ? as_int(*v, sub(key)) : fallback;
  }
  double number_or(const std::string& key, double fallback) {
    const json* v = opt(key);
    return v ? as_number(*v, sub(key)) : fallback;
  }
  bool boolean_or(const std::string& key, bool fallback) {
    const json* v = opt(key);
    return v ? as_bool(*v, sub(key)) : fallback;
  }

  void done() {
    for (const auto& item : j_.items()) {
      if (seen_.contains(item.key())) continue;
      if (!ctx_.lenient) parse_fail(sub(item.key()), "unknown field");
      if (ctx_.warnings) ctx_.warnings->push_back(sub(item.key()) + ": unknown field ignored");
    }
  }

 private:
  const json& j_;
  std::string path_;
  Ctx& ctx_;
  std::set<std::string> seen_;
};

// ---------------------------------------------------------------------------
// Readers

ParameterHierarchy read_hierarchy(const json& j, const std::string& path, Ctx& ctx) {
  std::vector<ParameterNode> nodes;
  std::size_t i = 0;
  for (const auto& e : as_array(j, path)) {
    Obj o(e, index_path(path, i++), ctx);
    ParameterNode n;
    n.id = o.str("id");
    n.level = o.integer_or("level", 0);
    n.polymorphic = o.boolean_or("polymorphic", false);
    if (const json* c = o.opt("children")) n.children = string_list(*c, o.sub("children"));
    o.done();
    nodes.push_back(std::move(n));
  }
  return ParameterHierarchy(std::move(nodes));
}

TimeInterval read_interval(const json& j, const std::string& path, Ctx& ctx) {
  Obj o(j, path, ctx);
  TimeInterval t{o.tick("start"), o.tick("end")};
  o.done();
  return t;
}

TrendClass read_trend_class(const json& j, const std::string& path) {
  auto c = parse_trend_class(as_string(j, path));
  if (!c) parse_fail(path, "unknown trend class " + j.get<std::string>());
  return *c;
}

Formula read_formula(const json& j, const std::string& path, Ctx& ctx) {
  if (!j.is_object() || j.size() != 1) {
    parse_fail(path, "formula must be an object with exactly one of trendIs, valueIn, and, or, not");
  }
  const std::string key = j.begin().key();
  const json& body = j.begin().value();
  const std::string at = path + "." + key;
  if (key == "trendIs") {
    Obj o(body, at, ctx);
    auto f = Formula::trend_is(o.str("parameter"), read_trend_class(o.at("class"), o.sub("class")));
    o.done();
    return f;
  }
  if (key == "valueIn") {
    Obj o(body, at, ctx);
    const double inf = std::numeric_limits<double>::infinity();
    std::string p = o.str("parameter");
    double lo = o.number_or("min", -inf);
    double hi = o.number_or("max", inf);
    bool lo_open = o.boolean_or("minOpen", false);
    bool hi_open = o.boolean_or("maxOpen", false);
    o.done();
    return Formula::value_in(std::move(p), lo, hi, lo_open, hi_open);
  }
  if (key == "and" || key == "or") {
    std::vector<Formula> terms;
    std::size_t i = 0;
    for (const auto& t : as_array(body, at)) terms.push_back(read_formula(t, index_path(at, i++), ctx));
    return key == "and" ? Formula::all_of(std::move(terms)) : Formula::any_of(std::move(terms));
  }
  if (key == "not") return Formula::negate(read_formula(body, at, ctx));
  parse_fail(at, "unknown formula operator");
}

void read_scale(const json& j, const std::string& path, Ctx& ctx, Scale& scale,
                std::map<std::string, Scale>& continuations) {
  std::size_t i = 0;
  for (const auto& e : as_array(j, path)) {
    Obj o(e, index_path(path, i++), ctx);
    classify::Predicate p{o.str("id"), read_formula(o.at("formula"), o.sub("formula"), ctx)};
    scale.state_ids.push_back(o.str("state"));
    if (const json* r = o.opt("refine")) {
      Scale sub;
      read_scale(*r, o.sub("refine"), ctx, sub, continuations);
      if (!sub.predicates.empty()) continuations[p.id] = std::move(sub);
    }
    o.done();
    scale.predicates.push_back(std::move(p));
  }
}

Classifier read_classifier(const json& j, const std::string& path, Ctx& ctx) {
  Obj o(j, path, ctx);
  Classifier c;
  c.id = o.str("id");
  if (const json* iv = o.opt("interval")) c.interval = read_interval(*iv, o.sub("interval"), ctx);
  c.tolerance = o.number_or("tolerance", 0.0);
  read_scale(o.at("scale"), o.sub("scale"), ctx, c.root, c.continuations);
  o.done();
  return c;
}

classify::ClassificationMatrix read_matrix(const json& j, const std::string& path, Ctx& ctx) {
  Obj o(j, path, ctx);
  classify::ClassificationMatrix m;
  m.id = o.str("id");
  m.rows = string_list(o.at("rows"), o.sub("rows"));
  m.columns = string_list(o.at("columns"), o.sub("columns"));
  if (const json* cells = o.opt("cells")) {
    std::size_t i = 0;
    for (const auto& e : as_array(*cells, o.sub("cells"))) {
      Obj c(e, index_path(o.sub("cells"), i++), ctx);
      std::pair<std::string, std::string> key{c.str("row"), c.str("column")};
      Formula f = read_formula(c.at("formula"), c.sub("formula"), ctx);
      c.done();
      if (!m.cells.emplace(key, std::move(f)).second) {
        parse_fail(c.path(), "duplicate cell (" + key.first + "," + key.second + ")");
      }
    }
  }
  o.done();
  return m;
}

State read_state(const json& j, const std::string& path, Ctx& ctx, bool with_signature) {
  Obj o(j, path, ctx);
  State s;
  s.id = o.str("id");
  s.rank = o.integer_or("rank", 0);
  s.level = o.integer_or("level", 0);
  if (with_signature) {
    if (const json* sig = o.opt("signature")) {
      std::size_t i = 0;
      for (const auto& e : as_array(*sig, o.sub("signature"))) {
        Obj p(e, index_path(o.sub("signature"), i++), ctx);
        s.signature.insert({p.str("parameter"), read_trend_class(p.at("class"), p.sub("class"))});
        p.done();
      }
    }
  }
  o.done();
  return s;
}

std::vector<Arc> read_arcs(const json* j, const std::string& path, Ctx& ctx) {
  std::vector<Arc> out;
  if (!j) return out;
  std::size_t i = 0;
  for (const auto& e : as_array(*j, path)) {
    Obj o(e, index_path(path, i++), ctx);
    out.push_back({o.str("src"), o.str("dst"), o.tick_or("delta", 1)});
    o.done();
  }
  return out;
}

Distribution read_distribution(const json& j, const std::string& path) {
  if (!j.is_object()) parse_fail(path, "expected object of state -> object ids");
  Distribution d;
  for (const auto& item : j.items()) {
    auto ids = string_list(item.value(), path + "." + item.key());
    d.assignment[item.key()].insert(ids.begin(), ids.end());
  }
  return d;
}

CanonicalDiagram read_canonical(const json& j, const std::string& path, Ctx& ctx) {
  Obj o(j, path, ctx);
  CanonicalDiagram d;
  d.id = o.str("id");
  d.classifier = o.str_or("classifier", "");
  std::size_t i = 0;
  for (const auto& e : as_array(o.at("states"), o.sub("states"))) {
    d.states.push_back(read_state(e, index_path(o.sub("states"), i++), ctx, true));
  }
  d.dev_arcs = read_arcs(o.opt("devArcs"), o.sub("devArcs"), ctx);
  d.back_arcs = read_arcs(o.opt("backArcs"), o.sub("backArcs"), ctx);
  d.s0 = o.str("s0");
  d.s_star = o.str("sStar");
  if (const json* ts = o.opt("targetSchedule")) {
    i = 0;
    for (const auto& e : as_array(*ts, o.sub("targetSchedule"))) {
      Obj s(e, index_path(o.sub("targetSchedule"), i++), ctx);
      d.target_schedule.push_back({s.tick("tick"), read_distribution(s.at("distribution"), s.sub("distribution"))});
      s.done();
    }
  }
  o.done();
  return d;
}

ControlDiagram read_control(const json& j, const std::string& path, Ctx& ctx) {
  Obj o(j, path, ctx);
  ControlDiagram d;
  d.id = o.str("id");
  std::size_t i = 0;
  for (const auto& e : as_array(o.at("states"), o.sub("states"))) {
    d.states.push_back(read_state(e, index_path(o.sub("states"), i++), ctx, false));
  }
  d.s0 = o.str("s0");
  d.s_star = o.str("sStar");
  i = 0;
  for (const auto& e : as_array(o.at("alphabet"), o.sub("alphabet"))) {
    Obj s(e, index_path(o.sub("alphabet"), i++), ctx);
    scenario::Symbol sym;
    sym.id = s.str("id");
    const std::string kind = s.str_or("kind", "individual");
    if (kind == "general") {
      sym.kind = scenario::SymbolKind::General;
    } else if (kind != "individual") {
      parse_fail(s.sub("kind"), "expected individual or general");
    }
    s.done();
    d.alphabet.push_back(std::move(sym));
  }
  if (const json* p1 = o.opt("p1Arcs")) {
    i = 0;
    for (const auto& e : as_array(*p1, o.sub("p1Arcs"))) {
      Obj a(e, index_path(o.sub("p1Arcs"), i++), ctx);
      d.p1_arcs.push_back({a.str("src"), a.str("dst"), a.str("symbol"), a.tick_or("delta", 1)});
      a.done();
    }
  }
  if (const json* p2 = o.opt("p2Arcs")) {
    i = 0;
    for (const auto& e : as_array(*p2, o.sub("p2Arcs"))) {
      Obj a(e, index_path(o.sub("p2Arcs"), i++), ctx);
      scenario::P2Arc arc{a.str("src"), a.str("dst"), std::nullopt};
      if (const json* dv = a.opt("decay")) arc.decay = as_tick(*dv, a.sub("decay"));
      a.done();
      d.p2_arcs.push_back(std::move(arc));
    }
  }
  o.done();
  return d;
}

scenario::ArcRef read_arc_ref(const json& j, const std::string& path, Ctx& ctx) {
  Obj o(j, path, ctx);
  scenario::ArcRef r{o.str("diagram"), o.str("src"), o.str("dst")};
  o.done();
  return r;
}

scenario::CoupledGroup read_group(const json& j, const std::string& path, Ctx& ctx) {
  Obj o(j, path, ctx);
  scenario::CoupledGroup g;
  g.id = o.str("id");
  g.parent_arc = read_arc_ref(o.at("parentArc"), o.sub("parentArc"), ctx);
  std::size_t i = 0;
  for (const auto& e : as_array(o.at("childArcs"), o.sub("childArcs"))) {
    g.child_arcs.push_back(read_arc_ref(e, index_path(o.sub("childArcs"), i++), ctx));
  }
  if (const json* p = o.opt("policy")) {
    if (p->is_string()) {
      if (p->get<std::string>() != "all") parse_fail(o.sub("policy"), "expected \"all\" or {\"atLeast\": k}");
    } else {
      Obj po(*p, o.sub("policy"), ctx);
      const Tick k = po.tick("atLeast");
      if (k < 1) parse_fail(po.sub("atLeast"), "must be at least 1");
      g.policy.at_least = static_cast<std::size_t>(k);
      po.done();
    }
  }
  o.done();
  return g;
}

scenario::ElementaryRule read_rule(const json& j, const std::string& path, Ctx& ctx) {
  Obj o(j, path, ctx);
  scenario::ElementaryRule r;
  r.id = o.str("id");
  r.subsystem = o.str("subsystem");
  r.from = o.str("from");
  r.to = o.str("to");
  r.forbidden = o.str_or("forbidden", "");
  r.action = o.str_or("action", "");
  r.resources = o.number_or("resources", 0.0);
  r.duration = o.tick_or("duration", 1);
  o.done();
  return r;
}

// Rule ids are resolved after all rules are read.
scenario::GoalNode read_goal_node(const json& j, const std::string& path, Ctx& ctx,
                                  const std::map<std::string, scenario::ElementaryRule>& rules) {
  Obj o(j, path, ctx);
  scenario::GoalNode n;
  n.id = o.str("id");
  if (const json* r = o.opt("rule")) {
    const std::string rid = as_string(*r, o.sub("rule"));
    auto it = rules.find(rid);
    if (it == rules.end()) dangling("rule " + rid, "goal node " + n.id);
    n.rule = it->second;
  }
  if (const json* c = o.opt("children")) {
    std::size_t i = 0;
    for (const auto& e : as_array(*c, o.sub("children"))) {
      n.children.push_back(read_goal_node(e, index_path(o.sub("children"), i++), ctx, rules));
    }
  }
  o.done();
  return n;
}

scenario::PartialDiagram read_partial(const json& j, const std::string& path, Ctx& ctx) {
  Obj o(j, path, ctx);
  scenario::PartialDiagram p;
  p.id = o.str_or("id", "");
  std::size_t i = 0;
  for (const auto& e : as_array(o.at("supports"), o.sub("supports"))) {
    Obj s(e, index_path(o.sub("supports"), i++), ctx);
    p.supports.push_back({s.str("diagram"), s.str("state"), s.tick("deadline")});
    s.done();
  }
  if (const json* b = o.opt("budget")) {
    Obj bo(*b, o.sub("budget"), ctx);
    p.budget.max_ticks = bo.tick_or("maxTicks", p.budget.max_ticks);
    p.budget.max_resources = bo.number_or("maxResources", p.budget.max_resources);
    bo.done();
  }
  o.done();
  return p;
}

ScenarioSpec read_scenario(const json& j, const std::string& path, Ctx& ctx) {
  Obj o(j, path, ctx);
  ScenarioSpec s;
  s.id = o.str("id");
  s.diagrams = string_list(o.at("diagrams"), o.sub("diagrams"));
  if (const json* h = o.opt("hierarchy")) s.hierarchy = read_hierarchy(*h, o.sub("hierarchy"), ctx);
  if (const json* m = o.opt("mapping")) {
    if (!m->is_object()) parse_fail(o.sub("mapping"), "expected object of node -> diagram");
    for (const auto& item : m->items()) {
      s.mapping[item.key()] = as_string(item.value(), o.sub("mapping") + "." + item.key());
    }
  }
  if (const json* sch = o.opt("schedule")) {
    std::size_t i = 0;
    for (const auto& e : as_array(*sch, o.sub("schedule"))) {
      Obj c(e, index_path(o.sub("schedule"), i++), ctx);
      s.schedule.push_back({c.tick("tick"), c.str("symbol"), c.str("to")});
      c.done();
    }
  }
  if (const json* v = o.opt("afterEffect")) s.after_effect = string_list(*v, o.sub("afterEffect"));
  if (const json* h = o.opt("horizon")) s.horizon = as_tick(*h, o.sub("horizon"));
  o.done();
  return s;
}

template <typename T, typename Reader>
void read_collection(Obj& top, const std::string& key, std::map<std::string, T>& into,
                     Reader read) {
  const json* arr = top.opt(key);
  if (!arr) return;
  std::size_t i = 0;
  for (const auto& e : as_array(*arr, top.sub(key))) {
    const std::string at = index_path(top.sub(key), i++);
    T value = read(e, at);
    const std::string id = value.id;
    if (!into.emplace(id, std::move(value)).second) parse_fail(at, "duplicate id " + id);
  }
}

// ---------------------------------------------------------------------------
// Cross-reference checks

void check_formula_params(const Formula& f, const ParameterHierarchy& h, const std::string& site) {
  if (h.nodes().empty()) return;
  std::set<std::string> params;
  classify::collect_parameters(f, params);
  for (const auto& p : params) {
    if (!h.contains(p)) dangling("parameter " + p, site);
  }
}

void check_control_refs(const ControlDiagram& d) {
  const std::string site = "control diagram " + d.id;
  for (const std::string& s : {d.s0, d.s_star}) {
    if (!d.find_state(s)) dangling("state " + s, site);
  }
  for (const auto& a : d.p1_arcs) {
    for (const auto& s : {a.src, a.dst}) {
      if (!d.find_state(s)) dangling("state " + s, site + " P1 arc (" + a.src + "," + a.dst + ")");
    }
    if (!d.find_symbol(a.symbol)) {
      dangling("symbol " + a.symbol, site + " P1 arc (" + a.src + "," + a.dst + ")");
    }
  }
  for (const auto& a : d.p2_arcs) {
    for (const auto& s : {a.src, a.dst}) {
      if (!d.find_state(s)) dangling("state " + s, site + " P2 arc (" + a.src + "," + a.dst + ")");
    }
  }
}

void check_arc_ref(const ModelBundle& b, const scenario::ArcRef& r, const std::string& site) {
  auto it = b.control.find(r.diagram);
  if (it == b.control.end()) dangling("control diagram " + r.diagram, site);
  for (const auto& s : {r.src, r.dst}) {
    if (!it->second.find_state(s)) dangling("state " + s, site);
  }
  if (!it->second.find_p1(r.src, r.dst)) {
    dangling("P1 arc (" + r.src + "," + r.dst + ") of " + r.diagram, site);
  }
}

void check_refs(const ModelBundle& b) {
  const auto& h = b.hierarchy;
  for (const auto& [id, c] : b.classifiers) {
    for (const auto& p : c.root.predicates) check_formula_params(p.formula, h, "classifier " + id);
    for (const auto& [pid, scale] : c.continuations) {
      for (const auto& p : scale.predicates) check_formula_params(p.formula, h, "classifier " + id);
    }
  }
  for (const auto& [id, m] : b.matrices) {
    for (const auto& [key, f] : m.cells) {
      const std::string site = "matrix " + id + " cell (" + key.first + "," + key.second + ")";
      if (std::find(m.rows.begin(), m.rows.end(), key.first) == m.rows.end()) {
        dangling("row " + key.first, site);
      }
      if (std::find(m.columns.begin(), m.columns.end(), key.second) == m.columns.end()) {
        dangling("column " + key.second, site);
      }
      check_formula_params(f, h, site);
    }
  }
  for (const auto& [id, d] : b.canonical) {
    const std::string site = "canonical diagram " + id;
    for (const std::string& s : {d.s0, d.s_star}) {
      if (!d.find_state(s)) dangling("state " + s, site);
    }
    for (const auto* arcs : {&d.dev_arcs, &d.back_arcs}) {
      for (const auto& a : *arcs) {
        for (const auto& s : {a.src, a.dst}) {
          if (!d.find_state(s)) dangling("state " + s, site + " arc (" + a.src + "," + a.dst + ")");
        }
      }
    }
    for (const auto& sd : d.target_schedule) {
      for (const auto& [state, objs] : sd.distribution.assignment) {
        if (!d.find_state(state)) {
          dangling("state " + state, site + " target schedule at tick " + std::to_string(sd.tick));
        }
      }
    }
    for (const auto& st : d.states) {
      for (const auto& [param, cls] : st.signature) {
        if (!h.nodes().empty() && !h.contains(param)) {
          dangling("parameter " + param, site + " state " + st.id + " signature");
        }
      }
    }
    if (!d.classifier.empty()) {
      auto c = b.classifiers.find(d.classifier);
      if (c == b.classifiers.end()) dangling("classifier " + d.classifier, site);
      for (const auto& leaf : c->second.leaf_states()) {
        if (!d.find_state(leaf)) dangling("state " + leaf, "classifier " + d.classifier + " used by " + site);
      }
    }
  }
  for (const auto& [id, d] : b.control) check_control_refs(d);
  for (const auto& [id, g] : b.groups) {
    check_arc_ref(b, g.parent_arc, "coupled group " + id + " parent arc");
    for (const auto& c : g.child_arcs) check_arc_ref(b, c, "coupled group " + id + " child arc");
  }
  for (const auto& [id, r] : b.rules) {
    const std::string site = "rule " + id;
    auto d = b.control.find(r.subsystem);
    if (d == b.control.end()) dangling("control diagram " + r.subsystem, site);
    for (const auto& s : {r.from, r.to, r.forbidden}) {
      if (!s.empty() && !d->second.find_state(s)) dangling("state " + s, site);
    }
  }
  for (const auto& [id, p] : b.partials) {
    for (const auto& s : p.supports) {
      auto d = b.control.find(s.diagram);
      if (d == b.control.end()) dangling("control diagram " + s.diagram, "partial diagram " + id);
      if (!d->second.find_state(s.state)) dangling("state " + s.state, "partial diagram " + id);
    }
  }
  for (const auto& [id, s] : b.scenarios) check_scenario_refs(b, s);
}

ValidationReport validate_bundle(const ModelBundle& b) {
  ValidationReport r;
  auto add = [&](const ValidationReport& more) { r.insert(r.end(), more.begin(), more.end()); };
  add(b.hierarchy.validate());
  for (const auto& [id, c] : b.classifiers) {
    add(classify::validate_classifier(c, b.hierarchy.nodes().empty() ? nullptr : &b.hierarchy));
  }
  for (const auto& [id, d] : b.canonical) {
    for (const auto& e : validate_diagram(d)) r.push_back("canonical diagram " + id + ": " + e);
  }
  for (const auto& [id, d] : b.control) add(scenario::validate_control_diagram(d));
  for (const auto& [id, rule] : b.rules) add(scenario::validate_rule(rule));
  for (const auto& [id, t] : b.goal_trees) add(scenario::validate_goal_tree(t));
  for (const auto& [id, p] : b.partials) add(scenario::validate_partial_diagram(p));
  for (const auto& [id, s] : b.scenarios) {
    for (const auto& e : scenario::validate_scenario(resolve_scenario(b, s)).errors) {
      r.push_back("scenario " + id + ": " + e);
    }
  }
  return r;
}

// ---------------------------------------------------------------------------
// Writers

json hierarchy_json(const ParameterHierarchy& h) {
  json out = json::array();
  for (const auto& n : h.nodes()) {
    out.push_back({{"id", n.id}, {"level", n.level}, {"polymorphic", n.polymorphic}, {"children", n.children}});
  }
  return out;
}

json formula_json(const Formula& f) {
  return std::visit(
      [](const auto& n) -> json {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, classify::TrendIs>) {
          return {{"trendIs", {{"parameter", n.parameter}, {"class", std::string(to_string(n.cls))}}}};
        } else if constexpr (std::is_same_v<T, classify::ValueIn>) {
          json body = {{"parameter", n.parameter}};
          if (std::isfinite(n.lo)) body["min"] = n.lo;
          if (std::isfinite(n.hi)) body["max"] = n.hi;
          if (n.lo_open) body["minOpen"] = true;
          if (n.hi_open) body["maxOpen"] = true;
          return {{"valueIn", body}};
        } else if constexpr (std::is_same_v<T, classify::Negation>) {
          return {{"not", formula_json(*n.term)}};
        } else {
          json terms = json::array();
          for (const auto& t : n.terms) terms.push_back(formula_json(t));
          return {{std::is_same_v<T, classify::AllOf> ? "and" : "or", terms}};
        }
      },
      f.node);
}

json scale_json(const Scale& s, const std::map<std::string, Scale>& continuations) {
  json out = json::array();
  for (std::size_t i = 0; i < s.predicates.size(); ++i) {
    const auto& p = s.predicates[i];
    json e = {{"id", p.id}, {"state", i < s.state_ids.size() ? s.state_ids[i] : ""},
              {"formula", formula_json(p.formula)}};
    auto c = continuations.find(p.id);
    if (c != continuations.end()) e["refine"] = scale_json(c->second, continuations);
    out.push_back(std::move(e));
  }
  return out;
}

json interval_json(const TimeInterval& t) { return {{"start", t.start}, {"end", t.end}}; }

json arcs_json(const std::vector<Arc>& arcs) {
  json out = json::array();
  for (const auto& a : arcs) out.push_back({{"src", a.src}, {"dst", a.dst}, {"delta", a.delta}});
  return out;
}

json state_json(const State& s, bool with_signature) {
  json out = {{"id", s.id}, {"rank", s.rank}, {"level", s.level}};
  if (with_signature && !s.signature.empty()) {
    json sig = json::array();
    for (const auto& [p, c] : s.signature) sig.push_back({{"parameter", p}, {"class", std::string(to_string(c))}});
    out["signature"] = sig;
  }
  return out;
}

json canonical_json(const CanonicalDiagram& d) {
  json states = json::array();
  for (const auto& s : d.states) states.push_back(state_json(s, true));
  json schedule = json::array();
  for (const auto& sd : d.target_schedule) {
    schedule.push_back({{"tick", sd.tick}, {"distribution", to_json(sd.distribution)}});
  }
  json out = {{"id", d.id},
              {"states", states},
              {"devArcs", arcs_json(d.dev_arcs)},
              {"backArcs", arcs_json(d.back_arcs)},
              {"s0", d.s0},
              {"sStar", d.s_star},
              {"targetSchedule", schedule}};
  if (!d.classifier.empty()) out["classifier"] = d.classifier;
  return out;
}

json control_json(const ControlDiagram& d) {
  json states = json::array();
  for (const auto& s : d.states) states.push_back(state_json(s, false));
  json alphabet = json::array();
  for (const auto& x : d.alphabet) alphabet.push_back({{"id", x.id}, {"kind", std::string(to_string(x.kind))}});
  json p1 = json::array();
  for (const auto& a : d.p1_arcs) {
    p1.push_back({{"src", a.src}, {"dst", a.dst}, {"symbol", a.symbol}, {"delta", a.delta}});
  }
  json p2 = json::array();
  for (const auto& a : d.p2_arcs) {
    json e = {{"src", a.src}, {"dst", a.dst}};
    if (a.decay) e["decay"] = *a.decay;
    p2.push_back(std::move(e));
  }
  return {{"id", d.id}, {"states", states}, {"s0", d.s0}, {"sStar", d.s_star},
          {"alphabet", alphabet}, {"p1Arcs", p1}, {"p2Arcs", p2}};
}

json arc_ref_json(const scenario::ArcRef& r) {
  return {{"diagram", r.diagram}, {"src", r.src}, {"dst", r.dst}};
}

json group_json(const scenario::CoupledGroup& g) {
  json children = json::array();
  for (const auto& c : g.child_arcs) children.push_back(arc_ref_json(c));
  json policy = g.policy.all() ? json("all") : json{{"atLeast", g.policy.at_least}};
  return {{"id", g.id}, {"parentArc", arc_ref_json(g.parent_arc)}, {"childArcs", children}, {"policy", policy}};
}

json rule_json(const scenario::ElementaryRule& r) {
  json out = {{"id", r.id},         {"subsystem", r.subsystem}, {"from", r.from},
              {"to", r.to},         {"action", r.action},       {"resources", r.resources},
              {"duration", r.duration}};
  if (!r.forbidden.empty()) out["forbidden"] = r.forbidden;
  return out;
}

json goal_node_json(const scenario::GoalNode& n) {
  json out = {{"id", n.id}};
  if (n.rule) out["rule"] = n.rule->id;
  if (!n.children.empty()) {
    json children = json::array();
    for (const auto& c : n.children) children.push_back(goal_node_json(c));
    out["children"] = children;
  }
  return out;
}

json matrix_json(const classify::ClassificationMatrix& m) {
  json cells = json::array();
  for (const auto& [key, f] : m.cells) {
    cells.push_back({{"row", key.first}, {"column", key.second}, {"formula", formula_json(f)}});
  }
  return {{"id", m.id}, {"rows", m.rows}, {"columns", m.columns}, {"cells", cells}};
}

json tick_or_null(const std::optional<Tick>& t) { return t ? json(*t) : json(nullptr); }

}  // namespace

// ---------------------------------------------------------------------------
// Bundle

LoadResult load_bundle_json(const json& doc, const LoadOptions& opts) {
  LoadResult out;
  Ctx ctx{opts.lenient, &out.warnings};
  Obj top(doc, "$", ctx);
  const std::string schema = top.str("schema");
  if (schema != kSchema) parse_fail("$.schema", "unsupported schema " + schema);
  ModelBundle& b = out.bundle;
  if (const json* h = top.opt("hierarchy")) b.hierarchy = read_hierarchy(*h, "$.hierarchy", ctx);
  read_collection(top, "classifiers", b.classifiers,
                  [&](const json& j, const std::string& p) { return read_classifier(j, p, ctx); });
  read_collection(top, "matrices", b.matrices,
                  [&](const json& j, const std::string& p) { return read_matrix(j, p, ctx); });
  read_collection(top, "canonicalDiagrams", b.canonical,
                  [&](const json& j, const std::string& p) { return read_canonical(j, p, ctx); });
  read_collection(top, "controlDiagrams", b.control,
                  [&](const json& j, const std::string& p) { return read_control(j, p, ctx); });
  read_collection(top, "coupledGroups", b.groups,
                  [&](const json& j, const std::string& p) { return read_group(j, p, ctx); });
  read_collection(top, "rules", b.rules,
                  [&](const json& j, const std::string& p) { return read_rule(j, p, ctx); });
  read_collection(top, "goalTrees", b.goal_trees, [&](const json& j, const std::string& p) {
    Obj o(j, p, ctx);
    scenario::GoalTree t{o.str("id"), read_goal_node(o.at("root"), o.sub("root"), ctx, b.rules)};
    o.done();
    return t;
  });
  read_collection(top, "partialDiagrams", b.partials,
                  [&](const json& j, const std::string& p) { return read_partial(j, p, ctx); });
  read_collection(top, "scenarios", b.scenarios,
                  [&](const json& j, const std::string& p) { return read_scenario(j, p, ctx); });
  top.done();

  check_refs(b);
  auto report = validate_bundle(b);
  if (!report.empty()) {
    throw Error(ErrorCode::ValidationFailed,
                "bundle failed validation (" + std::to_string(report.size()) + " problems)", report);
  }
  return out;
}

LoadResult load_bundle(std::string_view text, const LoadOptions& opts) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError, "byte " + std::to_string(e.byte) + ": " + e.what());
  }
  return load_bundle_json(doc, opts);
}

LoadResult load_bundle_file(const std::filesystem::path& path, const LoadOptions& opts) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read bundle " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return load_bundle(buf.str(), opts);
  } catch (const Error& e) {
    throw e.annotated(path.string());
  }
}

json bundle_to_json(const ModelBundle& b) {
  json out = {{"schema", std::string(kSchema)}, {"hierarchy", hierarchy_json(b.hierarchy)}};
  auto emit = [&](const char* key, const auto& coll, auto write) {
    json arr = json::array();
    for (const auto& [id, v] : coll) arr.push_back(write(v));
    out[key] = arr;
  };
  emit("classifiers", b.classifiers, [](const Classifier& c) {
    return json{{"id", c.id}, {"interval", interval_json(c.interval)}, {"tolerance", c.tolerance},
                {"scale", scale_json(c.root, c.continuations)}};
  });
  emit("matrices", b.matrices, matrix_json);
  emit("canonicalDiagrams", b.canonical, canonical_json);
  emit("controlDiagrams", b.control, control_json);
  emit("coupledGroups", b.groups, group_json);
  emit("rules", b.rules, rule_json);
  emit("goalTrees", b.goal_trees, [](const scenario::GoalTree& t) {
    return json{{"id", t.id}, {"root", goal_node_json(t.root)}};
  });
  emit("partialDiagrams", b.partials, [](const scenario::PartialDiagram& p) { return to_json(p); });
  emit("scenarios", b.scenarios, [](const ScenarioSpec& s) { return to_json(s); });
  return out;
}

std::string save_bundle(const ModelBundle& b) { return bundle_to_json(b).dump(2) + "\n"; }

// ---------------------------------------------------------------------------
// Scenarios

ScenarioSpec parse_scenario_spec(const json& doc, const LoadOptions& opts) {
  Ctx ctx{opts.lenient, nullptr};
  return read_scenario(doc, "$", ctx);
}

void check_scenario_refs(const ModelBundle& b, const ScenarioSpec& s) {
  const std::string site = "scenario " + s.id;
  std::set<std::string> symbols;
  for (const auto& d : s.diagrams) {
    auto it = b.control.find(d);
    if (it == b.control.end()) dangling("control diagram " + d, site);
    for (const auto& x : it->second.alphabet) symbols.insert(x.id);
  }
  auto in_scenario = [&](const std::string& d) {
    return std::find(s.diagrams.begin(), s.diagrams.end(), d) != s.diagrams.end();
  };
  for (const auto& gid : s.after_effect) {
    auto g = b.groups.find(gid);
    if (g == b.groups.end()) dangling("coupled group " + gid, site);
    if (!in_scenario(g->second.parent_arc.diagram)) {
      dangling("diagram " + g->second.parent_arc.diagram, site + " group " + gid);
    }
    for (const auto& c : g->second.child_arcs) {
      if (!in_scenario(c.diagram)) dangling("diagram " + c.diagram, site + " group " + gid);
    }
  }
  for (const auto& e : s.schedule) {
    const std::string at = site + " schedule at tick " + std::to_string(e.tick);
    if (!symbols.contains(e.symbol)) dangling("symbol " + e.symbol, at);
    if (e.addressee != scenario::kBroadcast && !in_scenario(e.addressee)) {
      dangling("diagram " + e.addressee, at);
    }
  }
  const ParameterHierarchy& h = s.hierarchy ? *s.hierarchy : b.hierarchy;
  for (const auto& [node, d] : s.mapping) {
    if (!h.contains(node)) dangling("hierarchy node " + node, site + " mapping");
    if (!in_scenario(d)) dangling("diagram " + d, site + " mapping");
  }
}

scenario::Scenario resolve_scenario(const ModelBundle& b, const ScenarioSpec& spec) {
  scenario::Scenario s;
  s.id = spec.id;
  for (const auto& d : spec.diagrams) {
    auto it = b.control.find(d);
    if (it == b.control.end()) dangling("control diagram " + d, "scenario " + spec.id);
    s.diagrams[d] = it->second;
  }
  s.hierarchy = spec.hierarchy ? *spec.hierarchy : b.hierarchy;
  s.mapping = spec.mapping;
  s.schedule = spec.schedule;
  for (const auto& gid : spec.after_effect) {
    auto it = b.groups.find(gid);
    if (it == b.groups.end()) dangling("coupled group " + gid, "scenario " + spec.id);
    s.after_effect.push_back(it->second);
  }
  return s;
}

scenario::Scenario resolve_scenario(const ModelBundle& b, const std::string& scenario_id) {
  auto it = b.scenarios.find(scenario_id);
  if (it == b.scenarios.end()) dangling("scenario " + scenario_id, "request");
  return resolve_scenario(b, it->second);
}

scenario::PartialDiagram parse_partial(const json& doc, const LoadOptions& opts) {
  Ctx ctx{opts.lenient, nullptr};
  return read_partial(doc, "$", ctx);
}

scenario::SystemState parse_system_state(const json& doc, const LoadOptions& opts) {
  Ctx ctx{opts.lenient, nullptr};
  Obj o(doc, "$", ctx);
  scenario::SystemState s;
  const json& states = o.at("states");
  if (!states.is_object()) parse_fail("$.states", "expected object of diagram -> state");
  for (const auto& item : states.items()) {
    s.states[item.key()] = as_string(item.value(), "$.states." + item.key());
  }
  s.pool = o.number_or("pool", 0.0);
  s.tick = o.tick_or("tick", 0);
  o.done();
  return s;
}

// ---------------------------------------------------------------------------
// Output forms

json to_json(const scenario::SystemState& s) {
  return {{"states", s.states}, {"pool", s.pool}, {"tick", s.tick}};
}

json to_json(const ScenarioSpec& s) {
  json schedule = json::array();
  for (const auto& e : s.schedule) {
    schedule.push_back({{"tick", e.tick}, {"symbol", e.symbol}, {"to", e.addressee}});
  }
  json out = {{"id", s.id},           {"diagrams", s.diagrams},         {"mapping", s.mapping},
              {"schedule", schedule}, {"afterEffect", s.after_effect}};
  if (out["mapping"].is_null()) out["mapping"] = json::object();
  if (s.hierarchy) out["hierarchy"] = hierarchy_json(*s.hierarchy);
  if (s.horizon) out["horizon"] = *s.horizon;
  return out;
}

json to_json(const scenario::PartialDiagram& p) {
  json supports = json::array();
  for (const auto& s : p.supports) {
    supports.push_back({{"diagram", s.diagram}, {"state", s.state}, {"deadline", s.deadline}});
  }
  json budget = json::object();
  if (p.budget.max_ticks != scenario::Budget{}.max_ticks) budget["maxTicks"] = p.budget.max_ticks;
  if (std::isfinite(p.budget.max_resources)) budget["maxResources"] = p.budget.max_resources;
  return {{"id", p.id}, {"supports", supports}, {"budget", budget}};
}

json to_json(const StateTrace& trace) {
  json out = json::array();
  for (const auto& e : trace) {
    json entry = {{"tick", e.tick}, {"state", e.state}, {"cause", std::string(to_string(e.cause))}};
    if (!e.detail.empty()) entry["detail"] = e.detail;
    out.push_back(std::move(entry));
  }
  return out;
}

json to_json(const scenario::Event& e) {
  json out = {{"tick", e.tick}, {"kind", std::string(to_string(e.kind))}, {"diagram", e.diagram}};
  if (!e.symbol.empty()) out["symbol"] = e.symbol;
  if (!e.src.empty()) out["src"] = e.src;
  if (!e.dst.empty()) out["dst"] = e.dst;
  if (!e.group.empty()) out["group"] = e.group;
  if (!e.detail.empty()) out["detail"] = e.detail;
  out["coupled"] = e.coupled;
  return out;
}

json to_json(const scenario::ScenarioMetrics& m) {
  return {{"completeness", m.completeness},
          {"redundancyCount", m.redundancy_count},
          {"omittedPossibilities", m.omitted_possibilities},
          {"complexness", m.complexness},
          {"coupledTransitions", m.coupled_transitions},
          {"totalTransitions", m.total_transitions}};
}

json to_json(const MetricTrace& t) {
  json out = json::array();
  for (const auto& s : t) out.push_back({{"tick", s.tick}, {"metrics", s.metrics}});
  return out;
}

json to_json(const scenario::SimulationResult& r) {
  json traces = json::object();
  for (const auto& [d, t] : r.traces) traces[d] = to_json(t);
  json events = json::array();
  for (const auto& e : r.events) events.push_back(to_json(e));
  return {{"horizon", r.horizon},
          {"metrics", to_json(r.metrics)},
          {"traces", traces},
          {"events", events},
          {"metricTrace", to_json(r.metric_trace)}};
}

json to_json(const scenario::ScenarioReport& r) {
  return {{"ok", r.ok()}, {"errors", r.errors}, {"warnings", r.warnings}};
}

json to_json(const scenario::PartialCheck& c) {
  json out = {{"verdict", c.confirmed ? "CONFIRMED" : "REFUTED"},
              {"budgetExceeded", c.budget_exceeded},
              {"metAt", c.met_at}};
  out["firstMiss"] = c.first_miss ? json(*c.first_miss) : json(nullptr);
  out["actualState"] = c.actual_state ? json(*c.actual_state) : json(nullptr);
  return out;
}

json to_json(const scenario::ForecastResult& f) {
  json out = {{"feasible", f.feasible}, {"prefix", f.prefix}};
  if (f.feasible) {
    json plan = json::array();
    for (const auto& s : f.plan) {
      plan.push_back({{"rule", s.rule}, {"subsystem", s.subsystem}, {"from", s.from}, {"to", s.to},
                      {"start", s.start}, {"end", s.end}, {"cumulativeResources", s.cumulative_resources}});
    }
    json chain = json::array();
    for (const auto& l : f.chain) chain.push_back({{"from", l.from}, {"to", l.to}, {"delta", l.delta}});
    json predicted = json::object();
    for (const auto& [d, t] : f.predicted) predicted[d] = to_json(t);
    out["plan"] = plan;
    out["ticks"] = f.ticks;
    out["resources"] = f.resources;
    out["supportTicks"] = f.support_ticks;
    out["chain"] = chain;
    out["predicted"] = predicted;
  } else {
    out["frontier"] = f.frontier;
  }
  return out;
}

json to_json(const scenario::GoalReport& g) {
  json applied = json::array();
  for (const auto& a : g.applied) {
    json e = {{"node", a.node}, {"rule", a.rule}, {"start", a.start}, {"finished", a.finished}, {"spent", a.spent}};
    e["failure"] = a.failure ? json(std::string(to_string(*a.failure))) : json(nullptr);
    applied.push_back(std::move(e));
  }
  json traces = json::object();
  for (const auto& [d, t] : g.traces) traces[d] = to_json(t);
  json out = {{"success", g.success},       {"applied", applied},
              {"skipped", g.skipped},       {"nodeSuccess", g.node_success},
              {"finalState", to_json(g.final_state)}, {"spent", g.spent},
              {"traces", traces}};
  out["firstFailure"] = g.first_failure ? json(*g.first_failure) : json(nullptr);
  return out;
}

json to_json(const Distribution& d) {
  json out = json::object();
  for (const auto& [state, objs] : d.assignment) out[state] = std::vector<std::string>(objs.begin(), objs.end());
  return out;
}

json to_json(const ArcCounters& c) {
  json arcs = json::array();
  for (const auto& [key, n] : c.per_arc) arcs.push_back({{"src", key.first}, {"dst", key.second}, {"count", n}});
  json states = json::object();
  for (const auto& [state, series] : c.per_state) {
    json s = json::array();
    for (const auto& [t, n] : series) s.push_back({{"tick", t}, {"count", n}});
    states[state] = s;
  }
  return {{"arcs", arcs}, {"occupancy", states}};
}

json to_json(const classify::DivergenceReport& r) {
  json ticks = json::array();
  for (const auto& t : r.ticks) {
    json states = json::array();
    for (const auto& s : t.states) {
      states.push_back({{"state", s.state}, {"required", s.required}, {"actual", s.actual}, {"deviation", s.deviation}});
    }
    json misplaced = json::array();
    for (const auto& m : t.misplaced) {
      misplaced.push_back({{"object", m.object}, {"required", m.src}, {"observed", m.dst}});
    }
    ticks.push_back({{"scheduledTick", t.scheduled_tick}, {"actualTick", t.actual_tick},
                     {"matches", t.matches}, {"states", states}, {"misplaced", misplaced}});
  }
  return {{"verdict", r.confirmed ? "CONFIRMED" : "REFUTED"},
          {"firstViolation", tick_or_null(r.first_violation)},
          {"ticks", ticks}};
}

}  // namespace hierion::io
