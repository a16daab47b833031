#include "hierion/retrospect.hpp"

#include <algorithm>
#include <map>
#include <tuple>

#include "hierion/error.hpp"

namespace hierion::io {

namespace {

template <typename F>
auto staged(const std::string& stage, F&& f) {
  try {
    return f();
  } catch (const Error& e) {
    throw e.annotated("stage " + stage);
  }
}

json moves_json(const std::vector<Move>& moves) {
  json out = json::array();
  for (const auto& m : moves) out.push_back({{"object", m.object}, {"src", m.src}, {"dst", m.dst}});
  return out;
}

// The report's tables are read back by key so export works on saved files.
const json& require(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) {
    throw Error(ErrorCode::MissingReport, std::string("report lacks field ") + key);
  }
  return j.at(key);
}

}  // namespace

RetrospectReport retrospect(const ModelBundle& bundle, const EventStore& store,
                            const RetrospectRequest& request) {
  RetrospectReport out;
  out.diagram = request.diagram;
  auto dit = bundle.canonical.find(request.diagram);
  if (dit == bundle.canonical.end()) {
    throw Error(ErrorCode::DanglingReference, "unknown canonical diagram " + request.diagram);
  }
  const CanonicalDiagram& diagram = dit->second;
  if (diagram.classifier.empty()) {
    throw Error(ErrorCode::InvalidArgument, "canonical diagram " + diagram.id + " names no classifier");
  }
  const classify::Classifier& classifier = bundle.classifiers.at(diagram.classifier);
  out.classifier = classifier.id;

  std::vector<Tick> ticks = request.snapshots;
  if (ticks.empty()) {
    for (const auto& s : diagram.target_schedule) ticks.push_back(s.tick);
  }
  if (ticks.empty()) {
    throw Error(ErrorCode::EmptySchedule, "no snapshot ticks and no target schedule for " + diagram.id);
  }
  std::sort(ticks.begin(), ticks.end());
  ticks.erase(std::unique(ticks.begin(), ticks.end()), ticks.end());
  out.interval = request.interval.value_or(TimeInterval{0, ticks.back()});
  if (!out.interval.valid()) throw Error(ErrorCode::InvalidArgument, "analysis interval is empty");
  for (Tick t : ticks) {
    if (!out.interval.contains(t)) {
      throw Error(ErrorCode::InvalidArgument,
                  "snapshot tick " + std::to_string(t) + " lies outside the analysis interval");
    }
  }

  const auto params = classifier.parameters();
  std::vector<TrackedObject> objects = staged("query", [&] {
    std::vector<TrackedObject> found;
    for (const auto& id : store.objects()) {
      TrackedObject o;
      o.id = id;
      for (const auto& p : params) {
        Series s = store.query_series(id, p, out.interval);
        if (!s.empty()) o.series[p] = std::move(s);
      }
      if (!o.series.empty()) found.push_back(std::move(o));
    }
    if (found.empty()) {
      throw Error(ErrorCode::MissingData, "store holds no series for the parameters of classifier " +
                                              classifier.id);
    }
    return found;
  });

  const Tick span = classifier.interval.length();
  std::vector<classify::Snapshot> snapshots;
  for (Tick t : ticks) {
    SnapshotResult snap;
    snap.tick = t;
    snap.window = {std::max(out.interval.start, t - span), t};
    snap.distribution = staged("classify", [&] {
      try {
        return classify::distribute(objects, classifier, snap.window);
      } catch (const Error& e) {
        throw e.annotated("tick " + std::to_string(t));
      }
    });
    const Distribution& prev =
        out.snapshots.empty() ? snap.distribution : out.snapshots.back().distribution;
    auto update = staged("count", [&] {
      return classify::update_counters(diagram, prev, snap.distribution, std::move(out.counters), t);
    });
    out.counters = std::move(update.counters);
    snap.moves = std::move(update.moves);
    snap.anomalies = std::move(update.anomalies);
    snapshots.push_back({t, snap.distribution});
    out.snapshots.push_back(std::move(snap));
  }
  out.divergence = staged("compare", [&] { return classify::compare_with_canonical(snapshots, diagram); });
  return out;
}

json to_json(const RetrospectReport& r) {
  json snaps = json::array();
  for (const auto& s : r.snapshots) {
    std::map<std::pair<std::string, std::string>, std::size_t> flows;
    for (const auto& m : s.moves) {
      if (std::find(s.anomalies.begin(), s.anomalies.end(), m) == s.anomalies.end()) {
        ++flows[{m.src, m.dst}];
      }
    }
    json fl = json::array();
    for (const auto& [key, n] : flows) fl.push_back({{"src", key.first}, {"dst", key.second}, {"count", n}});
    snaps.push_back({{"tick", s.tick},
                     {"window", {{"start", s.window.start}, {"end", s.window.end}}},
                     {"distribution", to_json(s.distribution)},
                     {"moves", moves_json(s.moves)},
                     {"anomalies", moves_json(s.anomalies)},
                     {"flows", fl}});
  }
  return {{"kind", "retrospect"},
          {"diagram", r.diagram},
          {"classifier", r.classifier},
          {"interval", {{"start", r.interval.start}, {"end", r.interval.end}}},
          {"verdict", r.divergence.confirmed ? "CONFIRMED" : "REFUTED"},
          {"snapshots", snaps},
          {"counters", to_json(r.counters)},
          {"divergence", to_json(r.divergence)}};
}

std::string occupancy_csv(const json& report) {
  const json& occ = require(require(report, "counters"), "occupancy");
  std::vector<std::tuple<Tick, std::string, std::uint64_t>> rows;
  for (const auto& item : occ.items()) {
    for (const auto& e : item.value()) {
      rows.emplace_back(e.at("tick").get<Tick>(), item.key(), e.at("count").get<std::uint64_t>());
    }
  }
  std::sort(rows.begin(), rows.end());
  std::string out = "tick,state,count\n";
  for (const auto& [t, s, n] : rows) out += std::to_string(t) + "," + s + "," + std::to_string(n) + "\n";
  return out;
}

std::string flows_csv(const json& report) {
  std::string out = "tick,src,dst,count\n";
  for (const auto& s : require(report, "snapshots")) {
    const Tick t = s.at("tick").get<Tick>();
    for (const auto& f : s.at("flows")) {
      out += std::to_string(t) + "," + f.at("src").get<std::string>() + "," +
             f.at("dst").get<std::string>() + "," + std::to_string(f.at("count").get<std::uint64_t>()) + "\n";
    }
  }
  return out;
}

std::string metrics_csv(const json& simulation) {
  std::string out = "tick,metric,value\n";
  for (const auto& s : require(simulation, "metricTrace")) {
    const Tick t = s.at("tick").get<Tick>();
    for (const auto& item : s.at("metrics").items()) {
      out += std::to_string(t) + "," + item.key() + "," + item.value().dump() + "\n";
    }
  }
  return out;
}

}  // namespace hierion::io
