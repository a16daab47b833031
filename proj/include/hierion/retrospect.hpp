#pragma once

// Retrospective analysis: stored monitoring series are classified at each
// snapshot tick, counted along the canonical diagram and compared with its
// target schedule.

#include <optional>
#include <string>
#include <vector>

#include "hierion/classify.hpp"
#include "hierion/codec.hpp"
#include "hierion/store.hpp"

namespace hierion::io {

struct RetrospectRequest {
  std::string diagram;
  // Analysis interval; defaults to [0, last snapshot].
  std::optional<TimeInterval> interval;
  // Defaults to the ticks of the diagram's target schedule.
  std::vector<Tick> snapshots;
};

struct SnapshotResult {
  Tick tick = 0;
  TimeInterval window;
  Distribution distribution;
  std::vector<Move> moves;
  std::vector<Move> anomalies;
};

struct RetrospectReport {
  std::string diagram;
  std::string classifier;
  TimeInterval interval;
  std::vector<SnapshotResult> snapshots;
  ArcCounters counters;
  classify::DivergenceReport divergence;
};

// Window at snapshot t: [max(interval.start, t - L), t] where L is the length
// of the classifier's interval. Errors from each stage are rethrown with a
// "stage <name>" prefix; an empty store yields MissingData.
RetrospectReport retrospect(const ModelBundle& bundle, const EventStore& store,
                            const RetrospectRequest& request);

json to_json(const RetrospectReport& r);

// Long-format tables: tick,state,count and tick,src,dst,count.
std::string occupancy_csv(const json& report);
std::string flows_csv(const json& report);
// tick,metric,value from a simulation result's metric trace.
std::string metrics_csv(const json& simulation);

}  // namespace hierion::io
