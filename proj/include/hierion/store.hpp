#pragma once

// Monitoring event store: an append-only JSON-lines log with an in-memory
// index rebuilt on open, and CSV ingestion into it.

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <tuple>
#include <vector>

#include "hierion/model.hpp"

namespace hierion::io {

struct MonitoringRecord {
  std::string source;
  std::string object;
  std::string parameter;
  Tick tick = 0;
  double value = 0.0;

  auto key() const { return std::tie(source, object, parameter, tick); }
  bool operator==(const MonitoringRecord&) const = default;
};

class EventStore {
 public:
  // In-memory store with no backing file.
  EventStore() = default;
  // Reads the log if it exists; appends go to it. Throws IoError or
  // UnreadableInput on a corrupt log line.
  static EventStore open(const std::filesystem::path& log);

  // Re-reads the backing log, picking up records appended by other writers.
  void refresh();

  // Appends records whose (source, object, parameter, tick) key is new and
  // returns how many were new.
  std::size_t append(const std::vector<MonitoringRecord>& records);

  bool contains(const MonitoringRecord& r) const;
  std::size_t size() const { return records_.size(); }
  const std::vector<MonitoringRecord>& records() const { return records_; }

  // Points in [interval.start, interval.end], strictly tick-increasing. When
  // several sources report the same tick the first stored value is kept.
  Series query_series(const std::string& object, const std::string& parameter,
                      TimeInterval interval) const;
  std::vector<std::string> objects() const;
  std::set<std::string> parameters(const std::string& object) const;

 private:
  void index(const MonitoringRecord& r);

  std::optional<std::filesystem::path> log_;
  std::vector<MonitoringRecord> records_;
  std::set<std::tuple<std::string, std::string, std::string, Tick>> keys_;
  std::map<std::pair<std::string, std::string>, std::map<Tick, double>> series_;
};

// CSV column names for each record field. When `fixed_source` is set the
// source column is not read.
struct ColumnMapping {
  std::string source = "source";
  std::string object = "object";
  std::string parameter = "parameter";
  std::string tick = "tick";
  std::string value = "value";
  std::optional<std::string> fixed_source;
};

struct RowReject {
  // 1-based line number; the header is line 1.
  std::size_t row = 0;
  std::string reason;

  bool operator==(const RowReject&) const = default;
};

struct IngestReport {
  std::size_t ingested = 0;
  std::size_t duplicates = 0;
  std::vector<RowReject> rejects;
};

// Parses CSV text with a header row. Throws UnreadableInput when the header
// is missing or lacks a mapped column.
std::vector<MonitoringRecord> parse_monitoring_csv(std::string_view csv, const ColumnMapping& mapping,
                                                   std::vector<RowReject>& rejects);
IngestReport ingest_monitoring(EventStore& store, std::string_view csv, const ColumnMapping& mapping = {});
// Throws UnreadableInput when the file cannot be read.
IngestReport ingest_monitoring_file(EventStore& store, const std::filesystem::path& csv,
                                    const ColumnMapping& mapping = {});

}  // namespace hierion::io
