#include "hierion/store.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "hierion/error.hpp"
#include "json.hpp"

namespace hierion::io {

using nlohmann::json;

namespace {

std::string read_file(const std::filesystem::path& path, ErrorCode code) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(code, "cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

MonitoringRecord record_from_line(const std::string& line, std::size_t lineno,
                                  const std::filesystem::path& path) {
  try {
    json j = json::parse(line);
    return {j.at("source").get<std::string>(), j.at("object").get<std::string>(),
            j.at("parameter").get<std::string>(), j.at("tick").get<Tick>(),
            j.at("value").get<double>()};
  } catch (const json::exception& e) {
    throw Error(ErrorCode::UnreadableInput,
                path.string() + ":" + std::to_string(lineno) + ": corrupt log line: " + e.what());
  }
}

std::string record_line(const MonitoringRecord& r) {
  json j = {{"source", r.source}, {"object", r.object}, {"parameter", r.parameter},
            {"tick", r.tick},     {"value", r.value}};
  return j.dump();
}

// Splits one CSV record. Quoted fields may contain commas and doubled quotes.
std::optional<std::vector<std::string>> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (quoted) return std::nullopt;
  fields.push_back(std::move(cur));
  return fields;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

}  // namespace

EventStore EventStore::open(const std::filesystem::path& log) {
  EventStore s;
  s.log_ = log;
  s.refresh();
  return s;
}

void EventStore::refresh() {
  if (!log_) return;
  records_.clear();
  keys_.clear();
  series_.clear();
  if (!std::filesystem::exists(*log_)) return;
  std::istringstream in(read_file(*log_, ErrorCode::IoError));
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    MonitoringRecord r = record_from_line(line, lineno, *log_);
    if (keys_.insert({r.source, r.object, r.parameter, r.tick}).second) index(r);
  }
}

void EventStore::index(const MonitoringRecord& r) {
  series_[{r.object, r.parameter}].emplace(r.tick, r.value);
  records_.push_back(r);
}

std::size_t EventStore::append(const std::vector<MonitoringRecord>& records) {
  std::vector<const MonitoringRecord*> fresh;
  std::set<std::tuple<std::string, std::string, std::string, Tick>> batch;
  for (const auto& r : records) {
    auto key = std::make_tuple(r.source, r.object, r.parameter, r.tick);
    if (keys_.contains(key) || !batch.insert(key).second) continue;
    fresh.push_back(&r);
  }
  if (log_ && !fresh.empty()) {
    std::ofstream out(*log_, std::ios::app | std::ios::binary);
    if (!out) throw Error(ErrorCode::IoError, "cannot append to " + log_->string());
    for (const auto* r : fresh) out << record_line(*r) << '\n';
    if (!out) throw Error(ErrorCode::IoError, "write failed on " + log_->string());
  }
  for (const auto* r : fresh) {
    keys_.insert({r->source, r->object, r->parameter, r->tick});
    index(*r);
  }
  return fresh.size();
}

bool EventStore::contains(const MonitoringRecord& r) const {
  return keys_.contains({r.source, r.object, r.parameter, r.tick});
}

Series EventStore::query_series(const std::string& object, const std::string& parameter,
                                TimeInterval interval) const {
  Series out;
  auto it = series_.find({object, parameter});
  if (it == series_.end() || interval.end < interval.start) return out;
  for (auto p = it->second.lower_bound(interval.start);
       p != it->second.end() && p->first <= interval.end; ++p) {
    out.push_back({p->first, p->second});
  }
  return out;
}

std::vector<std::string> EventStore::objects() const {
  std::set<std::string> ids;
  for (const auto& [key, points] : series_) ids.insert(key.first);
  return {ids.begin(), ids.end()};
}

std::set<std::string> EventStore::parameters(const std::string& object) const {
  std::set<std::string> out;
  for (const auto& [key, points] : series_) {
    if (key.first == object) out.insert(key.second);
  }
  return out;
}

std::vector<MonitoringRecord> parse_monitoring_csv(std::string_view csv, const ColumnMapping& mapping,
                                                   std::vector<RowReject>& rejects) {
  std::vector<MonitoringRecord> out;
  std::size_t pos = 0;
  std::size_t lineno = 0;
  auto next_line = [&](std::string_view& line) {
    if (pos >= csv.size()) return false;
    const std::size_t nl = csv.find('\n', pos);
    const std::size_t end = nl == std::string_view::npos ? csv.size() : nl;
    line = csv.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos = end + 1;
    ++lineno;
    return true;
  };

  std::string_view line;
  if (!next_line(line) || trim(line).empty()) {
    throw Error(ErrorCode::UnreadableInput, "monitoring input has no header row");
  }
  auto header = split_csv_line(line);
  if (!header) throw Error(ErrorCode::UnreadableInput, "unterminated quote in header row");
  std::map<std::string, std::size_t> column;
  for (std::size_t i = 0; i < header->size(); ++i) column[std::string(trim((*header)[i]))] = i;
  auto locate = [&](const std::string& name) {
    auto it = column.find(name);
    if (it == column.end()) throw Error(ErrorCode::UnreadableInput, "header lacks column " + name);
    return it->second;
  };
  const std::optional<std::size_t> c_source =
      mapping.fixed_source ? std::nullopt : std::optional<std::size_t>(locate(mapping.source));
  const std::size_t c_object = locate(mapping.object);
  const std::size_t c_parameter = locate(mapping.parameter);
  const std::size_t c_tick = locate(mapping.tick);
  const std::size_t c_value = locate(mapping.value);

  while (next_line(line)) {
    if (trim(line).empty()) continue;
    auto fields = split_csv_line(line);
    if (!fields) {
      rejects.push_back({lineno, "unterminated quote"});
      continue;
    }
    if (fields->size() != header->size()) {
      rejects.push_back({lineno, "expected " + std::to_string(header->size()) + " fields, found " +
                                     std::to_string(fields->size())});
      continue;
    }
    auto field = [&](std::size_t i) { return trim((*fields)[i]); };
    MonitoringRecord r;
    r.source = mapping.fixed_source ? *mapping.fixed_source : std::string(field(*c_source));
    r.object = std::string(field(c_object));
    r.parameter = std::string(field(c_parameter));
    if (r.source.empty() || r.object.empty() || r.parameter.empty()) {
      rejects.push_back({lineno, "empty source, object or parameter"});
      continue;
    }
    const std::string_view tick = field(c_tick);
    auto [tp, tec] = std::from_chars(tick.data(), tick.data() + tick.size(), r.tick);
    if (tec != std::errc() || tp != tick.data() + tick.size()) {
      rejects.push_back({lineno, "tick is not an integer: " + std::string(tick)});
      continue;
    }
    if (r.tick < 0) {
      rejects.push_back({lineno, "negative tick"});
      continue;
    }
    std::string_view value = field(c_value);
    if (!value.empty() && value.front() == '+') value.remove_prefix(1);
    auto [vp, vec] = std::from_chars(value.data(), value.data() + value.size(), r.value);
    if (vec != std::errc() || vp != value.data() + value.size() || value.empty()) {
      rejects.push_back({lineno, "value is not a number: " + std::string(field(c_value))});
      continue;
    }
    if (!std::isfinite(r.value)) {
      rejects.push_back({lineno, "value is not finite"});
      continue;
    }
    out.push_back(std::move(r));
  }
  return out;
}

IngestReport ingest_monitoring(EventStore& store, std::string_view csv, const ColumnMapping& mapping) {
  IngestReport report;
  auto records = parse_monitoring_csv(csv, mapping, report.rejects);
  report.ingested = store.append(records);
  report.duplicates = records.size() - report.ingested;
  return report;
}

IngestReport ingest_monitoring_file(EventStore& store, const std::filesystem::path& csv,
                                    const ColumnMapping& mapping) {
  return ingest_monitoring(store, read_file(csv, ErrorCode::UnreadableInput), mapping);
}

}  // namespace hierion::io
