#include "hierion/api.hpp"

#include <vector>

#include "hierion/codec.hpp"
#include "hierion/error.hpp"
#include "hierion/retrospect.hpp"
#include "hierion/rules.hpp"
#include "hierion/scenario.hpp"
#include "hierion/store.hpp"
#include "httplib.h"

namespace hierion::api {

using io::json;

namespace {

struct Run {
  std::string id;
  std::string scenario;
  scenario::SimulationResult result;
};

struct Session {
  std::mutex mu;
  io::ModelBundle bundle;
  std::optional<io::ScenarioSpec> draft;
  std::vector<Run> runs;
};

struct HttpError {
  int status;
  json body;
};

[[noreturn]] void not_found(const std::string& what) {
  throw HttpError{404, {{"code", "NotFound"}, {"message", what}}};
}

[[noreturn]] void bad_request(const std::string& what) {
  throw HttpError{400, {{"code", "BadRequest"}, {"message", what}}};
}

int status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::ParseError:
    case ErrorCode::InvalidArgument:
      return 400;
    case ErrorCode::AmbiguousArc:
      return 409;
    default:
      return 422;
  }
}

Response reply(int status, const json& body) { return {status, body.dump(), "application/json"}; }

Response error_reply(const Error& e) {
  json body = {{"code", std::string(to_string(e.code()))}, {"message", e.what()}};
  if (!e.report().empty()) body["report"] = e.report();
  if (e.tick()) body["tick"] = *e.tick();
  return reply(status_for(e.code()), body);
}

std::string url_decode(std::string_view s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '+') {
      out += ' ';
    } else if (s[i] == '%' && i + 2 < s.size()) {
      out += static_cast<char>(std::stoi(std::string(s.substr(i + 1, 2)), nullptr, 16));
      i += 2;
    } else {
      out += s[i];
    }
  }
  return out;
}

std::vector<std::string> split_path(std::string_view path) {
  std::vector<std::string> parts;
  std::size_t pos = 0;
  while (pos <= path.size()) {
    const std::size_t next = path.find('/', pos);
    const std::size_t end = next == std::string_view::npos ? path.size() : next;
    if (end > pos) parts.push_back(url_decode(path.substr(pos, end - pos)));
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  return parts;
}

std::map<std::string, std::string> parse_query(std::string_view q) {
  std::map<std::string, std::string> out;
  while (!q.empty()) {
    const std::size_t amp = q.find('&');
    const std::string_view part = q.substr(0, amp);
    q = amp == std::string_view::npos ? std::string_view{} : q.substr(amp + 1);
    if (part.empty()) continue;
    const std::size_t eq = part.find('=');
    out[url_decode(part.substr(0, eq))] = eq == std::string_view::npos ? "" : url_decode(part.substr(eq + 1));
  }
  return out;
}

json parse_body(const std::string& body) {
  try {
    return body.empty() ? json::object() : json::parse(body);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError, std::string("request body: ") + e.what());
  }
}

std::size_t parse_count(const std::string& text, const char* name) {
  std::size_t used = 0;
  long long v = 0;
  try {
    v = std::stoll(text, &used);
  } catch (const std::exception&) {
    bad_request(std::string(name) + " must be an integer");
  }
  if (used != text.size() || v < 1) bad_request(std::string(name) + " must be a positive integer");
  return static_cast<std::size_t>(v);
}

}  // namespace

struct Server::Impl {
  ServerOptions opts;
  std::mutex sessions_mu;
  std::map<std::string, std::shared_ptr<Session>> sessions;
  std::uint64_t next_session = 0;
  httplib::Server http;

  std::shared_ptr<Session> session(const std::string& id) {
    std::lock_guard lock(sessions_mu);
    auto it = sessions.find(id);
    if (it == sessions.end()) not_found("unknown session " + id);
    return it->second;
  }

  Response create_session(const std::string& body) {
    io::LoadResult loaded = io::load_bundle(body);
    auto s = std::make_shared<Session>();
    s->bundle = std::move(loaded.bundle);
    std::string id;
    {
      std::lock_guard lock(sessions_mu);
      id = "s" + std::to_string(++next_session);
      sessions[id] = s;
    }
    return reply(201, {{"session", id}, {"warnings", loaded.warnings}});
  }

  Response put_scenario(Session& s, const std::string& body) {
    io::ScenarioSpec spec = io::parse_scenario_spec(parse_body(body));
    io::check_scenario_refs(s.bundle, spec);
    auto report = scenario::validate_scenario(io::resolve_scenario(s.bundle, spec));
    if (!report.ok()) {
      throw Error(ErrorCode::ValidationFailed, "scenario " + spec.id + " failed validation", report.errors);
    }
    s.draft = std::move(spec);
    return reply(200, io::to_json(report));
  }

  Response simulate(Session& s, const std::string& body) {
    const json req = parse_body(body);
    if (!req.is_object()) bad_request("body must be an object");
    io::ScenarioSpec spec;
    if (req.contains("scenario")) {
      const std::string sid = req.at("scenario").get<std::string>();
      auto it = s.bundle.scenarios.find(sid);
      if (it == s.bundle.scenarios.end()) not_found("unknown scenario " + sid);
      spec = it->second;
    } else if (s.draft) {
      spec = *s.draft;
    } else if (s.bundle.scenarios.size() == 1) {
      spec = s.bundle.scenarios.begin()->second;
    } else {
      bad_request("no scenario draft; name one with \"scenario\"");
    }
    Tick horizon = 0;
    if (req.contains("horizon")) {
      if (!req.at("horizon").is_number_integer()) bad_request("horizon must be an integer");
      horizon = req.at("horizon").get<Tick>();
    } else if (spec.horizon) {
      horizon = *spec.horizon;
    } else {
      for (const auto& e : spec.schedule) horizon = std::max(horizon, e.tick);
    }
    scenario::SimulationOptions opts;
    if (req.contains("lenient")) opts.lenient_general = req.at("lenient").get<bool>();
    Run run;
    run.id = "r" + std::to_string(s.runs.size() + 1);
    run.scenario = spec.id;
    run.result = scenario::simulate(io::resolve_scenario(s.bundle, spec), horizon, opts);
    json out = {{"runId", run.id}, {"scenario", run.scenario}, {"horizon", horizon},
                {"metrics", io::to_json(run.result.metrics)}};
    s.runs.push_back(std::move(run));
    return reply(200, out);
  }

  const Run& find_run(Session& s, const std::string& rid) {
    for (const auto& r : s.runs) {
      if (r.id == rid) return r;
    }
    not_found("unknown run " + rid);
  }

  Response trace_page(Session& s, const std::string& rid, const std::map<std::string, std::string>& q) {
    const Run& run = find_run(s, rid);
    const std::size_t page = q.contains("page") ? parse_count(q.at("page"), "page") : 1;
    json items = json::array();
    json out = {{"runId", rid}, {"page", page}, {"pageSize", opts.page_size}};
    if (q.contains("diagram") && !q.at("diagram").empty()) {
      const std::string& d = q.at("diagram");
      auto it = run.result.traces.find(d);
      if (it == run.result.traces.end()) not_found("run " + rid + " has no diagram " + d);
      items = io::to_json(it->second);
      out["diagram"] = d;
    } else {
      for (const auto& e : run.result.events) items.push_back(io::to_json(e));
    }
    const std::size_t total = items.size();
    const std::size_t first = (page - 1) * opts.page_size;
    json slice = json::array();
    for (std::size_t i = first; i < total && i < first + opts.page_size; ++i) slice.push_back(items[i]);
    out["total"] = total;
    out["pages"] = total == 0 ? 1 : (total + opts.page_size - 1) / opts.page_size;
    out[out.contains("diagram") ? "trace" : "events"] = slice;
    return reply(200, out);
  }

  Response run_summary(Session& s, const std::string& rid) {
    const Run& run = find_run(s, rid);
    return reply(200, {{"runId", rid},
                       {"scenario", run.scenario},
                       {"horizon", run.result.horizon},
                       {"metrics", io::to_json(run.result.metrics)},
                       {"metricTrace", io::to_json(run.result.metric_trace)}});
  }

  Response forecast(Session& s, const std::string& body) {
    const json req = parse_body(body);
    if (!req.is_object() || !req.contains("initial") || !req.contains("partialDiagram")) {
      bad_request("body needs initial and partialDiagram");
    }
    scenario::SystemState initial = io::parse_system_state(req.at("initial"));
    scenario::PartialDiagram partial;
    const json& pd = req.at("partialDiagram");
    if (pd.is_string()) {
      auto it = s.bundle.partials.find(pd.get<std::string>());
      if (it == s.bundle.partials.end()) not_found("unknown partial diagram " + pd.get<std::string>());
      partial = it->second;
    } else {
      partial = io::parse_partial(pd);
    }
    scenario::ForecastOptions opts;
    opts.decay = scenario::DecayModel::from(s.bundle.control);
    if (req.contains("order")) {
      const std::string order = req.at("order").get<std::string>();
      if (order == "resources") {
        opts.order = scenario::CostOrder::ResourcesThenTicks;
      } else if (order != "ticks") {
        bad_request("order must be ticks or resources");
      }
    }
    std::vector<scenario::ElementaryRule> rules;
    for (const auto& [id, r] : s.bundle.rules) rules.push_back(r);
    return reply(200, io::to_json(scenario::forecast(initial, rules, partial, opts)));
  }

  Response retrospect(Session& s, const std::string& body) {
    const json req = parse_body(body);
    if (!req.is_object() || !req.contains("diagram")) bad_request("body needs diagram");
    io::RetrospectRequest r;
    r.diagram = req.at("diagram").get<std::string>();
    if (req.contains("interval")) {
      r.interval = TimeInterval{req.at("interval").at("start").get<Tick>(), req.at("interval").at("end").get<Tick>()};
    }
    if (req.contains("snapshots")) r.snapshots = req.at("snapshots").get<std::vector<Tick>>();
    io::EventStore store;
    if (req.contains("store")) {
      store = io::EventStore::open(req.at("store").get<std::string>());
    }
    json ingest = nullptr;
    if (req.contains("csv")) {
      io::ColumnMapping mapping;
      if (req.contains("mapping")) {
        const json& m = req.at("mapping");
        mapping.source = m.value("source", mapping.source);
        mapping.object = m.value("object", mapping.object);
        mapping.parameter = m.value("parameter", mapping.parameter);
        mapping.tick = m.value("tick", mapping.tick);
        mapping.value = m.value("value", mapping.value);
        if (m.contains("fixedSource")) mapping.fixed_source = m.at("fixedSource").get<std::string>();
      }
      io::EventStore scratch;
      for (const auto& rec : store.records()) scratch.append({rec});
      auto rep = io::ingest_monitoring(scratch, req.at("csv").get<std::string>(), mapping);
      store = std::move(scratch);
      json rejects = json::array();
      for (const auto& x : rep.rejects) rejects.push_back({{"row", x.row}, {"reason", x.reason}});
      ingest = {{"ingested", rep.ingested}, {"duplicates", rep.duplicates}, {"rejects", rejects}};
    }
    json out = io::to_json(io::retrospect(s.bundle, store, r));
    if (!ingest.is_null()) out["ingest"] = ingest;
    return reply(200, out);
  }

  Response route(const std::string& method, const std::vector<std::string>& p,
                 const std::map<std::string, std::string>& q, const std::string& body) {
    if (p.size() == 1 && p[0] == "sessions" && method == "POST") return create_session(body);
    if (p.size() < 2 || p[0] != "sessions") not_found("no route");
    auto s = session(p[1]);
    std::lock_guard lock(s->mu);
    if (p.size() == 3 && p[2] == "model" && method == "GET") return reply(200, io::bundle_to_json(s->bundle));
    if (p.size() == 3 && p[2] == "scenario" && method == "PUT") return put_scenario(*s, body);
    if (p.size() == 3 && p[2] == "scenario" && method == "GET") {
      if (!s->draft) not_found("session has no scenario draft");
      return reply(200, io::to_json(*s->draft));
    }
    if (p.size() == 3 && p[2] == "simulate" && method == "POST") return simulate(*s, body);
    if (p.size() == 3 && p[2] == "runs" && method == "GET") {
      json runs = json::array();
      for (const auto& r : s->runs) {
        runs.push_back({{"runId", r.id}, {"scenario", r.scenario}, {"metrics", io::to_json(r.result.metrics)}});
      }
      return reply(200, {{"runs", runs}});
    }
    if (p.size() == 4 && p[2] == "runs" && method == "GET") return run_summary(*s, p[3]);
    if (p.size() == 5 && p[2] == "runs" && p[4] == "trace" && method == "GET") return trace_page(*s, p[3], q);
    if (p.size() == 3 && p[2] == "forecast" && method == "POST") return forecast(*s, body);
    if (p.size() == 3 && p[2] == "retrospect" && method == "POST") return retrospect(*s, body);
    not_found("no route " + method + " /" + [&] {
      std::string joined;
      for (const auto& part : p) joined += (joined.empty() ? "" : "/") + part;
      return joined;
    }());
  }
};

Server::Server(ServerOptions opts) : impl_(std::make_unique<Impl>()) {
  impl_->opts = std::move(opts);
  if (impl_->opts.page_size == 0) impl_->opts.page_size = 500;
  auto bridge = [this](const httplib::Request& req, httplib::Response& res) {
    std::string target = req.path;
    if (!req.params.empty()) {
      std::string q;
      for (const auto& [k, v] : req.params) q += (q.empty() ? "" : "&") + httplib::detail::encode_query_param(k) + "=" + httplib::detail::encode_query_param(v);
      target += "?" + q;
    }
    Response r = handle(req.method, target, req.body);
    res.status = r.status;
    res.set_content(r.body, r.content_type);
  };
  impl_->http.Get(R"(/sessions.*)", bridge);
  impl_->http.Post(R"(/sessions.*)", bridge);
  impl_->http.Put(R"(/sessions.*)", bridge);
  if (impl_->opts.static_dir) impl_->http.set_mount_point("/static", impl_->opts.static_dir->string());
}

Server::~Server() { stop(); }

Response Server::handle(const std::string& method, const std::string& target, const std::string& body) {
  const std::size_t qpos = target.find('?');
  const auto parts = split_path(std::string_view(target).substr(0, qpos));
  const auto query = qpos == std::string::npos ? std::map<std::string, std::string>{}
                                               : parse_query(std::string_view(target).substr(qpos + 1));
  try {
    return impl_->route(method, parts, query, body);
  } catch (const HttpError& e) {
    return reply(e.status, e.body);
  } catch (const Error& e) {
    return error_reply(e);
  } catch (const json::exception& e) {
    return reply(400, {{"code", "BadRequest"}, {"message", e.what()}});
  }
}

bool Server::listen(const std::string& host, int port) { return impl_->http.listen(host, port); }
int Server::bind_any(const std::string& host) { return impl_->http.bind_to_any_port(host); }
bool Server::listen_after_bind() { return impl_->http.listen_after_bind(); }
void Server::stop() {
  if (impl_->http.is_running()) impl_->http.stop();
}
bool Server::running() const { return impl_->http.is_running(); }

}  // namespace hierion::api
