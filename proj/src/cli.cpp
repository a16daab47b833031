#include "hierion/cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "hierion/api.hpp"
#include "hierion/codec.hpp"
#include "hierion/error.hpp"
#include "hierion/retrospect.hpp"
#include "hierion/rules.hpp"
#include "hierion/scenario.hpp"
#include "hierion/store.hpp"

namespace hierion::cli {

namespace fs = std::filesystem;
using io::json;

namespace {

struct Options {
  std::string config;
  std::string bundle;
  std::string store;
  std::string out;
  bool lenient = false;

  std::string csv;
  io::ColumnMapping mapping;
  std::string source;

  std::string diagram;
  std::optional<Tick> from;
  std::optional<Tick> to;
  std::vector<Tick> snapshots;

  std::string scenario;
  std::optional<Tick> horizon;
  bool lenient_general = false;
  std::string partial;
  std::string goal_tree;

  std::string initial;
  std::string order = "ticks";

  std::string report;

  std::string host = "127.0.0.1";
  int port = 8080;
  std::string static_dir;
};

struct Parsed {
  std::unique_ptr<CLI::App> app;
  CLI::App* command = nullptr;
};

void add_common(CLI::App* c, Options& o, bool bundle, bool store) {
  if (bundle) c->add_option("--bundle", o.bundle, "model bundle (JSON)")->required();
  if (store) c->add_option("--store", o.store, "event store log (default $HIERION_STORE)");
  c->add_flag("--lenient", o.lenient, "warn on unknown bundle fields instead of failing");
}

std::unique_ptr<CLI::App> build(Options& o) {
  auto app = std::make_unique<CLI::App>("Discrete modeling of hierarchical dynamic systems", "hierion");
  app->require_subcommand(1);
  app->add_option("--config", o.config, "TOML file supplying flag values");

  auto* ingest = app->add_subcommand("ingest", "append monitoring CSV rows to the event store");
  add_common(ingest, o, false, true);
  ingest->add_option("--csv", o.csv, "monitoring CSV with a header row")->required();
  ingest->add_option("--source-column", o.mapping.source);
  ingest->add_option("--object-column", o.mapping.object);
  ingest->add_option("--parameter-column", o.mapping.parameter);
  ingest->add_option("--tick-column", o.mapping.tick);
  ingest->add_option("--value-column", o.mapping.value);
  ingest->add_option("--source", o.source, "fixed source id; the source column is not read");
  ingest->add_option("--out", o.out, "write the ingest report here");

  auto* retro = app->add_subcommand("retrospect", "compare stored monitoring data with a canonical diagram");
  add_common(retro, o, true, true);
  retro->add_option("--diagram", o.diagram, "canonical diagram id")->required();
  retro->add_option("--from", o.from, "analysis interval start");
  retro->add_option("--to", o.to, "analysis interval end");
  retro->add_option("--snapshot", o.snapshots, "snapshot tick (repeatable; default: target schedule)");
  retro->add_option("--out", o.out, "output directory");

  auto* sim = app->add_subcommand("simulate", "run a scenario");
  add_common(sim, o, true, false);
  sim->add_option("--scenario", o.scenario, "scenario id")->required();
  sim->add_option("--horizon", o.horizon, "last simulated tick");
  sim->add_flag("--lenient-general", o.lenient_general, "fire parent arcs with partially ready children");
  sim->add_option("--out", o.out, "output directory");

  auto* fc = app->add_subcommand("forecast", "search a rule sequence meeting a partial diagram");
  add_common(fc, o, true, false);
  fc->add_option("--initial", o.initial, "initial system state (JSON file)")->required();
  fc->add_option("--partial", o.partial, "partial diagram id")->required();
  fc->add_option("--order", o.order, "cost order")->check(CLI::IsMember({"ticks", "resources"}));
  fc->add_option("--out", o.out, "plan file");

  auto* ev = app->add_subcommand("evaluate", "score a scenario or run a goal tree");
  add_common(ev, o, true, false);
  ev->add_option("--scenario", o.scenario, "scenario id");
  ev->add_option("--horizon", o.horizon, "last simulated tick");
  ev->add_flag("--lenient-general", o.lenient_general, "fire parent arcs with partially ready children");
  ev->add_option("--partial", o.partial, "partial diagram id (default: initial/final pair)");
  ev->add_option("--goal-tree", o.goal_tree, "goal tree id");
  ev->add_option("--initial", o.initial, "initial system state for --goal-tree (JSON file)");
  ev->add_option("--out", o.out, "report file");

  auto* ex = app->add_subcommand("export", "write plot tables from a report");
  ex->add_option("--report", o.report, "retrospect or simulation report")->required();
  ex->add_option("--out", o.out, "output directory")->required();

  auto* serve = app->add_subcommand("serve", "serve the HTTP API");
  serve->add_option("--host", o.host, "bind address");
  serve->add_option("--port", o.port, "port");
  serve->add_option("--static", o.static_dir, "directory served under /static");
  return app;
}

std::vector<std::string> reversed(std::vector<std::string> v) {
  std::reverse(v.begin(), v.end());
  return v;
}

std::string read_text(const fs::path& p, ErrorCode code) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error(code, "cannot read " + p.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(p.parent_path(), ec);
  }
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + p.string());
  out << text;
  if (!out) throw Error(ErrorCode::IoError, "write failed on " + p.string());
}

std::string pretty(const json& j) { return j.dump(2) + "\n"; }

json parse_json_text(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::ParseError, what + ": " + e.what());
  }
}

class Runner {
 public:
  Runner(Options o, std::string command, json overrides, std::ostream& out, std::ostream& err,
         const std::map<std::string, std::string>* env)
      : o_(std::move(o)), command_(std::move(command)), overrides_(std::move(overrides)),
        out_(out), err_(err), env_(env) {}

  int run() {
    if (command_ == "ingest") return ingest();
    if (command_ == "retrospect") return retrospect();
    if (command_ == "simulate") return simulate();
    if (command_ == "forecast") return forecast();
    if (command_ == "evaluate") return evaluate();
    if (command_ == "export") return export_tables();
    return serve();
  }

 private:
  std::optional<std::string> getenv(const char* name) const {
    if (env_) {
      auto it = env_->find(name);
      return it == env_->end() ? std::nullopt : std::optional<std::string>(it->second);
    }
    const char* v = std::getenv(name);
    return v ? std::optional<std::string>(v) : std::nullopt;
  }

  std::string store_path() {
    if (!o_.store.empty()) return o_.store;
    if (auto v = getenv("HIERION_STORE"); v && !v->empty()) return *v;
    throw Error(ErrorCode::InvalidArgument, "no store: pass --store or set HIERION_STORE");
  }

  io::ModelBundle bundle() {
    auto loaded = io::load_bundle_file(o_.bundle, io::LoadOptions{o_.lenient});
    for (const auto& w : loaded.warnings) err_ << "warning: " << w << "\n";
    return std::move(loaded.bundle);
  }

  json manifest() const {
    json m = {{"command", command_}, {"outputs", outputs_}, {"overrides", overrides_},
              {"determinism", "outputs are a pure function of the inputs; no clock or randomness is read"}};
    if (!o_.bundle.empty()) m["bundle"] = o_.bundle;
    if (!resolved_store_.empty()) m["store"] = resolved_store_;
    return m;
  }

  // Payload plus manifest, written to `file` when given and echoed otherwise.
  void emit(json payload, const std::string& file = "") {
    if (!file.empty()) outputs_.push_back(file);
    payload["manifest"] = manifest();
    if (file.empty()) {
      out_ << pretty(payload);
    } else {
      write_text(file, pretty(payload));
    }
  }

  int ingest() {
    resolved_store_ = store_path();
    auto store = io::EventStore::open(resolved_store_);
    if (!o_.source.empty()) o_.mapping.fixed_source = o_.source;
    auto rep = io::ingest_monitoring_file(store, o_.csv, o_.mapping);
    json rejects = json::array();
    for (const auto& r : rep.rejects) rejects.push_back({{"row", r.row}, {"reason", r.reason}});
    json payload = {{"kind", "ingest"}, {"csv", o_.csv}, {"ingested", rep.ingested},
                    {"duplicates", rep.duplicates}, {"rejects", rejects}, {"storeSize", store.size()}};
    if (!o_.out.empty()) emit(payload, o_.out);
    emit(payload);
    return kOk;
  }

  int retrospect() {
    const auto b = bundle();
    resolved_store_ = store_path();
    if (!fs::exists(resolved_store_)) throw Error(ErrorCode::IoError, "store " + resolved_store_ + " does not exist");
    auto store = io::EventStore::open(resolved_store_);
    io::RetrospectRequest req{o_.diagram, std::nullopt, o_.snapshots};
    if (o_.from || o_.to) {
      if (!o_.from || !o_.to) throw Error(ErrorCode::InvalidArgument, "--from and --to go together");
      req.interval = TimeInterval{*o_.from, *o_.to};
    }
    json report = io::to_json(io::retrospect(b, store, req));
    if (o_.out.empty()) {
      emit(report);
      return kOk;
    }
    const fs::path dir = o_.out;
    write_text(dir / "occupancy.csv", io::occupancy_csv(report));
    write_text(dir / "flows.csv", io::flows_csv(report));
    outputs_ = {(dir / "occupancy.csv").string(), (dir / "flows.csv").string()};
    emit(report, (dir / "retrospect.json").string());
    emit({{"verdict", report["verdict"]}, {"firstViolation", report["divergence"]["firstViolation"]}});
    return kOk;
  }

  Tick horizon_for(const io::ScenarioSpec& spec) const {
    if (o_.horizon) return *o_.horizon;
    if (spec.horizon) return *spec.horizon;
    Tick h = 0;
    for (const auto& e : spec.schedule) h = std::max(h, e.tick);
    return h;
  }

  const io::ScenarioSpec& scenario_spec(const io::ModelBundle& b) const {
    auto it = b.scenarios.find(o_.scenario);
    if (it == b.scenarios.end()) throw Error(ErrorCode::DanglingReference, "unknown scenario " + o_.scenario);
    return it->second;
  }

  int simulate() {
    const auto b = bundle();
    const auto& spec = scenario_spec(b);
    const Tick horizon = horizon_for(spec);
    auto result = scenario::simulate(io::resolve_scenario(b, spec), horizon,
                                     scenario::SimulationOptions{o_.lenient_general});
    json payload = io::to_json(result);
    payload["kind"] = "simulation";
    payload["scenario"] = spec.id;
    if (o_.out.empty()) {
      emit(payload);
      return kOk;
    }
    const fs::path dir = o_.out;
    write_text(dir / "metrics.csv", io::metrics_csv(payload));
    outputs_ = {(dir / "metrics.csv").string()};
    emit(payload, (dir / "simulation.json").string());
    emit({{"scenario", spec.id}, {"horizon", horizon}, {"metrics", payload["metrics"]}});
    return kOk;
  }

  scenario::SystemState initial_state() {
    return io::parse_system_state(parse_json_text(read_text(o_.initial, ErrorCode::IoError), o_.initial));
  }

  int forecast() {
    const auto b = bundle();
    auto it = b.partials.find(o_.partial);
    if (it == b.partials.end()) throw Error(ErrorCode::DanglingReference, "unknown partial diagram " + o_.partial);
    scenario::ForecastOptions opts;
    opts.order = o_.order == "resources" ? scenario::CostOrder::ResourcesThenTicks
                                         : scenario::CostOrder::TicksThenResources;
    opts.decay = scenario::DecayModel::from(b.control);
    std::vector<scenario::ElementaryRule> rules;
    for (const auto& [id, r] : b.rules) rules.push_back(r);
    json payload = io::to_json(scenario::forecast(initial_state(), rules, it->second, opts));
    payload["kind"] = "forecast";
    payload["partialDiagram"] = o_.partial;
    emit(payload, o_.out);
    if (!o_.out.empty()) emit({{"feasible", payload["feasible"]}, {"prefix", payload["prefix"]}});
    return kOk;
  }

  int evaluate() {
    const auto b = bundle();
    if (!o_.goal_tree.empty()) {
      auto it = b.goal_trees.find(o_.goal_tree);
      if (it == b.goal_trees.end()) throw Error(ErrorCode::DanglingReference, "unknown goal tree " + o_.goal_tree);
      if (o_.initial.empty()) throw Error(ErrorCode::InvalidArgument, "--goal-tree needs --initial");
      json payload = io::to_json(scenario::run_goal_tree(it->second, initial_state(), scenario::DecayModel::from(b.control)));
      payload["kind"] = "goal-tree";
      emit(payload, o_.out);
      return kOk;
    }
    if (o_.scenario.empty()) throw Error(ErrorCode::InvalidArgument, "evaluate needs --scenario or --goal-tree");
    const auto& spec = scenario_spec(b);
    const Tick horizon = horizon_for(spec);
    const auto sc = io::resolve_scenario(b, spec);
    auto result = scenario::simulate(sc, horizon, scenario::SimulationOptions{o_.lenient_general});
    scenario::PartialDiagram partial = scenario::initial_final_pair(sc, horizon);
    if (!o_.partial.empty()) {
      auto it = b.partials.find(o_.partial);
      if (it == b.partials.end()) throw Error(ErrorCode::DanglingReference, "unknown partial diagram " + o_.partial);
      partial = it->second;
    }
    Tick last = horizon;
    for (const auto& s : partial.supports) last = std::max(last, s.deadline);
    if (last > horizon) result = scenario::simulate(sc, last, scenario::SimulationOptions{o_.lenient_general});
    auto check = scenario::check_partial_diagram({result.traces, result.horizon, 0.0}, partial, sc.diagrams);
    json payload = {{"kind", "evaluation"},
                    {"scenario", spec.id},
                    {"horizon", result.horizon},
                    {"metrics", io::to_json(scenario::evaluate_scenario(sc, result.traces, result.events, horizon))},
                    {"partialDiagram", io::to_json(partial)},
                    {"check", io::to_json(check)}};
    emit(payload, o_.out);
    return kOk;
  }

  int export_tables() {
    if (!fs::exists(o_.report)) throw Error(ErrorCode::MissingReport, "report " + o_.report + " does not exist");
    const json report = parse_json_text(read_text(o_.report, ErrorCode::MissingReport), o_.report);
    const fs::path dir = o_.out;
    const std::string kind = report.is_object() ? report.value("kind", "") : "";
    if (kind == "retrospect") {
      write_text(dir / "occupancy.csv", io::occupancy_csv(report));
      write_text(dir / "flows.csv", io::flows_csv(report));
      outputs_ = {(dir / "occupancy.csv").string(), (dir / "flows.csv").string()};
    } else if (kind == "simulation") {
      write_text(dir / "metrics.csv", io::metrics_csv(report));
      outputs_ = {(dir / "metrics.csv").string()};
    } else {
      throw Error(ErrorCode::MissingReport, o_.report + " is neither a retrospect nor a simulation report");
    }
    emit({{"kind", "export"}, {"report", o_.report}});
    return kOk;
  }

  int serve() {
    api::ServerOptions opts;
    if (!o_.static_dir.empty()) opts.static_dir = o_.static_dir;
    api::Server server(opts);
    err_ << "listening on " << o_.host << ":" << o_.port << "\n";
    if (!server.listen(o_.host, o_.port)) throw Error(ErrorCode::IoError, "cannot bind " + o_.host + ":" + std::to_string(o_.port));
    return kOk;
  }

  Options o_;
  std::string command_;
  json overrides_;
  std::ostream& out_;
  std::ostream& err_;
  const std::map<std::string, std::string>* env_;
  std::string resolved_store_;
  std::vector<std::string> outputs_;
};

CLI::App* selected(CLI::App& app) {
  for (auto* s : app.get_subcommands()) return s;
  return nullptr;
}

bool truthy(const std::string& v) { return v == "true" || v == "1" || v == "on" || v == "yes"; }

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
        const std::map<std::string, std::string>* env) {
  Options opts;
  auto app = build(opts);
  // Required flags may come from the config file, so the first pass only
  // locates the subcommand and the flags given on the command line.
  for (auto* sub : app->get_subcommands([](CLI::App*) { return true; })) {
    for (auto* opt : sub->get_options()) opt->required(false);
  }
  try {
    app->parse(reversed(args));
  } catch (const CLI::ParseError& e) {
    const int code = app->exit(e, out, err);
    return code == 0 ? kOk : kValidation;
  }
  CLI::App* command = selected(*app);
  std::vector<std::string> full = args;
  json overrides = json::object();

  if (!opts.config.empty()) {
    std::vector<CLI::ConfigItem> items;
    try {
      std::ifstream in(opts.config);
      if (!in) throw Error(ErrorCode::IoError, "cannot read config " + opts.config);
      items = CLI::ConfigTOML().from_config(in);
    } catch (const CLI::ParseError& e) {
      err << "error: config " << opts.config << ": " << e.what() << "\n";
      return kValidation;
    } catch (const Error& e) {
      err << "error: " << e.what() << "\n";
      return kIo;
    }
    for (const auto& item : items) {
      if (!item.parents.empty() && item.parents.front() != command->get_name()) continue;
      if (item.name.empty() || item.name == "++" || item.name == "--") continue;
      CLI::Option* opt = command->get_option_no_throw("--" + item.name);
      if (opt == nullptr) {
        err << "error: config " << opts.config << ": unknown key " << item.name << " for "
            << command->get_name() << "\n";
        return kValidation;
      }
      const bool flag = opt->get_expected_min() == 0;
      if (opt->count() > 0) {
        const auto given = opt->results();
        const bool same = flag ? (item.inputs.size() == 1 && truthy(item.inputs[0]))
                               : given == item.inputs;
        if (!same) {
          err << "error: --" << item.name << " is set both on the command line and in "
              << opts.config << " with different values\n";
          return kValidation;
        }
        continue;
      }
      if (flag) {
        if (item.inputs.size() == 1 && truthy(item.inputs[0])) full.push_back("--" + item.name);
      } else {
        for (const auto& v : item.inputs) {
          full.push_back("--" + item.name);
          full.push_back(v);
        }
      }
      overrides[item.name] = item.inputs.size() == 1 ? json(item.inputs[0]) : json(item.inputs);
    }
  }
  opts = Options{};
  app = build(opts);
  try {
    app->parse(reversed(full));
  } catch (const CLI::ParseError& e) {
    const int code = app->exit(e, out, err);
    return code == 0 ? kOk : kValidation;
  }
  command = selected(*app);

  try {
    return Runner(opts, command->get_name(), overrides, out, err, env).run();
  } catch (const Error& e) {
    err << "error: " << to_string(e.code()) << ": " << e.what() << "\n";
    for (const auto& line : e.report()) err << "  " << line << "\n";
    if (e.tick()) err << "  at tick " << *e.tick() << "\n";
    switch (e.code()) {
      case ErrorCode::IoError:
      case ErrorCode::UnreadableInput:
      case ErrorCode::MissingReport:
        return kIo;
      default:
        return kValidation;
    }
  }
}

}  // namespace hierion::cli
