#include "doctest.h"

#include <algorithm>
#include <sstream>

#include "hierion/cli.hpp"
#include "hierion/codec.hpp"
#include "support/data.hpp"

using hierion::io::json;

namespace {

struct Run {
  int code = 0;
  std::string out;
  std::string err;

  json payload() const { return json::parse(out); }
};

Run cli(std::vector<std::string> args, const std::map<std::string, std::string>& env = {}) {
  std::ostringstream out, err;
  Run r;
  r.code = hierion::cli::run(args, out, err, &env);
  r.out = out.str();
  r.err = err.str();
  return r;
}

const std::string kBundle = data::path("demo_bundle.json").string();
const std::string kCsv = data::path("demo_monitoring.csv").string();

bool contains(const std::string& text, const std::string& needle) {
  return text.find(needle) != std::string::npos;
}

}  // namespace

TEST_CASE("usage errors exit 1") {
  CHECK(cli({}).code == 1);
  CHECK(cli({"frobnicate"}).code == 1);
  CHECK(cli({"simulate", "--scenario", "one_step"}).code == 1);
  auto help = cli({"--help"});
  CHECK(help.code == 0);
  CHECK(contains(help.out, "retrospect"));
}

TEST_CASE("ingest") {
  data::TempDir tmp("cli-ingest");
  const std::string store = (tmp / "events.jsonl").string();

  auto r = cli({"ingest", "--store", store, "--csv", kCsv});
  REQUIRE(r.code == 0);
  auto j = r.payload();
  CHECK(j.at("ingested") == 15);
  CHECK(j.at("manifest").at("store") == store);

  r = cli({"ingest", "--csv", kCsv}, {{"HIERION_STORE", store}});
  REQUIRE(r.code == 0);
  CHECK(r.payload().at("ingested") == 0);
  CHECK(r.payload().at("duplicates") == 15);

  const std::string other = (tmp / "other.jsonl").string();
  r = cli({"ingest", "--store", other, "--csv", kCsv}, {{"HIERION_STORE", store}});
  CHECK(r.payload().at("ingested") == 15);
  CHECK(r.payload().at("manifest").at("store") == other);

  data::write(tmp / "bad.csv", "source,object,parameter,tick,value\nME,o1,p,0,x\n");
  r = cli({"ingest", "--store", store, "--csv", (tmp / "bad.csv").string(), "--out",
           (tmp / "ingest.json").string()});
  CHECK(r.code == 0);
  CHECK(r.payload().at("rejects")[0] == json{{"row", 2}, {"reason", "value is not a number: x"}});
  CHECK(json::parse(data::slurp(tmp / "ingest.json")).at("rejects").size() == 1);

  CHECK(cli({"ingest", "--csv", kCsv}).code == 1);
  r = cli({"ingest", "--store", store, "--csv", (tmp / "absent.csv").string()});
  CHECK(r.code == 2);
  CHECK(contains(r.err, "UnreadableInput"));
}

TEST_CASE("retrospect") {
  data::TempDir tmp("cli-retro");
  const std::string store = (tmp / "events.jsonl").string();
  REQUIRE(cli({"ingest", "--store", store, "--csv", kCsv}).code == 0);

  auto r = cli({"retrospect", "--bundle", kBundle, "--store", store, "--diagram", "growth"});
  REQUIRE(r.code == 0);
  CHECK(r.payload().at("verdict") == "CONFIRMED");

  const std::string out = (tmp / "report").string();
  r = cli({"retrospect", "--bundle", kBundle, "--store", store, "--diagram", "growth", "--out", out});
  REQUIRE(r.code == 0);
  CHECK(r.payload().at("verdict") == "CONFIRMED");
  CHECK(data::slurp(tmp / "report/occupancy.csv").rfind("tick,state,count\n0,S1,3\n", 0) == 0);
  CHECK(contains(data::slurp(tmp / "report/flows.csv"), "2,S1,S2,2\n"));
  auto saved = json::parse(data::slurp(tmp / "report/retrospect.json"));
  CHECK(saved.at("manifest").at("outputs").size() == 3);
  CHECK(saved.at("manifest").at("outputs")[2] == (tmp / "report/retrospect.json").string());

  r = cli({"retrospect", "--bundle", kBundle, "--store", store, "--diagram", "growth", "--from", "0"});
  CHECK(r.code == 1);

  r = cli({"retrospect", "--bundle", kBundle, "--store", (tmp / "absent.jsonl").string(), "--diagram",
           "growth"});
  CHECK(r.code == 2);

  data::write(tmp / "empty.jsonl", "");
  r = cli({"retrospect", "--bundle", kBundle, "--store", (tmp / "empty.jsonl").string(), "--diagram",
           "growth"});
  CHECK(r.code == 1);
  CHECK(contains(r.err, "MissingData"));
  CHECK(contains(r.err, "stage query"));
}

TEST_CASE("simulate") {
  auto r = cli({"simulate", "--bundle", kBundle, "--scenario", "one_step"});
  REQUIRE(r.code == 0);
  auto j = r.payload();
  CHECK(j.at("metrics").at("completeness") == 1.0);
  CHECK(j.at("horizon") == 3);
  CHECK(j.at("manifest").at("command") == "simulate");
  CHECK(cli({"simulate", "--bundle", kBundle, "--scenario", "one_step"}).out == r.out);

  CHECK(cli({"simulate", "--bundle", kBundle, "--scenario", "one_step", "--horizon", "1"})
            .payload()
            .at("horizon") == 1);

  data::TempDir tmp("cli-sim");
  r = cli({"simulate", "--bundle", kBundle, "--scenario", "pump_start", "--out", tmp.path().string()});
  REQUIRE(r.code == 0);
  CHECK(r.payload().at("scenario") == "pump_start");
  CHECK(data::slurp(tmp / "metrics.csv").rfind("tick,metric,value\n", 0) == 0);
  CHECK(json::parse(data::slurp(tmp / "simulation.json")).at("kind") == "simulation");

  CHECK(cli({"simulate", "--bundle", kBundle, "--scenario", "nope"}).code == 1);
  CHECK(cli({"simulate", "--bundle", (tmp / "absent.json").string(), "--scenario", "x"}).code == 2);

  auto doc = json::parse(data::read("demo_bundle.json"));
  doc["controlDiagrams"][1]["states"].push_back({{"id", "P0"}, {"rank", 0}});
  doc["controlDiagrams"][1]["p2Arcs"] = {{{"src", "P2"}, {"dst", "P1"}, {"decay", 2}},
                                         {{"src", "P2"}, {"dst", "P0"}, {"decay", 2}}};
  doc["scenarios"][1]["schedule"] = {{{"tick", 0}, {"symbol", "prime"}, {"to", "pump"}}};
  data::write(tmp / "tie.json", doc.dump());
  r = cli({"simulate", "--bundle", (tmp / "tie.json").string(), "--scenario", "pump_start", "--horizon", "12"});
  CHECK(r.code == 1);
  CHECK(contains(r.err, "AmbiguousArc"));
  CHECK(contains(r.err, "at tick 4"));

  doc = json::parse(data::read("demo_bundle.json"));
  doc["extra"] = 1;
  data::write(tmp / "extra.json", doc.dump());
  CHECK(cli({"simulate", "--bundle", (tmp / "extra.json").string(), "--scenario", "one_step"}).code == 1);
  r = cli({"simulate", "--bundle", (tmp / "extra.json").string(), "--scenario", "one_step", "--lenient"});
  CHECK(r.code == 0);
  CHECK(contains(r.err, "warning: $.extra: unknown field ignored"));
}

TEST_CASE("forecast") {
  data::TempDir tmp("cli-forecast");
  data::write(tmp / "init.json", R"({"states": {"pump": "P1", "switch": "Off"}, "pool": 5})");
  const std::string init = (tmp / "init.json").string();

  auto r = cli({"forecast", "--bundle", kBundle, "--initial", init, "--partial", "ready"});
  REQUIRE(r.code == 0);
  auto j = r.payload();
  CHECK(j.at("feasible") == true);
  CHECK(j.at("ticks") == 3);
  REQUIRE(j.at("plan").size() == 2);
  CHECK(j.at("plan")[0].at("rule") == "r_prime");
  CHECK(j.at("plan")[1].at("rule") == "r_go");

  r = cli({"forecast", "--bundle", kBundle, "--initial", init, "--partial", "rushed", "--out",
           (tmp / "plan.json").string()});
  CHECK(r.code == 0);
  CHECK(r.payload().at("feasible") == false);
  CHECK(r.payload().at("prefix") == 1);
  CHECK(json::parse(data::slurp(tmp / "plan.json")).at("kind") == "forecast");

  CHECK(cli({"forecast", "--bundle", kBundle, "--initial", init, "--partial", "ready", "--order", "cost"})
            .code == 1);
  CHECK(cli({"forecast", "--bundle", kBundle, "--initial", init, "--partial", "ready", "--order",
             "resources"})
            .code == 0);
  CHECK(cli({"forecast", "--bundle", kBundle, "--initial", (tmp / "none.json").string(), "--partial",
             "ready"})
            .code == 2);
  CHECK(cli({"forecast", "--bundle", kBundle, "--initial", init, "--partial", "nope"}).code == 1);
}

TEST_CASE("evaluate") {
  auto r = cli({"evaluate", "--bundle", kBundle, "--scenario", "one_step"});
  REQUIRE(r.code == 0);
  CHECK(r.payload().at("check").at("verdict") == "CONFIRMED");
  CHECK(r.payload().at("metrics").at("completeness") == 1.0);

  data::TempDir tmp("cli-eval");
  data::write(tmp / "init.json", R"({"states": {"pump": "P1"}, "pool": 5})");
  r = cli({"evaluate", "--bundle", kBundle, "--goal-tree", "bringup", "--initial",
           (tmp / "init.json").string()});
  REQUIRE(r.code == 0);
  CHECK(r.payload().at("success") == true);

  CHECK(cli({"evaluate", "--bundle", kBundle, "--goal-tree", "bringup"}).code == 1);
  CHECK(cli({"evaluate", "--bundle", kBundle}).code == 1);
}

TEST_CASE("export") {
  data::TempDir tmp("cli-export");
  const std::string store = (tmp / "events.jsonl").string();
  REQUIRE(cli({"ingest", "--store", store, "--csv", kCsv}).code == 0);
  auto retro = cli({"retrospect", "--bundle", kBundle, "--store", store, "--diagram", "growth"});
  data::write(tmp / "retro.json", retro.out);
  auto r = cli({"export", "--report", (tmp / "retro.json").string(), "--out", (tmp / "plots").string()});
  REQUIRE(r.code == 0);
  const std::string occ = data::slurp(tmp / "plots/occupancy.csv");
  CHECK(std::count(occ.begin(), occ.end(), '\n') == 10);

  data::write(tmp / "sim.json", cli({"simulate", "--bundle", kBundle, "--scenario", "one_step"}).out);
  CHECK(cli({"export", "--report", (tmp / "sim.json").string(), "--out", (tmp / "plots").string()}).code == 0);
  CHECK(data::slurp(tmp / "plots/metrics.csv").rfind("tick,metric,value\n", 0) == 0);

  r = cli({"export", "--report", (tmp / "absent.json").string(), "--out", (tmp / "plots").string()});
  CHECK(r.code == 2);
  CHECK(contains(r.err, "MissingReport"));
  data::write(tmp / "other.json", R"({"kind": "forecast"})");
  CHECK(cli({"export", "--report", (tmp / "other.json").string(), "--out", (tmp / "plots").string()}).code == 2);
}

TEST_CASE("config file") {
  data::TempDir tmp("cli-config");
  const std::string cfg = (tmp / "run.toml").string();
  data::write(cfg, "[simulate]\nbundle = \"" + kBundle + "\"\nscenario = \"one_step\"\n");

  auto r = cli({"--config", cfg, "simulate"});
  REQUIRE(r.code == 0);
  auto j = r.payload();
  CHECK(j.at("metrics").at("completeness") == 1.0);
  CHECK(j.at("manifest").at("overrides").at("scenario") == "one_step");
  CHECK(j.at("manifest").at("bundle") == kBundle);

  CHECK(cli({"--config", cfg, "simulate", "--scenario", "one_step"}).code == 0);
  r = cli({"--config", cfg, "simulate", "--scenario", "pump_start"});
  CHECK(r.code == 1);
  CHECK(contains(r.err, "different values"));

  data::write(cfg, "[simulate]\ncolour = \"blue\"\n");
  r = cli({"--config", cfg, "simulate", "--bundle", kBundle, "--scenario", "one_step"});
  CHECK(r.code == 1);
  CHECK(contains(r.err, "unknown key colour"));

  data::write(cfg, "[forecast]\norder = \"resources\"\n");
  CHECK(cli({"--config", cfg, "simulate", "--bundle", kBundle, "--scenario", "one_step"}).code == 0);

  CHECK(cli({"--config", (tmp / "absent.toml").string(), "simulate", "--bundle", kBundle, "--scenario",
             "one_step"})
            .code == 2);
}
