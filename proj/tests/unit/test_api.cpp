#include "doctest.h"

#include <chrono>
#include <thread>

#include "hierion/api.hpp"
#include "hierion/codec.hpp"
#include "httplib.h"
#include "support/data.hpp"

using hierion::api::Response;
using hierion::api::Server;
using hierion::io::json;

namespace {

json body(const Response& r) { return json::parse(r.body); }

std::string open_session(Server& s) {
  auto r = s.handle("POST", "/sessions", data::read("demo_bundle.json"));
  REQUIRE(r.status == 201);
  return body(r).at("session").get<std::string>();
}

}  // namespace

TEST_CASE("sessions") {
  Server server;
  auto r = server.handle("POST", "/sessions", data::read("demo_bundle.json"));
  CHECK(r.status == 201);
  CHECK(r.content_type == "application/json");
  const std::string id = body(r).at("session");

  r = server.handle("GET", "/sessions/" + id + "/model", "");
  CHECK(r.status == 200);
  CHECK(hierion::io::load_bundle(r.body).bundle == data::demo_bundle());

  r = server.handle("POST", "/sessions", "{\"schema\": ");
  CHECK(r.status == 400);
  CHECK(body(r).at("code") == "ParseError");

  auto doc = json::parse(data::read("demo_bundle.json"));
  doc["canonicalDiagrams"][0]["devArcs"].push_back({{"src", "S3"}, {"dst", "S1"}});
  r = server.handle("POST", "/sessions", doc.dump());
  CHECK(r.status == 422);
  CHECK(body(r).at("code") == "ValidationFailed");
  CHECK_FALSE(body(r).at("report").empty());

  doc = json::parse(data::read("demo_bundle.json"));
  doc["canonicalDiagrams"][0]["s0"] = "S9";
  r = server.handle("POST", "/sessions", doc.dump());
  CHECK(r.status == 422);
  CHECK(body(r).at("code") == "DanglingReference");

  CHECK(server.handle("GET", "/sessions/zzz/model", "").status == 404);
  CHECK(server.handle("GET", "/nowhere", "").status == 404);
  CHECK(server.handle("DELETE", "/sessions/" + id + "/model", "").status == 404);
}

TEST_CASE("scenario drafts") {
  Server server;
  const std::string id = open_session(server);
  const std::string base = "/sessions/" + id;
  CHECK(server.handle("GET", base + "/scenario", "").status == 404);

  auto r = server.handle("PUT", base + "/scenario",
                         R"({"id": "draft", "diagrams": ["switch"],
                             "schedule": [{"tick": 0, "symbol": "flip", "to": "switch"}]})");
  CHECK(r.status == 200);
  CHECK(body(r).at("ok") == true);
  CHECK(body(server.handle("GET", base + "/scenario", "")).at("id") == "draft");

  r = server.handle("PUT", base + "/scenario",
                    R"({"id": "bad", "diagrams": ["switch"],
                        "schedule": [{"tick": 0, "symbol": "flop", "to": "switch"}]})");
  CHECK(r.status == 422);
  CHECK(body(r).at("code") == "DanglingReference");
  CHECK(body(server.handle("GET", base + "/scenario", "")).at("id") == "draft");

  r = server.handle("PUT", base + "/scenario", R"({"id": "x", "diagrams": ["switch"], "colour": 1})");
  CHECK(r.status == 400);
  CHECK(server.handle("PUT", base + "/scenario", "not json").status == 400);
}

TEST_CASE("simulate and traces") {
  Server server({2, std::nullopt});
  const std::string id = open_session(server);
  const std::string base = "/sessions/" + id;

  CHECK(server.handle("POST", base + "/simulate", "{}").status == 400);

  auto r = server.handle("POST", base + "/simulate", R"({"scenario": "one_step"})");
  REQUIRE(r.status == 200);
  auto j = body(r);
  CHECK(j.at("runId") == "r1");
  CHECK(j.at("metrics").at("completeness") == 1.0);
  CHECK(j.at("horizon") == 3);

  server.handle("PUT", base + "/scenario",
                R"({"id": "draft", "diagrams": ["pump"], "horizon": 6,
                    "schedule": [{"tick": 0, "symbol": "prime", "to": "pump"},
                                 {"tick": 1, "symbol": "go", "to": "pump"},
                                 {"tick": 3, "symbol": "go", "to": "pump"}]})");
  auto first = server.handle("POST", base + "/simulate", "{}");
  auto second = server.handle("POST", base + "/simulate", "{}");
  CHECK(body(first).at("runId") == "r2");
  CHECK(body(second).at("runId") == "r3");
  CHECK(body(first).at("metrics") == body(second).at("metrics"));
  CHECK(server.handle("GET", base + "/runs/r2/trace?diagram=pump", "").body !=
        server.handle("GET", base + "/runs/r3/trace?diagram=pump", "").body);
  auto t2 = body(server.handle("GET", base + "/runs/r2/trace?diagram=pump", ""));
  auto t3 = body(server.handle("GET", base + "/runs/r3/trace?diagram=pump", ""));
  CHECK(t2.at("trace") == t3.at("trace"));

  auto page = body(server.handle("GET", base + "/runs/r2/trace?diagram=pump", ""));
  CHECK(page.at("pageSize") == 2);
  CHECK(page.at("total") == 3);
  CHECK(page.at("pages") == 2);
  CHECK(page.at("trace").size() == 2);
  CHECK(page.at("trace")[0].at("state") == "P1");
  page = body(server.handle("GET", base + "/runs/r2/trace?diagram=pump&page=2", ""));
  REQUIRE(page.at("trace").size() == 1);
  CHECK(page.at("trace")[0].at("state") == "P3");
  page = body(server.handle("GET", base + "/runs/r2/trace?diagram=pump&page=9", ""));
  CHECK(page.at("trace").empty());

  auto events = body(server.handle("GET", base + "/runs/r2/trace", ""));
  CHECK(events.contains("events"));
  CHECK(events.at("total").get<int>() >= 3);

  CHECK(server.handle("GET", base + "/runs/r2/trace?page=0", "").status == 400);
  CHECK(server.handle("GET", base + "/runs/r2/trace?diagram=valve", "").status == 404);
  CHECK(server.handle("GET", base + "/runs/r9/trace", "").status == 404);

  auto runs = body(server.handle("GET", base + "/runs", ""));
  CHECK(runs.at("runs").size() == 3);
  auto summary = body(server.handle("GET", base + "/runs/r1", ""));
  CHECK(summary.at("scenario") == "one_step");
  CHECK(summary.at("metricTrace").size() == 4);

  CHECK(server.handle("POST", base + "/simulate", R"({"scenario": "nope"})").status == 404);
  CHECK(server.handle("POST", base + "/simulate", R"({"scenario": "one_step", "horizon": "x"})").status == 400);
}

TEST_CASE("ambiguous decay is a conflict") {
  auto doc = json::parse(data::read("demo_bundle.json"));
  doc["controlDiagrams"][1]["states"].push_back({{"id", "P0"}, {"rank", 0}});
  doc["controlDiagrams"][1]["p2Arcs"] = {{{"src", "P2"}, {"dst", "P1"}, {"decay", 2}},
                                         {{"src", "P2"}, {"dst", "P0"}, {"decay", 2}}};
  doc["scenarios"][1]["schedule"] = {{{"tick", 0}, {"symbol", "prime"}, {"to", "pump"}}};
  Server server;
  auto created = server.handle("POST", "/sessions", doc.dump());
  REQUIRE(created.status == 201);
  const std::string id = body(created).at("session");
  auto r = server.handle("POST", "/sessions/" + id + "/simulate", R"({"scenario": "pump_start", "horizon": 8})");
  CHECK(r.status == 409);
  CHECK(body(r).at("code") == "AmbiguousArc");
  CHECK(body(r).at("tick") == 4);
}

TEST_CASE("sessions are isolated") {
  Server server;
  const std::string a = open_session(server);
  const std::string b = open_session(server);
  CHECK(a != b);
  server.handle("PUT", "/sessions/" + a + "/scenario", R"({"id": "draft", "diagrams": ["switch"]})");
  server.handle("POST", "/sessions/" + a + "/simulate", R"({"scenario": "one_step"})");
  CHECK(server.handle("GET", "/sessions/" + b + "/scenario", "").status == 404);
  CHECK(body(server.handle("GET", "/sessions/" + b + "/runs", "")).at("runs").empty());
  CHECK(server.handle("GET", "/sessions/" + b + "/runs/r1", "").status == 404);
}

TEST_CASE("forecast endpoint") {
  Server server;
  const std::string base = "/sessions/" + open_session(server);
  auto r = server.handle("POST", base + "/forecast",
                         R"({"initial": {"states": {"pump": "P1"}, "pool": 5}, "partialDiagram": "ready"})");
  REQUIRE(r.status == 200);
  CHECK(body(r).at("feasible") == true);
  CHECK(body(r).at("plan").size() == 2);

  r = server.handle("POST", base + "/forecast",
                    R"({"initial": {"states": {"pump": "P1"}, "pool": 5},
                        "partialDiagram": {"supports": [{"diagram": "pump", "state": "P3", "deadline": 2}]}})");
  REQUIRE(r.status == 200);
  CHECK(body(r).at("feasible") == false);
  CHECK(body(r).at("prefix") == 0);

  CHECK(server.handle("POST", base + "/forecast", "{}").status == 400);
  CHECK(server.handle("POST", base + "/forecast",
                      R"({"initial": {"states": {}}, "partialDiagram": "nope"})")
            .status == 404);
  CHECK(server.handle("POST", base + "/forecast",
                      R"({"initial": {"states": {}}, "partialDiagram": "ready", "order": "cost"})")
            .status == 400);
}

TEST_CASE("retrospect endpoint") {
  Server server;
  const std::string base = "/sessions/" + open_session(server);
  json req = {{"diagram", "growth"}, {"csv", data::read("demo_monitoring.csv")}};
  auto r = server.handle("POST", base + "/retrospect", req.dump());
  REQUIRE(r.status == 200);
  CHECK(body(r).at("verdict") == "CONFIRMED");
  CHECK(body(r).at("ingest").at("ingested") == 15);

  r = server.handle("POST", base + "/retrospect", json{{"diagram", "growth"}}.dump());
  CHECK(r.status == 422);
  CHECK(body(r).at("code") == "MissingData");
  CHECK(server.handle("POST", base + "/retrospect", "{}").status == 400);
}

TEST_CASE("live HTTP round trip") {
  Server server;
  const int port = server.bind_any("127.0.0.1");
  REQUIRE(port > 0);
  std::thread worker([&] { server.listen_after_bind(); });
  for (int i = 0; i < 200 && !server.running(); ++i) std::this_thread::sleep_for(std::chrono::milliseconds(5));

  httplib::Client client("127.0.0.1", port);
  auto created = client.Post("/sessions", data::read("demo_bundle.json"), "application/json");
  REQUIRE(created);
  CHECK(created->status == 201);
  const std::string id = json::parse(created->body).at("session");
  auto sim = client.Post("/sessions/" + id + "/simulate", R"({"scenario": "one_step"})", "application/json");
  REQUIRE(sim);
  CHECK(json::parse(sim->body).at("metrics").at("completeness") == 1.0);
  auto trace = client.Get("/sessions/" + id + "/runs/r1/trace?diagram=switch");
  REQUIRE(trace);
  CHECK(json::parse(trace->body).at("trace").size() == 2);
  auto missing = client.Get("/sessions/none/model");
  REQUIRE(missing);
  CHECK(missing->status == 404);

  server.stop();
  worker.join();
}
