#include "doctest.h"

#include <algorithm>
#include <numeric>
#include <random>

#include "hierion/compose.hpp"
#include "hierion/error.hpp"
#include "support/check.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace hierion;
using namespace hierion::compose;
using fixtures::chain;

namespace {

// All tuples of the children's states with prefixes S1 and S2 as in the
// two-child, two-block example.
std::vector<StateTuple> product(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<StateTuple> out;
  for (const auto& x : a) {
    for (const auto& y : b) out.push_back({x, y});
  }
  return out;
}

std::vector<std::string> ids(const std::string& prefix, int from, int to) {
  std::vector<std::string> out;
  for (int i = from; i <= to; ++i) out.push_back(prefix + std::to_string(i));
  return out;
}

}  // namespace

TEST_CASE("sequential composition") {
  SUBCASE("identity") {
    auto a = chain("a", 3, "A");
    CHECK(compose_sequential({{a, {0, 3}}}) == a);
  }
  SUBCASE("two chains with a bridge") {
    auto out = compose_sequential({{chain("a", 2, "A"), {0, 3}}, {chain("b", 2, "B"), {5, 8}}});
    CanonicalDiagram want;
    want.id = "a+b";
    want.states = {{"A1", 0, 1, {}}, {"A2", 1, 1, {}}, {"B1", 2, 1, {}}, {"B2", 3, 1, {}}};
    want.dev_arcs = {{"A1", "A2", 1}, {"A2", "B1", 2}, {"B1", "B2", 1}};
    want.s0 = "A1";
    want.s_star = "B2";
    CHECK(out == want);
    CHECK(validate_diagram(out).empty());
  }
  SUBCASE("schedules merge in local time") {
    auto a = chain("a", 2, "A");
    auto b = chain("b", 2, "B");
    Distribution da, db;
    da.assignment = {{"A1", {"o"}}};
    db.assignment = {{"B1", {"o"}}};
    a.target_schedule = {{0, da}};
    b.target_schedule = {{0, db}};
    auto out = compose_sequential({{a, {10, 13}}, {b, {15, 18}}});
    REQUIRE(out.target_schedule.size() == 2);
    CHECK(out.target_schedule[1].tick == 5);
  }
  SUBCASE("errors") {
    CHECK(check::error_code([] {
            compose_sequential({{chain("a", 2, "A"), {0, 5}}, {chain("b", 2, "B"), {3, 8}}});
          }) == ErrorCode::IntervalOrderViolation);
    CHECK(check::error_code([] {
            compose_sequential({{chain("a", 2, "A"), {0, 5}}, {chain("b", 2, "B"), {5, 8}}});
          }) == ErrorCode::IntervalOrderViolation);
    CHECK(check::error_code([] {
            compose_sequential({{chain("a", 2, "S"), {0, 1}}, {chain("b", 2, "S"), {3, 8}}});
          }) == ErrorCode::InvalidChild);
    auto broken = chain("a", 2, "A");
    broken.s0 = "nowhere";
    auto err = check::error_of([&] { compose_sequential({{broken, {0, 1}}}); });
    CHECK(err.code() == ErrorCode::InvalidChild);
    CHECK(check::has_line(err.report(), "unknown initial state: nowhere"));
  }
}

TEST_CASE("parallel composition") {
  auto f = compose_parallel({{chain("a", 3, "A"), {0, 10}}, {chain("b", 4, "B"), {0, 10}}});
  CHECK(f.joint_state_count() == 12);
  CHECK(f.joint_states().size() == 12);
  CHECK(f.interval() == TimeInterval{0, 10});
  StateTrace ta{{0, "A1", TransitionCause::Initial, ""}, {4, "A2", TransitionCause::Symbol, ""}};
  StateTrace tb{{0, "B1", TransitionCause::Initial, ""}};
  CHECK(f.state_at({ta, tb}, 5) == StateTuple{"A2", "B1"});
  CHECK(compose_parallel({{chain("a", 2, "A"), {0, 10}}}).children().size() == 1);
  CHECK(check::error_code([] {
          compose_parallel({{chain("a", 2, "A"), {0, 10}}, {chain("b", 2, "B"), {0, 9}}});
        }) == ErrorCode::IntervalMismatch);
}

TEST_CASE("two-block generalization over six-state children") {
  auto w1 = chain("w1", 6, "S1");
  auto w2 = chain("w2", 6, "S2");
  StateBlock s1{"S1", product(ids("S1", 1, 3), ids("S2", 1, 3))};
  StateBlock s2{"S2", product(ids("S1", 4, 6), ids("S2", 4, 6))};
  auto g = generalize({w1, w2}, {s1, s2}, {{"S1", "S2", 1}});
  CHECK(g.parent().states.size() == 2);
  CHECK(g.parent().s0 == "S1");
  CHECK(g.parent().s_star == "S2");
  CHECK(g.parent().has_dev_arc("S1", "S2"));
  CHECK(g.membership({"S12", "S22"}) == "S1");
  CHECK(g.membership({"S15", "S26"}) == "S2");
  CHECK_FALSE(g.membership({"S11", "S26"}).has_value());
  CHECK(check::error_code([&] { generalize({w1, w2}, {s1, s2}, {}, true); }) ==
        ErrorCode::UncoveredRequiredTuple);
}

TEST_CASE("generalization errors") {
  auto w1 = chain("w1", 3, "A");
  auto w2 = chain("w2", 3, "B");
  SUBCASE("overlap") {
    CHECK(check::error_code([&] {
            generalize({w1, w2}, {{"X", {{"A1", "B1"}}}, {"Y", {{"A1", "B1"}, {"A2", "B2"}}}}, {});
          }) == ErrorCode::OverlappingBlocks);
  }
  SUBCASE("order") {
    CHECK(check::error_code([&] {
            generalize({w1, w2}, {{"X", {{"A2", "B2"}}}, {"Y", {{"A1", "B2"}}}}, {});
          }) == ErrorCode::OrderInconsistent);
    // Incomparable tuples may go either way.
    CHECK_NOTHROW(generalize({w1, w2}, {{"X", {{"A2", "B1"}}}, {"Y", {{"A1", "B2"}}}}, {}));
  }
  SUBCASE("unknown ids") {
    CHECK(check::error_code([&] { generalize({w1, w2}, {{"X", {{"A9", "B1"}}}}, {}); }) ==
          ErrorCode::UnknownStateId);
    CHECK(check::error_code([&] {
            generalize({w1, w2}, {{"X", {{"A1", "B1"}}}}, {{"X", "Q", 1}});
          }) == ErrorCode::UnknownStateId);
  }
  SUBCASE("back arcs follow the block order") {
    auto g = generalize({w1, w2}, {{"X", {{"A1", "B1"}}}, {"Y", {{"A2", "B2"}}}},
                        {{"X", "Y", 2}, {"Y", "X", 3}});
    CHECK(g.parent().has_dev_arc("X", "Y"));
    CHECK(g.parent().has_back_arc("Y", "X"));
    CHECK(validate_diagram(g.parent()).empty());
  }
}

TEST_CASE("property: singleton blocks reproduce the synchronous product") {
  std::mt19937_64 rng(31337);
  for (int trial = 0; trial < 60; ++trial) {
    std::vector<CanonicalDiagram> kids;
    const int n_kids = std::uniform_int_distribution<int>(1, 2)(rng);
    for (int k = 0; k < n_kids; ++k) {
      const int n = std::uniform_int_distribution<int>(2, 4)(rng);
      auto d = chain("c" + std::to_string(k), n, "K" + std::to_string(k) + "_");
      // random extra forward arcs
      for (int i = 1; i <= n; ++i) {
        for (int j = i + 2; j <= n; ++j) {
          if (rng() % 2) {
            d.dev_arcs.push_back({d.states[i - 1].id, d.states[j - 1].id,
                                  static_cast<Tick>(1 + rng() % 3)});
          }
        }
      }
      kids.push_back(d);
    }
    ParallelFragment frag(kids, {});
    auto tuples = frag.joint_states();
    auto rank_sum = [&](const StateTuple& t) {
      int s = 0;
      for (std::size_t k = 0; k < t.size(); ++k) s += kids[k].find_state(t[k])->rank;
      return s;
    };
    std::stable_sort(tuples.begin(), tuples.end(),
                     [&](const StateTuple& a, const StateTuple& b) { return rank_sum(a) < rank_sum(b); });
    std::vector<StateBlock> blocks;
    std::map<StateTuple, std::string> block_of;
    for (std::size_t i = 0; i < tuples.size(); ++i) {
      blocks.push_back({"b" + std::to_string(i), {tuples[i]}});
      block_of[tuples[i]] = blocks.back().id;
    }
    auto g = generalize(kids, blocks, synchronous_product_arcs(kids, block_of), true);

    // Explicit product: u -> v iff every child has a devArc u_k -> v_k.
    std::map<std::pair<std::string, std::string>, Tick> want;
    for (const auto& u : tuples) {
      for (const auto& v : tuples) {
        Tick delta = 0;
        bool all = true;
        for (std::size_t k = 0; k < kids.size() && all; ++k) {
          Tick best = -1;
          for (const auto& a : kids[k].dev_arcs) {
            if (a.src == u[k] && a.dst == v[k]) best = best < 0 ? a.delta : std::min(best, a.delta);
          }
          all = best >= 0;
          delta = std::max(delta, best);
        }
        if (all) want[{block_of[u], block_of[v]}] = delta;
      }
    }
    std::map<std::pair<std::string, std::string>, Tick> got;
    for (const auto& a : g.parent().dev_arcs) got[{a.src, a.dst}] = a.delta;
    CHECK(g.parent().back_arcs.empty());
    CHECK(got == want);
    CHECK(g.parent().states.size() == frag.joint_state_count());
    for (const auto& t : tuples) CHECK(g.membership(t) == block_of[t]);
  }
}

TEST_CASE("block trajectory follows child traces") {
  auto w1 = chain("w1", 2, "A");
  auto w2 = chain("w2", 2, "B");
  auto g = generalize({w1, w2}, {{"lo", {{"A1", "B1"}}}, {"hi", {{"A2", "B2"}}}}, {{"lo", "hi", 1}});
  StateTrace t1{{0, "A1", TransitionCause::Initial, ""}, {2, "A2", TransitionCause::Symbol, ""}};
  StateTrace t2{{0, "B1", TransitionCause::Initial, ""}, {3, "B2", TransitionCause::Symbol, ""}};
  auto traj = block_trajectory(g, {t1, t2});
  REQUIRE(traj.size() == 3);
  CHECK(traj[0] == std::pair<Tick, std::optional<std::string>>{0, "lo"});
  CHECK(traj[1] == std::pair<Tick, std::optional<std::string>>{2, std::nullopt});
  CHECK(traj[2] == std::pair<Tick, std::optional<std::string>>{3, "hi"});
}

TEST_CASE("consistency on a chain") {
  auto abc = chain("abc", 3, "S");
  auto ok = check_consistency(abc, {{"S2", 1}, {"S3", 2}});
  CHECK(ok.consistent);
  auto late = check_consistency(abc, {{"S3", 1}});
  CHECK_FALSE(late.consistent);
  CHECK(late.witness_index == 0u);
  CHECK(late.witness_state == "S3");
  CHECK(late.earliest_arrival == 2);
  auto order = check_consistency(abc, {{"S3", 10}, {"S2", 10}});
  CHECK_FALSE(order.consistent);
  CHECK(order.witness_index == 1u);
  CHECK_FALSE(order.earliest_arrival.has_value());
  CHECK(check::error_code([&] { check_consistency(abc, {{"Q", 1}}); }) == ErrorCode::UnknownStateId);
}

TEST_CASE("consistency in a parallel fragment") {
  auto a = chain("a", 3, "S", 1, 2);
  auto b = chain("b", 3, "S", 1, 1);
  ParallelFragment f({a, b}, {0, 10});
  CHECK(check::error_code([&] { check_consistency(f, {{"S2", 5}}); }) == ErrorCode::UnknownStateId);
  CHECK(check_consistency(f, {{"b/S3", 2}, {"a/S2", 2}}).consistent);
  auto r = check_consistency(f, {{"a/S3", 4}, {"b/S2", 3}});
  CHECK_FALSE(r.consistent);
  CHECK(r.witness_state == "b/S2");
  CHECK(r.earliest_arrival == 4);
}

TEST_CASE("property: consistency agrees with timed path enumeration") {
  std::mt19937_64 rng(8080);
  int consistent = 0;
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<CanonicalDiagram> kids;
    const int n_kids = std::uniform_int_distribution<int>(1, 2)(rng);
    for (int k = 0; k < n_kids; ++k) {
      const int n = std::uniform_int_distribution<int>(2, 4)(rng);
      auto d = chain("c" + std::to_string(k), n, "K" + std::to_string(k) + "_");
      for (auto& a : d.dev_arcs) a.delta = static_cast<Tick>(1 + rng() % 3);
      for (int i = 1; i <= n; ++i) {
        for (int j = i + 2; j <= n; ++j) {
          if (rng() % 3 == 0) {
            d.dev_arcs.push_back({d.states[i - 1].id, d.states[j - 1].id,
                                  static_cast<Tick>(1 + rng() % 5)});
          }
        }
      }
      kids.push_back(d);
    }
    std::vector<Requirement> reqs;
    std::vector<oracle::TimedGoal> goals;
    const int n_req = std::uniform_int_distribution<int>(1, 3)(rng);
    for (int r = 0; r < n_req; ++r) {
      const std::size_t k = rng() % kids.size();
      const auto& st = kids[k].states[rng() % kids[k].states.size()].id;
      const Tick deadline = static_cast<Tick>(rng() % 9);
      reqs.push_back({kids[k].id + "/" + st, deadline});
      goals.push_back({k, st, deadline});
    }
    const bool got = check_consistency(ParallelFragment(kids, {}), reqs).consistent;
    const bool want = oracle::consistent_by_enumeration(kids, goals);
    CAPTURE(trial);
    CHECK(got == want);
    consistent += want ? 1 : 0;
  }
  // Both outcomes must be exercised.
  CHECK(consistent > 20);
  CHECK(consistent < 280);
}
