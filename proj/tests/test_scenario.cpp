#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "mcsim/metrics.hpp"
#include "mcsim/scenario.hpp"

using namespace mcsim;

namespace {

json minimal_scenario() {
  return json::parse(R"({
    "sim_duration_ms": 1000,
    "legs": [ {"id": "A", "capacity_mbps": 10, "distance_km": 3} ],
    "flows": [ {"id": "f1", "rate_pps": 100, "size_bytes": 1500,
                "bearer": {"mode": "single", "leg": "A"}} ]
  })");
}

}  // namespace

TEST_CASE("minimal scenario parses with documented defaults") {
  auto s = parse_scenario(minimal_scenario());
  CHECK(s.master_seed == 1);
  CHECK(s.sim_duration.ns == 1'000'000'000ull);
  CHECK(s.epoch.ns == 100'000'000);  // 100 ms
  CHECK(s.crrm_alpha == 0.5);
  CHECK(s.ack_enabled);
  CHECK_FALSE(s.ack_delay.has_value());
  CHECK(s.legs.size() == 1);
  CHECK(s.legs[0].capacity_bps == 10'000'000);
  CHECK(s.legs[0].queue_cap == 1000);
  CHECK(s.legs[0].channel.loss_good == 0.0);
  // t_reordering defaults to 4x the largest propagation delay (3 km -> 10007 ns).
  CHECK(s.t_reordering.ns == 4 * 10'007);
  CHECK(s.flows.size() == 1);
  CHECK(s.flows[0].gen.stop.ns == s.sim_duration.ns);  // stop defaults to sim end
  CHECK(s.flows[0].qos.target_thr_bps == 1'200'000);   // rate*size*8
  CHECK(s.flows[0].bearer == BearerMode::single(0));
  CHECK(s.policy.name == "static");
}

TEST_CASE("validation errors name the offending field and location") {
  SUBCASE("missing required field") {
    auto j = minimal_scenario();
    j.erase("sim_duration_ms");
    CHECK_THROWS_WITH_AS(parse_scenario(j),
                         "scenario: missing required field \"sim_duration_ms\"",
                         ValidationError);
  }
  SUBCASE("non-positive duration") {
    auto j = minimal_scenario();
    j["sim_duration_ms"] = 0;
    CHECK_THROWS_WITH_AS(parse_scenario(j), "scenario: \"sim_duration_ms\" must be positive",
                         ValidationError);
  }
  SUBCASE("dangling leg reference names the flow and the leg") {
    auto j = minimal_scenario();
    j["flows"][0]["bearer"]["leg"] = "X";
    CHECK_THROWS_AS(parse_scenario(j), ValidationError);
    try {
      parse_scenario(j);
    } catch (const ValidationError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("\"X\"") != std::string::npos);
    }
  }
  SUBCASE("duplicate leg id") {
    auto j = minimal_scenario();
    j["legs"].push_back(j["legs"][0]);
    CHECK_THROWS_WITH_AS(parse_scenario(j), "scenario: legs[1]: duplicate leg id \"A\"",
                         ValidationError);
  }
  SUBCASE("duplicate flow id") {
    auto j = minimal_scenario();
    j["flows"].push_back(j["flows"][0]);
    CHECK_THROWS_AS(parse_scenario(j), ValidationError);
  }
  SUBCASE("unlisted flow with no default bearer") {
    auto j = minimal_scenario();
    j["flows"][0].erase("bearer");
    CHECK_THROWS_AS(parse_scenario(j), ValidationError);
    try {
      parse_scenario(j);
    } catch (const ValidationError& e) {
      CHECK(std::string(e.what()).find("f1") != std::string::npos);
    }
  }
  SUBCASE("unknown policy name") {
    auto j = minimal_scenario();
    j["policy"] = {{"name", "oracle"}};
    CHECK_THROWS_AS(parse_scenario(j), ValidationError);
  }
  SUBCASE("split weights must be positive integers") {
    auto j = minimal_scenario();
    j["legs"].push_back({{"id", "B"}, {"capacity_mbps", 5}});
    j["flows"][0]["bearer"] = {{"mode", "split"}, {"weights", {{"A", 1.5}, {"B", 1}}}};
    CHECK_THROWS_AS(parse_scenario(j), ValidationError);
  }
  SUBCASE("fault interval must be ordered") {
    auto j = minimal_scenario();
    j["faults"] = json::array({{{"leg", "A"}, {"down_at_ms", 500}, {"up_at_ms", 400}}});
    CHECK_THROWS_AS(parse_scenario(j), ValidationError);
  }
  SUBCASE("overlapping fault intervals on one leg") {
    auto j = minimal_scenario();
    j["faults"] = json::array({{{"leg", "A"}, {"down_at_ms", 100}, {"up_at_ms", 400}},
                               {{"leg", "A"}, {"down_at_ms", 300}, {"up_at_ms", 600}}});
    CHECK_THROWS_AS(parse_scenario(j), ValidationError);
  }
}

TEST_CASE("default_bearer applies to flows without an explicit bearer") {
  auto j = minimal_scenario();
  j["flows"][0].erase("bearer");
  j["default_bearer"] = {{"mode", "single"}, {"leg", "A"}};
  auto s = parse_scenario(j);
  CHECK(s.flows[0].bearer == BearerMode::single(0));
}

TEST_CASE("split bearer leg order follows scenario leg order, not JSON key order") {
  auto j = minimal_scenario();
  j["legs"].push_back({{"id", "B"}, {"capacity_mbps", 20}});
  j["flows"][0]["bearer"] = {{"mode", "split"}, {"weights", {{"B", 2}, {"A", 1}}}};
  auto s = parse_scenario(j);
  CHECK(s.flows[0].bearer.legs == std::vector<LegIndex>{0, 1});
  CHECK(s.flows[0].bearer.weights == std::vector<std::uint32_t>{1, 2});
}

TEST_CASE("policy parameter parsing") {
  auto j = minimal_scenario();
  j["policy"] = {{"name", "threshold"},
                 {"params", {{"theta_low", 0.3}, {"theta_high", 0.9}, {"hysteresis_epochs", 2}}}};
  auto s = parse_scenario(j);
  CHECK(s.policy.threshold.theta_low == 0.3);
  CHECK(s.policy.threshold.hysteresis_epochs == 2);

  j["policy"] = {{"name", "rl"},
                 {"params", {{"alpha", 0.2}, {"gamma", 0.8}, {"epsilon", 0.3},
                             {"epsilon_final", 0.0}, {"checkpoint", "q.txt"}}}};
  s = parse_scenario(j);
  CHECK(s.policy.rl.qlearn.alpha == 0.2);
  CHECK(s.policy.rl.checkpoint == "q.txt");
  REQUIRE(s.policy.rl_epsilon_final.has_value());
  CHECK(*s.policy.rl_epsilon_final == 0.0);

  j["policy"] = {{"name", "topsis"}, {"params", {{"w_thr", 0.6}, {"w_loss", 0.2}, {"w_delay", 0.2}}}};
  s = parse_scenario(j);
  CHECK(s.policy.madm.method == MadmParams::Method::Topsis);
}

TEST_CASE("scenario hash changes iff a field changes") {
  const auto base = scenario_hash(parse_scenario(minimal_scenario()));

  // Reparsing the same document (even reformatted) gives the same hash.
  auto j = minimal_scenario();
  CHECK(scenario_hash(parse_scenario(json::parse(j.dump()))) == base);

  // Any field change moves the hash.
  for (auto mutate : std::vector<std::function<void(json&)>>{
           [](json& x) { x["master_seed"] = 7; },
           [](json& x) { x["sim_duration_ms"] = 2000; },
           [](json& x) { x["legs"][0]["capacity_mbps"] = 11; },
           [](json& x) { x["legs"][0]["distance_km"] = 4; },
           [](json& x) { x["flows"][0]["rate_pps"] = 101; },
           [](json& x) { x["policy"] = {{"name", "threshold"}}; },
           [](json& x) {
             x["faults"] = json::array({{{"leg", "A"}, {"down_at_ms", 10}}});
           },
       }) {
    auto m = minimal_scenario();
    mutate(m);
    CHECK(scenario_hash(parse_scenario(m)) != base);
  }
}

TEST_CASE("load_scenario reads files and applies the --until override") {
  const auto path = std::filesystem::temp_directory_path() / "mcsim_scn.json";
  std::ofstream(path) << minimal_scenario().dump();
  auto s = load_scenario(path.string());
  CHECK(s.sim_duration.ns == 1'000'000'000ull);
  s = load_scenario(path.string(), 250.0);
  CHECK(s.sim_duration.ns == 250'000'000ull);
  std::filesystem::remove(path);

  CHECK_THROWS_AS(load_scenario("/nonexistent/scn.json"), ValidationError);
  std::ofstream(path) << "{not json";
  CHECK_THROWS_AS(load_scenario(path.string()), ValidationError);
  std::filesystem::remove(path);
}

// ---------------------------------------------------------------------------
// Metrics export
// ---------------------------------------------------------------------------

namespace {

MetricsReport sample_report() {
  MetricsReport r;
  r.meta = {42, "deadbeefdeadbeef", "static", 1'000'000'000};
  FlowMetrics f;
  f.id = "f1";
  f.offered_sdus = 100;
  f.offered_bytes = 150'000;
  f.delivered_sdus = 99;
  f.delivered_bytes = 148'500;
  f.goodput_bps = 1.188e6;
  f.latency_p50_ns = 130'007;
  f.latency_p95_ns = 140'000;
  f.latency_p99_ns = 150'000;
  f.loss_fraction = 0.01;
  f.lost_sdus = 1;
  f.switch_count = 1;
  f.duplicate_discards = 3;
  f.reordering_timeouts = 1;
  f.in_flight_at_end = 0;
  r.flows.push_back(f);
  LegMetrics l;
  l.id = "A";
  l.offered_pdus = 100;
  l.delivered_pdus = 99;
  l.dropped_channel = 1;
  l.utilization = 0.012;
  r.legs.push_back(l);
  return r;
}

}  // namespace

TEST_CASE("csv export: header plus one row per flow and per leg") {
  std::ostringstream out;
  const auto r = sample_report();
  write_csv(out, std::span<const MetricsReport>(&r, 1));
  std::istringstream in(out.str());
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(in, line)) lines.push_back(line);
  REQUIRE(lines.size() == 3);
  CHECK(lines[0] == kCsvHeader);
  CHECK(lines[1].rfind("flow,f1,42,deadbeefdeadbeef,static,1000000000,100,", 0) == 0);
  CHECK(lines[2].rfind("leg,A,42,deadbeefdeadbeef,static,1000000000,", 0) == 0);
  // Every row has the full fixed column count.
  const auto commas = [](const std::string& s) {
    return std::count(s.begin(), s.end(), ',');
  };
  CHECK(commas(lines[1]) == commas(lines[0]));
  CHECK(commas(lines[2]) == commas(lines[0]));
}

TEST_CASE("json export round-trips to the in-memory report") {
  const auto r = sample_report();
  std::ostringstream out;
  write_json(out, std::span<const MetricsReport>(&r, 1));
  CHECK(report_from_json(json::parse(out.str())) == r);
}

TEST_CASE("export_metrics rejects unknown formats and unwritable paths") {
  const auto r = sample_report();
  CHECK_THROWS_AS(export_metrics(r, "xml", "/tmp/x"), ValidationError);
  CHECK_THROWS_AS(export_metrics(r, "csv", "/nonexistent-dir/x.csv"), std::runtime_error);
}

TEST_CASE("percentile: nearest-rank on the full sample vector") {
  std::vector<std::int64_t> v;
  for (int i = 100; i >= 1; --i) v.push_back(i);
  CHECK(percentile_nearest_rank(v, 50).ns == 50);
  CHECK(percentile_nearest_rank(v, 95).ns == 95);
  CHECK(percentile_nearest_rank(v, 99).ns == 99);
  CHECK(percentile_nearest_rank({7}, 50).ns == 7);
  CHECK(percentile_nearest_rank({1, 2, 3}, 50).ns == 2);  // ceil(1.5) -> 2nd
  CHECK(percentile_nearest_rank({}, 95).ns == 0);
}
