#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>

#include "mcsim/policy.hpp"
#include "mcsim/qlearn.hpp"
#include "mcsim/qoe.hpp"
#include "mcsim/view.hpp"

using namespace mcsim;

namespace {

QosFlow test_flow(std::uint64_t target_bps = 10'000'000) {
  QosFlow f;
  f.id = "f1";
  f.index = 0;
  f.target_thr_bps = target_bps;
  f.latency_budget = milliseconds(50);
  f.reliability_target = 0.0;
  return f;
}

MeasurementReport report_for(LegIndex leg, std::uint64_t delivered_bits, Duration window,
                             SimTime end) {
  MeasurementReport r;
  r.leg = leg;
  r.window_start = SimTime{end.ns - static_cast<std::uint64_t>(window.ns)};
  r.window_end = end;
  r.delivered_bits = delivered_bits;
  r.offered_bits = delivered_bits;
  r.delivered_pdus = delivered_bits / 12'000;
  return r;
}

}  // namespace

// ---------------------------------------------------------------------------
// dRRM measurement
// ---------------------------------------------------------------------------

TEST_CASE("drrm_measure: offered == delivered -> zero losses") {
  Engine eng(1);
  LegConfig cfg;
  cfg.id = "A";
  cfg.capacity_bps = 100'000'000;
  cfg.distance_m = 1000;
  Leg leg(eng, cfg, [](const PdcpPdu&, LegIndex) {});
  for (int i = 0; i < 10; ++i) {
    PdcpPdu p;
    p.count = i;
    p.payload_bytes = 1500;
    leg.transmit(p);
  }
  eng.run_until(SimTime{milliseconds(100).ns});
  auto r = drrm_measure(leg, SimTime{}, SimTime{milliseconds(100).ns});
  CHECK(r.delivered_pdus == 10);
  CHECK(r.lost_pdus == 0);
  CHECK(r.offered_bits == 10 * 12'000);
}

TEST_CASE("drrm_measure: empty window still emits a zeroed report") {
  Engine eng(1);
  LegConfig cfg;
  cfg.id = "A";
  cfg.capacity_bps = 1'000'000;
  Leg leg(eng, cfg, [](const PdcpPdu&, LegIndex) {});
  eng.run_until(SimTime{milliseconds(100).ns});
  auto r = drrm_measure(leg, SimTime{}, SimTime{milliseconds(100).ns});
  CHECK(r.offered_bits == 0);
  CHECK(r.delivered_pdus == 0);
  CHECK(r.lost_pdus == 0);
  CHECK(r.admin == AdminState::Up);
}

TEST_CASE("drrm_measure: leg Down for the whole window") {
  Engine eng(1);
  LegConfig cfg;
  cfg.id = "A";
  cfg.capacity_bps = 1'000'000;
  Leg leg(eng, cfg, [](const PdcpPdu&, LegIndex) {});
  leg.set_admin(AdminState::Down);
  PdcpPdu p;
  p.payload_bytes = 100;
  leg.transmit(p);
  eng.run_until(SimTime{milliseconds(100).ns});
  auto r = drrm_measure(leg, SimTime{}, SimTime{milliseconds(100).ns});
  CHECK(r.offered_bits == 800);
  CHECK(r.delivered_pdus == 0);
  CHECK(r.lost_pdus == 1);
  CHECK(r.admin == AdminState::Down);
}

// ---------------------------------------------------------------------------
// cRRM EWMA aggregation
// ---------------------------------------------------------------------------

TEST_CASE("crrm_update: EWMA by hand, alpha=0.5") {
  NetworkView view;
  view.legs.resize(1);
  std::vector<LegStaticInfo> info{{100'000'000, microseconds(10)}};

  // Seed with a 10 Mbit/s window, then blend a 20 Mbit/s sample.
  crrm_update(view, {report_for(0, 1'000'000, milliseconds(100), SimTime{milliseconds(100).ns})},
              0.5, info, SimTime{milliseconds(100).ns});
  CHECK(view.legs[0].ewma_thr_bps == 10e6);
  crrm_update(view, {report_for(0, 2'000'000, milliseconds(100), SimTime{milliseconds(200).ns})},
              0.5, info, SimTime{milliseconds(200).ns});
  CHECK(view.legs[0].ewma_thr_bps == 15e6);
}

TEST_CASE("crrm_update: alpha=1 tracks the latest sample exactly") {
  NetworkView view;
  view.legs.resize(1);
  std::vector<LegStaticInfo> info{{100'000'000, microseconds(10)}};
  for (std::uint64_t bits : {3'000'000, 700'000, 2'500'000}) {
    crrm_update(view, {report_for(0, bits, milliseconds(100), SimTime{milliseconds(100).ns})},
                1.0, info, SimTime{milliseconds(100).ns});
    CHECK(view.legs[0].ewma_thr_bps == static_cast<double>(bits) / 0.1);
  }
}

TEST_CASE("crrm_update: missing report bumps staleness, leaves EWMA untouched") {
  NetworkView view;
  view.legs.resize(2);
  std::vector<LegStaticInfo> info{{100'000'000, microseconds(10)},
                                  {100'000'000, microseconds(10)}};
  crrm_update(view,
              {report_for(0, 1'000'000, milliseconds(100), SimTime{milliseconds(100).ns}),
               report_for(1, 1'000'000, milliseconds(100), SimTime{milliseconds(100).ns})},
              0.5, info, SimTime{milliseconds(100).ns});
  const double before = view.legs[1].ewma_thr_bps;
  crrm_update(view, {report_for(0, 1'000'000, milliseconds(100), SimTime{milliseconds(200).ns})},
              0.5, info, SimTime{milliseconds(200).ns});
  CHECK(view.legs[1].staleness == 1);
  CHECK(view.legs[1].ewma_thr_bps == before);
  CHECK(view.legs[0].staleness == 0);
}

TEST_CASE("crrm_update: alpha outside (0,1] rejected") {
  NetworkView view;
  view.legs.resize(1);
  std::vector<LegStaticInfo> info{{1, Duration{}}};
  CHECK_THROWS_AS(crrm_update(view, {}, 0.0, info, SimTime{}), ValidationError);
  CHECK_THROWS_AS(crrm_update(view, {}, 1.5, info, SimTime{}), ValidationError);
}

// ---------------------------------------------------------------------------
// QoE scoring
// ---------------------------------------------------------------------------

TEST_CASE("qoe_score: full satisfaction scores 5") {
  FlowWindowStats s{12e6, milliseconds(10), 0.0};
  CHECK(qoe_score(s, test_flow(10'000'000), QoeWeights{}) == 5.0);
}

TEST_CASE("qoe_score: nothing delivered scores the floor 1.0") {
  FlowWindowStats s{0.0, std::nullopt, 1.0};
  CHECK(qoe_score(s, test_flow(), QoeWeights{}) == 1.0);
}

TEST_CASE("qoe_score: half throughput, weights (0.5,0.25,0.25) -> 4.0") {
  QoeWeights w{0.5, 0.25, 0.25};
  FlowWindowStats s{5e6, milliseconds(10), 0.0};
  CHECK(qoe_score(s, test_flow(10'000'000), w) == 4.0);
}

TEST_CASE("qoe_score: loss above target scales reliability satisfaction") {
  QosFlow f = test_flow();
  f.reliability_target = 0.01;
  FlowWindowStats s{12e6, milliseconds(1), 0.05};
  const double expect = 1.0 + 4.0 * (0.4 + 0.3 + 0.3 * (0.01 / 0.05));
  CHECK(qoe_score(s, f, QoeWeights{}) == doctest::Approx(expect));
}

TEST_CASE("qoe weights must sum to 1") {
  CHECK_THROWS_AS(qoe_score(FlowWindowStats{}, test_flow(), QoeWeights{0.5, 0.5, 0.5}),
                  ValidationError);
}

// ---------------------------------------------------------------------------
// Threshold policy
// ---------------------------------------------------------------------------

namespace {

NetworkView two_leg_view(double thr0, double thr1, AdminState a0 = AdminState::Up,
                         AdminState a1 = AdminState::Up) {
  NetworkView v;
  v.legs.resize(2);
  v.legs[0].ewma_thr_bps = thr0;
  v.legs[0].admin = a0;
  v.legs[1].ewma_thr_bps = thr1;
  v.legs[1].admin = a1;
  return v;
}

FlowSnapshot single_flow_on(LegIndex leg, std::uint64_t target = 10'000'000) {
  FlowSnapshot f;
  f.index = 0;
  f.qos = test_flow(target);
  f.mode = BearerMode::single(leg);
  return f;
}

}  // namespace

TEST_CASE("threshold: sustained low quality with a strong alternative -> Switch") {
  ThresholdPolicy p(ThresholdParams{0.5, 1.0, 3});
  const auto view = two_leg_view(2e6, 15e6);  // serving at 0.2x target, alt at 1.5x
  const std::vector<FlowSnapshot> flows{single_flow_on(0)};
  CHECK(p.decide(view, flows).empty());
  CHECK(p.decide(view, flows).empty());
  auto d = p.decide(view, flows);
  REQUIRE(d.size() == 1);
  CHECK(d[0].action == DirectiveAction::Switch);
  CHECK(d[0].to_leg == 1);
}

TEST_CASE("threshold: serving inside the hysteresis band -> NoChange") {
  ThresholdPolicy p(ThresholdParams{0.5, 1.0, 1});
  const auto view = two_leg_view(7e6, 20e6);  // 0.7x target: above theta_low
  const std::vector<FlowSnapshot> flows{single_flow_on(0)};
  for (int i = 0; i < 5; ++i) CHECK(p.decide(view, flows).empty());
}

TEST_CASE("threshold: Down serving leg switches immediately to the best Up leg") {
  ThresholdPolicy p(ThresholdParams{0.5, 1.0, 5});
  const auto view = two_leg_view(0, 8e6, AdminState::Down, AdminState::Up);
  auto d = p.decide(view, {single_flow_on(0)});
  REQUIRE(d.size() == 1);
  CHECK(d[0].action == DirectiveAction::Switch);
  CHECK(d[0].to_leg == 1);
}

TEST_CASE("threshold: no eligible alternative -> NoChange even when starving") {
  ThresholdPolicy p(ThresholdParams{0.5, 1.0, 1});
  const auto view = two_leg_view(1e6, 2e6);  // alt at 0.2x target: below theta_high
  for (int i = 0; i < 4; ++i) CHECK(p.decide(view, {single_flow_on(0)}).empty());
}

TEST_CASE("threshold: theta_low must be below theta_high") {
  CHECK_THROWS_AS(ThresholdPolicy(ThresholdParams{1.0, 0.5, 1}), ValidationError);
}

// ---------------------------------------------------------------------------
// MADM policy
// ---------------------------------------------------------------------------

TEST_CASE("madm policy: switches to the top-ranked leg after hysteresis") {
  MadmPolicy p(MadmParams{MadmParams::Method::Topsis, 0.5, 0.25, 0.25, 2});
  auto view = two_leg_view(1e6, 20e6);
  view.legs[0].ewma_loss = 0.2;
  view.legs[1].ewma_loss = 0.0;
  const std::vector<FlowSnapshot> flows{single_flow_on(0)};
  CHECK(p.decide(view, flows).empty());
  auto d = p.decide(view, flows);
  REQUIRE(d.size() == 1);
  CHECK(d[0].to_leg == 1);
}

TEST_CASE("madm policy: keeps the serving leg when it already ranks first") {
  MadmPolicy p(MadmParams{MadmParams::Method::Saw, 0.5, 0.25, 0.25, 1});
  const auto view = two_leg_view(20e6, 1e6);
  for (int i = 0; i < 3; ++i) CHECK(p.decide(view, {single_flow_on(0)}).empty());
}

// ---------------------------------------------------------------------------
// Q-learning
// ---------------------------------------------------------------------------

TEST_CASE("q_select: epsilon=0 is the deterministic argmax; ties to index 0") {
  QTable q(3, QLearnConfig{1.0, 0.0, 0.0});
  RngStream rng(1, "t");
  CHECK(q.select("s", 0.0, rng) == 0);  // all-zero row ties to 0
  CHECK(rng.draw_count() == 1);         // one coin draw even when greedy
  q.update("s", 2, 1.0, "s2");
  CHECK(q.select("s", 0.0, rng) == 2);
}

TEST_CASE("q_select: epsilon=1 explores uniformly (chi-square over 1e4 draws)") {
  QTable q(4, QLearnConfig{0.5, 0.0, 1.0});
  RngStream rng(9, "t");
  const int n = 10'000;
  int counts[4] = {0, 0, 0, 0};
  for (int i = 0; i < n; ++i) ++counts[q.select("s", 1.0, rng)];
  CHECK(rng.draw_count() == 2 * n);  // coin + uniform pick each time
  double chi2 = 0;
  for (int c : counts) chi2 += (c - 2500.0) * (c - 2500.0) / 2500.0;
  CHECK(chi2 < 16.27);  // chi-square 99.9% quantile, 3 dof
}

TEST_CASE("q_update: single application with alpha=1, gamma=0, r=1") {
  QTable q(2, QLearnConfig{1.0, 0.0, 0.0});
  q.update("s", 0, 1.0, "s2");
  CHECK(q.value("s", 0) == 1.0);
}

TEST_CASE("q_update: alpha near zero moves the value by at most alpha*|target-Q|") {
  QTable q(2, QLearnConfig{1e-9, 0.0, 0.0});
  q.update("s", 0, 1.0, "s2");
  CHECK(q.value("s", 0) <= 1e-9);
  CHECK(q.value("s", 0) > 0.0);
}

TEST_CASE("q_update: two-action bandit converges to the analytic fixed point") {
  QTable q(2, QLearnConfig{0.1, 0.0, 0.1});
  RngStream rng(4, "t");
  for (int i = 0; i < 10'000; ++i) {
    const auto a = q.select("s", 0.1, rng);
    q.update("s", a, a == 0 ? 1.0 : 0.0, "s");
  }
  CHECK(q.greedy_action("s") == 0);
  CHECK(q.value("s", 0) == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("property: Q stays within r_max/(1-gamma) for rewards in [0,1]") {
  QTable q(3, QLearnConfig{0.5, 0.9, 0.1});
  RngStream rng(8, "t");
  const double bound = 1.0 / (1.0 - 0.9);
  for (int i = 0; i < 20'000; ++i) {
    const std::string s = std::to_string(rng.next_u64() % 5);
    const std::string s2 = std::to_string(rng.next_u64() % 5);
    const auto a = rng.pick_index(3);
    q.update(s, a, rng.next_unit(), s2);
    CHECK(q.value(s, a) <= bound + 1e-9);
    CHECK(q.value(s, a) >= 0.0);
  }
}

TEST_CASE("QTable checkpoint round-trips and rejects scheme mismatches") {
  const auto path = std::filesystem::temp_directory_path() / "mcsim_qtable_test.txt";
  QTable q(3, QLearnConfig{0.2, 0.8, 0.05});
  q.update("1,3", 0, 0.7, "2,3");
  q.update("2,3", 2, 0.4, "1,3");
  q.save(path.string());

  auto loaded = QTable::load(path.string(), 3, kRlBucketSchemeVersion);
  CHECK(loaded.config().alpha == 0.2);
  CHECK(loaded.config().gamma == 0.8);
  CHECK(loaded.config().epsilon == 0.05);
  CHECK(loaded.value("1,3", 0) == q.value("1,3", 0));
  CHECK(loaded.value("2,3", 2) == q.value("2,3", 2));
  CHECK(loaded.value("2,3", 1) == 0.0);

  CHECK_THROWS_AS(QTable::load(path.string(), 3, kRlBucketSchemeVersion + 1),
                  ValidationError);
  CHECK_THROWS_AS(QTable::load("/nonexistent/q.txt", 3, kRlBucketSchemeVersion),
                  ValidationError);
  std::filesystem::remove(path);
}

TEST_CASE("hyperparameter validation") {
  CHECK_THROWS_AS(QTable(2, QLearnConfig{0.0, 0.9, 0.1}), ValidationError);
  CHECK_THROWS_AS(QTable(2, QLearnConfig{0.1, 1.0, 0.1}), ValidationError);
  CHECK_THROWS_AS(QTable(2, QLearnConfig{0.1, 0.9, 1.5}), ValidationError);
  CHECK_THROWS_AS(QTable(0, QLearnConfig{}), ValidationError);
}

// ---------------------------------------------------------------------------
// RL policy plumbing
// ---------------------------------------------------------------------------

TEST_CASE("rl policy: frozen greedy runs are deterministic") {
  auto run_once = [] {
    RngRegistry rngs(77);
    QTable table(RlPolicy::action_count(2), QLearnConfig{});
    RlPolicy p(table, 2, QoeWeights{}, rngs.stream("policy:rl"), /*learning=*/false, 0.0);
    for (int epoch = 0; epoch < 20; ++epoch) {
      auto view = two_leg_view(epoch % 3 * 5e6, 10e6);
      FlowSnapshot f = single_flow_on(1);
      p.decide(view, {f});
    }
    std::vector<std::size_t> out;
    for (auto& rec : p.action_log()) out.push_back(rec.action);
    return out;
  };
  CHECK(run_once() == run_once());
}

TEST_CASE("rl policy: state encoding buckets throughput quartiles x admin") {
  RngRegistry rngs(1);
  QTable table(RlPolicy::action_count(2), QLearnConfig{});
  RlPolicy p(table, 2, QoeWeights{}, rngs.stream("policy:rl"), true, 0.1);
  QosFlow f = test_flow(10'000'000);
  auto view = two_leg_view(0, 4e6);
  CHECK(p.encode_state(view, f) == "0,1");
  view = two_leg_view(6e6, 10e6);
  CHECK(p.encode_state(view, f) == "2,2");
  view = two_leg_view(20e6, 1e6, AdminState::Down, AdminState::Up);
  CHECK(p.encode_state(view, f) == "7,1");
}

TEST_CASE("rl policy: emits no directive when the chosen action matches the mode") {
  RngRegistry rngs(3);
  QTable table(RlPolicy::action_count(2), QLearnConfig{});
  RlPolicy p(table, 2, QoeWeights{}, rngs.stream("policy:rl"), /*learning=*/false, 0.0);
  // Untrained table: greedy picks action 0 = Single(leg 0).
  auto d = p.decide(two_leg_view(1e6, 1e6), {single_flow_on(0)});
  CHECK(d.empty());
  d = p.decide(two_leg_view(1e6, 1e6), {single_flow_on(1)});
  REQUIRE(d.size() == 1);
  CHECK(d[0].action == DirectiveAction::Switch);
  CHECK(d[0].to_leg == 0);
}

TEST_CASE("rl policy: table action count must match the managed leg set") {
  RngRegistry rngs(3);
  QTable wrong(2, QLearnConfig{});
  CHECK_THROWS_AS(
      RlPolicy(wrong, 2, QoeWeights{}, rngs.stream("policy:rl"), false, 0.0),
      ValidationError);
}
