#pragma once

#include <cassert>
#include <memory>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "mcsim/engine.hpp"
#include "mcsim/leg.hpp"
#include "mcsim/metrics.hpp"
#include "mcsim/pdcp.hpp"
#include "mcsim/policy.hpp"
#include "mcsim/scenario.hpp"
#include "mcsim/traffic.hpp"
#include "mcsim/view.hpp"

namespace mcsim {

struct DirectiveRecord {
  std::uint64_t epoch{0};
  FlowIndex flow{0};
  DirectiveAction action{DirectiveAction::NoChange};
  bool applied{false};
  std::string detail;
};

// One fully wired run: gNB-CU user plane (SDAP mapping + PDCP per flow) and
// control plane (dRRM windows -> cRRM view -> policy -> directives) over the
// configured gNB-DU legs. Single-threaded; one instance per run.
class Simulation {
 public:
  using PolicyFactory = std::function<std::unique_ptr<Policy>(Engine&)>;

  Simulation(Scenario scenario, std::uint64_t seed, PolicyFactory policy_override = {})
      : scenario_(std::move(scenario)), seed_(seed), engine_(seed) {
    view_.legs.resize(scenario_.legs.size());
    for (const auto& lc : scenario_.legs) {
      legs_.push_back(std::make_unique<Leg>(
          engine_, lc, [this](const PdcpPdu& pdu, LegIndex leg) { on_delivery(pdu, leg); }));
      leg_info_.push_back(LegStaticInfo{lc.capacity_bps, propagation_delay(lc)});
    }
    for (const auto& fc : scenario_.flows) {
      flows_.push_back(std::make_unique<FlowRuntime>(engine_, scenario_, fc, this));
    }
    policy_ = policy_override ? policy_override(engine_) : make_policy();
  }

  // Legs and event callbacks hold references into this object.
  Simulation(const Simulation&) = delete;
  Simulation& operator=(const Simulation&) = delete;

  Engine& engine() { return engine_; }
  Policy* policy() { return policy_.get(); }
  const std::vector<DirectiveRecord>& directive_log() const { return directive_log_; }

  // Streams one line per processed event; enable before run().
  void set_event_log(std::ostream* out) {
    if (!out) {
      engine_.set_event_sink({});
      return;
    }
    engine_.set_event_sink([out](SimTime t, std::uint64_t seq, const std::string& label) {
      (*out) << "t=" << t.ns << " seq=" << seq << " " << label << "\n";
    });
  }

  MetricsReport run() {
    for (std::size_t i = 0; i < flows_.size(); ++i) schedule_start(static_cast<FlowIndex>(i));
    for (const auto& ev : scenario_.faults) {
      engine_.schedule(ev.down_at - SimTime{}, "fault:" + scenario_.legs[ev.leg].id + ":down",
                       [this, leg = ev.leg] { legs_[leg]->set_admin(AdminState::Down); });
      if (ev.up_at) {
        engine_.schedule(*ev.up_at - SimTime{}, "fault:" + scenario_.legs[ev.leg].id + ":up",
                         [this, leg = ev.leg] { legs_[leg]->set_admin(AdminState::Up); });
      }
    }
    if (scenario_.epoch.ns <= static_cast<std::int64_t>(scenario_.sim_duration.ns)) {
      engine_.schedule(scenario_.epoch, "epoch", [this] { on_epoch(); });
    }
    engine_.run_until(scenario_.sim_duration);
    return build_report();
  }

 private:
  struct FlowRuntime {
    FlowConfig cfg;
    FlowGen gen;
    PdcpTx tx;
    std::unique_ptr<PdcpRx> rx;

    std::uint64_t offered_sdus{0};
    std::uint64_t offered_bytes{0};
    std::uint64_t delivered_sdus{0};
    std::uint64_t delivered_bytes{0};
    std::uint64_t lost_sdus{0};
    std::uint64_t switch_count{0};
    std::vector<std::int64_t> latencies;
    std::vector<std::uint8_t> sdu_state;  // 0 pending, 1 delivered, 2 lost

    std::uint64_t win_delivered_bits{0};
    std::uint64_t win_delivered{0};
    std::uint64_t win_lost{0};
    std::vector<std::int64_t> win_latencies;

    FlowRuntime(Engine& engine, const Scenario& s, const FlowConfig& fc, Simulation* sim)
        : cfg(fc),
          gen(fc.gen),
          tx(fc.qos.index, fc.bearer),
          rx(std::make_unique<PdcpRx>(
              engine, fc.qos.id, s.t_reordering,
              [sim, idx = fc.qos.index](std::uint64_t count, std::uint32_t bytes,
                                        SimTime born) {
                sim->on_sdu_delivered(idx, count, bytes, born);
              },
              [sim, idx = fc.qos.index](std::uint64_t count) {
                sim->on_sdu_lost(idx, count);
              })) {}
  };

  std::unique_ptr<Policy> make_policy() {
    const auto& pc = scenario_.policy;
    if (pc.name == "static") return std::make_unique<StaticPolicy>();
    if (pc.name == "threshold") return std::make_unique<ThresholdPolicy>(pc.threshold);
    if (pc.name == "saw" || pc.name == "topsis") return std::make_unique<MadmPolicy>(pc.madm);
    if (pc.name == "rl") {
      // Plain runs evaluate a frozen table; training goes through train_rl().
      const auto actions = RlPolicy::action_count(scenario_.legs.size());
      owned_qtable_ = std::make_unique<QTable>(
          pc.rl.checkpoint.empty()
              ? QTable(actions, pc.rl.qlearn)
              : QTable::load(pc.rl.checkpoint, actions, kRlBucketSchemeVersion));
      return std::make_unique<RlPolicy>(*owned_qtable_, scenario_.legs.size(),
                                        scenario_.qoe_weights, engine_.rng("policy:rl"),
                                        /*learning=*/false, pc.rl.qlearn.epsilon);
    }
    throw ValidationError("unknown policy: " + pc.name);
  }

  void schedule_start(FlowIndex i) {
    auto& f = *flows_[i];
    if (f.cfg.gen.start >= f.cfg.gen.stop) return;  // empty active window
    engine_.schedule(f.cfg.gen.start - SimTime{}, "flow:" + f.cfg.qos.id + ":arrival",
                     [this, i] { on_arrival(i); });
  }

  // Active window is [start, stop).
  void on_arrival(FlowIndex i) {
    auto& f = *flows_[i];
    const SimTime now = engine_.now();
    if (now >= f.cfg.gen.stop) return;

    const std::uint32_t size = f.cfg.gen.size_bytes;
    f.offered_sdus++;
    f.offered_bytes += size;
    f.sdu_state.push_back(0);
    auto pdus = f.tx.send(size, now);
    for (const auto& pdu : pdus) legs_[pdu.leg]->transmit(pdu);

    const auto gap = f.gen.next(engine_.rng("traffic:" + f.cfg.qos.id)).inter_arrival;
    const SimTime next = now + gap;
    if (next < f.cfg.gen.stop && next <= scenario_.sim_duration) {
      engine_.schedule(gap, "flow:" + f.cfg.qos.id + ":arrival", [this, i] { on_arrival(i); });
    }
  }

  void on_delivery(const PdcpPdu& pdu, LegIndex leg) {
    auto& f = *flows_[pdu.flow];
    if (scenario_.ack_enabled) {
      const Duration ack_delay =
          scenario_.ack_delay.value_or(legs_[leg]->prop_delay());
      engine_.schedule(ack_delay, "ack:" + f.cfg.qos.id,
                       [this, flow = pdu.flow, count = pdu.count] {
                         flows_[flow]->tx.ack(count);
                       });
    }
    f.rx->receive(pdu);
  }

  void on_sdu_delivered(FlowIndex i, std::uint64_t count, std::uint32_t bytes, SimTime born) {
    auto& f = *flows_[i];
    assert(count < f.sdu_state.size());
    assert(f.sdu_state[count] == 0);  // in-order delivery implies never seen before
    f.sdu_state[count] = 1;
    f.delivered_sdus++;
    f.delivered_bytes += bytes;
    const std::int64_t latency = (engine_.now() - born).ns;
    f.latencies.push_back(latency);
    f.win_delivered++;
    f.win_delivered_bits += std::uint64_t{bytes} * 8;
    f.win_latencies.push_back(latency);
  }

  void on_sdu_lost(FlowIndex i, std::uint64_t count) {
    auto& f = *flows_[i];
    assert(count < f.sdu_state.size());
    assert(f.sdu_state[count] == 0);
    f.sdu_state[count] = 2;
    f.lost_sdus++;
    f.win_lost++;
  }

  void on_epoch() {
    const SimTime now = engine_.now();
    const SimTime window_start{now.ns - static_cast<std::uint64_t>(scenario_.epoch.ns)};

    std::vector<MeasurementReport> reports;
    reports.reserve(legs_.size());
    for (auto& leg : legs_) reports.push_back(drrm_measure(*leg, window_start, now));
    crrm_update(view_, reports, scenario_.crrm_alpha, leg_info_, now);

    std::vector<FlowSnapshot> snapshots;
    snapshots.reserve(flows_.size());
    for (auto& fp : flows_) {
      auto& f = *fp;
      FlowSnapshot snap;
      snap.index = f.cfg.qos.index;
      snap.qos = f.cfg.qos;
      snap.mode = f.tx.mode();
      snap.window.achieved_thr_bps =
          static_cast<double>(f.win_delivered_bits) / to_seconds(scenario_.epoch);
      if (!f.win_latencies.empty()) {
        snap.window.p95_latency = percentile_nearest_rank(f.win_latencies, 95.0);
      }
      const std::uint64_t decided = f.win_delivered + f.win_lost;
      snap.window.loss_fraction =
          decided > 0 ? static_cast<double>(f.win_lost) / static_cast<double>(decided) : 0.0;
      snapshots.push_back(std::move(snap));
      f.win_delivered_bits = 0;
      f.win_delivered = 0;
      f.win_lost = 0;
      f.win_latencies.clear();
    }

    std::vector<Directive> directives;
    try {
      directives = policy_->decide(view_, snapshots);
    } catch (const std::exception& e) {
      // Policy failures degrade to NoChange for this epoch.
      engine_.schedule(Duration{0}, std::string("policy-error: ") + e.what(), [] {});
      directives.clear();
    }
    for (const auto& d : directives) apply_directive(d);

    ++epoch_index_;
    const SimTime next = now + scenario_.epoch;
    if (next <= scenario_.sim_duration) {
      engine_.schedule(scenario_.epoch, "epoch", [this] { on_epoch(); });
    }
  }

  void apply_directive(const Directive& d) {
    DirectiveRecord rec;
    rec.epoch = epoch_index_;
    rec.flow = d.flow;
    rec.action = d.action;

    const std::string reason = validate_directive(d);
    if (!reason.empty()) {
      rec.applied = false;
      rec.detail = reason;
      directive_log_.push_back(rec);
      engine_.schedule(Duration{0}, "directive-rejected: " + reason, [] {});
      return;
    }
    rec.applied = true;
    directive_log_.push_back(rec);

    // Applied at this epoch boundary as a zero-delay event so it shows up in
    // the event log; in-flight PDUs are unaffected.
    switch (d.action) {
      case DirectiveAction::Switch:
        engine_.schedule(
            Duration{0},
            "directive:switch flow=" + flows_[d.flow]->cfg.qos.id +
                " to=" + scenario_.legs[d.to_leg].id,
            [this, flow = d.flow, to = d.to_leg] {
              auto& f = *flows_[flow];
              const BearerMode before = f.tx.mode();
              auto retrans = f.tx.apply_switch(to);
              if (f.tx.mode() == before) return;
              f.switch_count++;
              for (const auto& pdu : retrans) legs_[pdu.leg]->transmit(pdu);
            });
        break;
      case DirectiveAction::SetSplit:
      case DirectiveAction::SetDuplicate:
        engine_.schedule(Duration{0},
                         "directive:set-mode flow=" + flows_[d.flow]->cfg.qos.id,
                         [this, flow = d.flow, mode = d.mode] {
                           flows_[flow]->tx.set_mode(mode);
                         });
        break;
      case DirectiveAction::NoChange:
        break;
    }
  }

  std::string validate_directive(const Directive& d) const {
    if (d.flow >= flows_.size()) return "unknown flow index";
    switch (d.action) {
      case DirectiveAction::Switch:
        if (d.to_leg >= legs_.size()) return "unknown leg index";
        return "";
      case DirectiveAction::SetSplit:
        if (d.mode.kind != BearerMode::Kind::Split) return "mode/action mismatch";
        break;
      case DirectiveAction::SetDuplicate:
        if (d.mode.kind != BearerMode::Kind::Duplicate) return "mode/action mismatch";
        break;
      case DirectiveAction::NoChange:
        return "";
    }
    try {
      d.mode.validate(legs_.size());
    } catch (const ValidationError& e) {
      return e.what();
    }
    return "";
  }

  MetricsReport build_report() {
    MetricsReport r;
    r.meta.seed = seed_;
    r.meta.scenario_hash = scenario_hash(scenario_);
    r.meta.policy = policy_->name();
    r.meta.sim_duration_ns = scenario_.sim_duration.ns;

    const double duration_s = static_cast<double>(scenario_.sim_duration.ns) * 1e-9;
    for (auto& fp : flows_) {
      auto& f = *fp;
      FlowMetrics m;
      m.id = f.cfg.qos.id;
      m.offered_sdus = f.offered_sdus;
      m.offered_bytes = f.offered_bytes;
      m.delivered_sdus = f.delivered_sdus;
      m.delivered_bytes = f.delivered_bytes;
      m.goodput_bps = duration_s > 0 ? static_cast<double>(f.delivered_bytes) * 8 / duration_s : 0;
      m.latency_p50_ns = percentile_nearest_rank(f.latencies, 50.0).ns;
      m.latency_p95_ns = percentile_nearest_rank(f.latencies, 95.0).ns;
      m.latency_p99_ns = percentile_nearest_rank(f.latencies, 99.0).ns;
      const std::uint64_t decided = f.delivered_sdus + f.lost_sdus;
      m.loss_fraction = decided > 0 ? static_cast<double>(f.lost_sdus) / decided : 0.0;
      m.lost_sdus = f.lost_sdus;
      m.switch_count = f.switch_count;
      m.duplicate_discards = f.rx->dup_discards();
      m.reordering_timeouts = f.rx->reordering_timeouts();

      // Exact accounting: every offered SDU is delivered xor lost xor pending.
      std::uint64_t pending = 0;
      for (std::uint8_t st : f.sdu_state) pending += st == 0;
      assert(f.offered_sdus == f.delivered_sdus + f.lost_sdus + pending);
      m.in_flight_at_end = pending;
      r.flows.push_back(std::move(m));
    }
    for (auto& lp : legs_) {
      const auto& t = lp->totals();
      LegMetrics m;
      m.id = lp->config().id;
      m.offered_pdus = t.offered_pdus;
      m.delivered_pdus = t.delivered_pdus;
      m.dropped_channel = t.lost_channel;
      m.dropped_linkdown = t.dropped_linkdown;
      m.dropped_overflow = t.dropped_overflow;
      m.utilization = lp->utilization(scenario_.sim_duration);
      assert(t.offered_pdus == t.delivered_pdus + t.lost_channel + t.dropped_linkdown +
                                   t.dropped_overflow + lp->in_flight());
      r.legs.push_back(std::move(m));
    }
    return r;
  }

  Scenario scenario_;
  std::uint64_t seed_;
  Engine engine_;
  std::vector<std::unique_ptr<Leg>> legs_;
  std::vector<LegStaticInfo> leg_info_;
  std::vector<std::unique_ptr<FlowRuntime>> flows_;
  std::unique_ptr<QTable> owned_qtable_;
  std::unique_ptr<Policy> policy_;
  NetworkView view_;
  std::uint64_t epoch_index_{0};
  std::vector<DirectiveRecord> directive_log_;
};

inline MetricsReport run_simulation(const Scenario& scenario, std::uint64_t seed) {
  Simulation sim(scenario, seed);
  return sim.run();
}

}  // namespace mcsim
