#pragma once

#include <cstdint>
#include <vector>

#include "mcsim/error.hpp"
#include "mcsim/leg.hpp"
#include "mcsim/time.hpp"

namespace mcsim {

// dRRM output: per-leg counters over one control window.
struct MeasurementReport {
  LegIndex leg{0};
  SimTime window_start{};
  SimTime window_end{};
  std::uint64_t offered_bits{0};
  std::uint64_t delivered_bits{0};
  std::uint64_t lost_pdus{0};  // all causes: channel, link down, overflow
  std::uint64_t delivered_pdus{0};
  double mean_queue_depth{0.0};
  AdminState admin{AdminState::Up};
};

inline MeasurementReport drrm_measure(Leg& leg, SimTime window_start, SimTime window_end) {
  auto w = leg.take_window(window_end);
  MeasurementReport r;
  r.leg = leg.config().index;
  r.window_start = window_start;
  r.window_end = window_end;
  r.offered_bits = w.counters.offered_bits;
  r.delivered_bits = w.counters.delivered_bits;
  r.delivered_pdus = w.counters.delivered_pdus;
  r.lost_pdus =
      w.counters.lost_channel + w.counters.dropped_linkdown + w.counters.dropped_overflow;
  r.mean_queue_depth = w.mean_queue_depth;
  r.admin = w.admin;
  return r;
}

// cRRM's aggregated picture of one leg. EWMA values are seeded by the first
// report; admin is the last reported state (threshold and RL decisions key
// off it).
struct LegView {
  double ewma_thr_bps{0.0};
  double ewma_loss{0.0};
  double ewma_delay_ns{0.0};
  std::uint32_t staleness{0};  // epochs since last report
  AdminState admin{AdminState::Up};
  bool seeded{false};
};

struct NetworkView {
  std::vector<LegView> legs;
  SimTime timestamp{};
};

// Static per-leg facts the CU knows from configuration; used to turn queue
// depth into a delay estimate (the report itself carries no delay field).
struct LegStaticInfo {
  std::uint64_t capacity_bps{0};
  Duration prop_delay{};
};

inline void crrm_update(NetworkView& view, const std::vector<MeasurementReport>& reports,
                        double alpha, const std::vector<LegStaticInfo>& leg_info,
                        SimTime now) {
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw ValidationError("crrm_update: alpha must be in (0,1]");
  }
  std::vector<bool> reported(view.legs.size(), false);
  for (const auto& r : reports) {
    if (r.window_end <= r.window_start) {
      throw ValidationError("crrm_update: empty measurement window");
    }
    auto& lv = view.legs.at(r.leg);
    const double window_s = to_seconds(r.window_end - r.window_start);
    const double thr = static_cast<double>(r.delivered_bits) / window_s;
    const double decided = static_cast<double>(r.delivered_pdus + r.lost_pdus);
    const double loss = decided > 0 ? static_cast<double>(r.lost_pdus) / decided : 0.0;

    const auto& info = leg_info.at(r.leg);
    double delay_ns = static_cast<double>(info.prop_delay.ns);
    if (r.delivered_pdus > 0 && info.capacity_bps > 0) {
      const double mean_pdu_bits =
          static_cast<double>(r.delivered_bits) / static_cast<double>(r.delivered_pdus);
      delay_ns += r.mean_queue_depth * mean_pdu_bits /
                  static_cast<double>(info.capacity_bps) * 1e9;
    }

    if (!lv.seeded) {
      lv.ewma_thr_bps = thr;
      lv.ewma_loss = loss;
      lv.ewma_delay_ns = delay_ns;
      lv.seeded = true;
    } else {
      lv.ewma_thr_bps = alpha * thr + (1 - alpha) * lv.ewma_thr_bps;
      lv.ewma_loss = alpha * loss + (1 - alpha) * lv.ewma_loss;
      lv.ewma_delay_ns = alpha * delay_ns + (1 - alpha) * lv.ewma_delay_ns;
    }
    lv.staleness = 0;
    lv.admin = r.admin;
    reported[r.leg] = true;
  }
  for (std::size_t i = 0; i < view.legs.size(); ++i) {
    if (!reported[i]) ++view.legs[i].staleness;
  }
  view.timestamp = now;
}

}  // namespace mcsim
