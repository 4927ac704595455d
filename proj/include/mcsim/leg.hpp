#pragma once

#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <string>
#include <utility>

#include "mcsim/channel.hpp"
#include "mcsim/engine.hpp"
#include "mcsim/pdu.hpp"

namespace mcsim {

enum class RatKind { TerrestrialNr, Satellite, OtherTerrestrial };
enum class AdminState { Up, Down };

inline constexpr std::uint64_t kSpeedOfLightMps = 299'792'458;

struct LegConfig {
  std::string id;
  LegIndex index{0};
  RatKind rat{RatKind::TerrestrialNr};
  std::uint64_t capacity_bps{0};
  double distance_m{0.0};
  std::optional<Duration> prop_delay;  // overrides distance/c when set
  std::size_t queue_cap{1000};
  GeChannelConfig channel{};

  void validate() const {
    if (capacity_bps == 0) throw ValidationError("Leg " + id + ": capacity must be > 0");
    if (!(distance_m >= 0.0) || !std::isfinite(distance_m)) {
      throw ValidationError("Leg " + id + ": distance must be >= 0");
    }
    if (queue_cap == 0) throw ValidationError("Leg " + id + ": queue_cap must be > 0");
    channel.validate();
  }
};

inline Duration propagation_delay(const LegConfig& cfg) {
  if (cfg.prop_delay) return *cfg.prop_delay;
  const double whole = std::floor(cfg.distance_m);
  if (whole == cfg.distance_m) {
    return ratio_to_ns(static_cast<std::uint64_t>(whole), kSpeedOfLightMps);
  }
  const double ns = cfg.distance_m * 1e9 / static_cast<double>(kSpeedOfLightMps);
  return Duration{static_cast<std::int64_t>(std::floor(ns + 0.5))};
}

inline Duration serialization_delay(const LegConfig& cfg, std::uint64_t size_bits) {
  return ratio_to_ns(size_bits, cfg.capacity_bps);
}

struct LegCounters {
  std::uint64_t offered_pdus{0};
  std::uint64_t offered_bits{0};
  std::uint64_t delivered_pdus{0};
  std::uint64_t delivered_bits{0};
  std::uint64_t lost_channel{0};
  std::uint64_t dropped_linkdown{0};
  std::uint64_t dropped_overflow{0};
};

// Collapsed RLC/MAC/PHY model of one gNB-DU radio leg: a FIFO transmit queue
// in front of a single serializer, a propagation pipe, and a Gilbert-Elliott
// loss channel stepped once per transmission attempt (loss draw first,
// transition draw second).
//
// Admin Down drops instead of buffering: queued PDUs and the PDU mid-
// serialization are dropped as LinkDown; PDUs already propagating deliver.
class Leg {
 public:
  using DeliveryFn = std::function<void(const PdcpPdu&, LegIndex)>;

  Leg(Engine& engine, LegConfig cfg, DeliveryFn on_delivery)
      : engine_(engine),
        cfg_(std::move(cfg)),
        channel_(cfg_.channel),
        on_delivery_(std::move(on_delivery)),
        prop_delay_(propagation_delay(cfg_)),
        last_sync_(engine.now()) {
    cfg_.validate();
  }

  // Scheduled events capture `this`; the leg must stay put.
  Leg(const Leg&) = delete;
  Leg& operator=(const Leg&) = delete;

  const LegConfig& config() const { return cfg_; }
  AdminState admin_state() const { return admin_; }
  const LegCounters& totals() const { return totals_; }
  Duration prop_delay() const { return prop_delay_; }

  std::size_t in_flight() const {
    return queue_.size() + (serializing_ ? 1 : 0) + propagating_;
  }

  void transmit(PdcpPdu pdu) {
    sync(engine_.now());
    const std::uint64_t bits = std::uint64_t{pdu.payload_bytes} * 8;
    totals_.offered_pdus++;
    totals_.offered_bits += bits;
    window_.offered_pdus++;
    window_.offered_bits += bits;
    if (admin_ == AdminState::Down) {
      totals_.dropped_linkdown++;
      window_.dropped_linkdown++;
      return;
    }
    if (queue_.size() >= cfg_.queue_cap) {
      totals_.dropped_overflow++;
      window_.dropped_overflow++;
      return;
    }
    queue_.push_back(pdu);
    kick();
  }

  void set_admin(AdminState s) {
    if (s == admin_) return;
    sync(engine_.now());
    admin_ = s;
    if (s == AdminState::Down) {
      if (serializing_) {
        engine_.cancel(tx_done_);
        serializing_ = false;
        totals_.dropped_linkdown++;
        window_.dropped_linkdown++;
      }
      totals_.dropped_linkdown += queue_.size();
      window_.dropped_linkdown += queue_.size();
      queue_.clear();
    }
  }

  struct WindowStats {
    LegCounters counters;
    double mean_queue_depth{0.0};
    AdminState admin{AdminState::Up};
  };

  // Snapshot of per-window counters; resets them for the next window.
  WindowStats take_window(SimTime window_end) {
    sync(window_end);
    WindowStats out;
    out.counters = window_;
    const std::int64_t span = window_end.ns - window_start_.ns;
    out.mean_queue_depth =
        span > 0 ? static_cast<double>(window_depth_integral_) / static_cast<double>(span)
                 : 0.0;
    out.admin = admin_;
    window_ = LegCounters{};
    window_depth_integral_ = 0;
    window_start_ = window_end;
    return out;
  }

  // Fraction of elapsed time the serializer was busy.
  double utilization(SimTime at) {
    sync(at);
    return at.ns == 0 ? 0.0
                      : static_cast<double>(total_busy_ns_) / static_cast<double>(at.ns);
  }

 private:
  void kick() {
    if (serializing_ || queue_.empty() || admin_ == AdminState::Down) return;
    sync(engine_.now());
    PdcpPdu pdu = queue_.front();
    queue_.pop_front();
    serializing_ = true;
    const Duration ser = serialization_delay(cfg_, std::uint64_t{pdu.payload_bytes} * 8);
    tx_done_ = engine_.schedule(ser, "leg:" + cfg_.id + ":txdone",
                                [this, pdu] { on_tx_done(pdu); });
  }

  void on_tx_done(PdcpPdu pdu) {
    sync(engine_.now());
    serializing_ = false;
    const auto step = channel_.step(engine_.rng("channel:" + cfg_.id));
    if (step.lost) {
      totals_.lost_channel++;
      window_.lost_channel++;
    } else {
      ++propagating_;
      engine_.schedule(prop_delay_, "leg:" + cfg_.id + ":deliver",
                       [this, pdu] { deliver(pdu); });
    }
    kick();
  }

  void deliver(PdcpPdu pdu) {
    sync(engine_.now());
    --propagating_;
    const std::uint64_t bits = std::uint64_t{pdu.payload_bytes} * 8;
    totals_.delivered_pdus++;
    totals_.delivered_bits += bits;
    window_.delivered_pdus++;
    window_.delivered_bits += bits;
    pdu.leg = cfg_.index;
    on_delivery_(pdu, cfg_.index);
  }

  // Advance the time-weighted queue-depth and busy-time integrals to `now`.
  void sync(SimTime now) {
    const std::int64_t dt = now.ns - last_sync_.ns;
    if (dt <= 0) return;
    window_depth_integral_ += static_cast<std::uint64_t>(queue_.size()) * dt;
    if (serializing_) total_busy_ns_ += dt;
    last_sync_ = now;
  }

  Engine& engine_;
  LegConfig cfg_;
  GeChannel channel_;
  DeliveryFn on_delivery_;
  Duration prop_delay_;

  AdminState admin_{AdminState::Up};
  std::deque<PdcpPdu> queue_;
  bool serializing_{false};
  EventHandle tx_done_{};
  std::size_t propagating_{0};

  LegCounters totals_;
  LegCounters window_;
  SimTime window_start_{};
  std::uint64_t window_depth_integral_{0};
  std::uint64_t total_busy_ns_{0};
  SimTime last_sync_{};
};

}  // namespace mcsim
