#pragma once

#include <cassert>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mcsim/bearer.hpp"
#include "mcsim/engine.hpp"
#include "mcsim/pdu.hpp"

namespace mcsim {

// ---------------------------------------------------------------------------
// Transmit side: sequencing, duplication, deficit-weighted split scheduling,
// unacked bookkeeping, and lossless fast switch.
// ---------------------------------------------------------------------------

class PdcpTx {
 public:
  PdcpTx(FlowIndex flow, BearerMode mode) : flow_(flow) { reset_mode(std::move(mode)); }

  const BearerMode& mode() const { return mode_; }
  std::uint64_t next_count() const { return next_count_; }
  std::size_t unacked_size() const { return unacked_.size(); }
  std::uint64_t window_evictions() const { return window_evictions_; }

  // Assigns the next sn and fans the SDU out per bearer mode: one PDU
  // (Single), one per leg (Duplicate), or one on the DWRR-chosen leg (Split).
  std::vector<PdcpPdu> send(std::uint32_t payload_bytes, SimTime born_at) {
    const std::uint64_t count = next_count_++;
    std::vector<LegIndex> targets;
    switch (mode_.kind) {
      case BearerMode::Kind::Single:
        targets = {mode_.legs[0]};
        break;
      case BearerMode::Kind::Duplicate:
        targets = mode_.legs;
        break;
      case BearerMode::Kind::Split:
        targets = {dwrr_pick()};
        break;
    }
    SduRecord rec{payload_bytes, born_at, targets};
    std::vector<PdcpPdu> out;
    out.reserve(targets.size());
    for (LegIndex leg : targets) out.push_back(make_pdu(count, rec, leg));
    unacked_.emplace(count, std::move(rec));
    if (unacked_.size() > kReorderingWindow) {
      unacked_.erase(unacked_.begin());  // window guard; ack feedback keeps this rare
      ++window_evictions_;
    }
    return out;
  }

  // Pure mode rewrite: in-flight PDUs are unaffected, the new mode applies
  // from the next SDU.
  void set_mode(BearerMode m) { reset_mode(std::move(m)); }

  // Switches the bearer off from_leg onto to_leg and re-emits every unacked
  // sn whose copies were all sent on legs outside the new serving set (a
  // superset of "sent only on from_leg" that also covers repeated failures).
  // Re-emitted PDUs keep their original sn. from == to is a no-op.
  std::vector<PdcpPdu> fast_switch(LegIndex from, LegIndex to) {
    if (from == to) return {};
    reset_mode(switched_mode(from, to));
    return retransmit_uncovered(to);
  }

  // Directive-level switch: a Single bearer moves off its serving leg; any
  // other mode collapses to Single(to). No-op when already Single(to).
  std::vector<PdcpPdu> apply_switch(LegIndex to) {
    if (mode_.kind == BearerMode::Kind::Single) return fast_switch(mode_.legs[0], to);
    reset_mode(BearerMode::single(to));
    return retransmit_uncovered(to);
  }

  // Removes the sn from the unacked map; idempotent.
  void ack(std::uint64_t count) { unacked_.erase(count); }

 private:
  struct SduRecord {
    std::uint32_t payload_bytes;
    SimTime born_at;
    std::vector<LegIndex> legs_sent;
  };

  PdcpPdu make_pdu(std::uint64_t count, const SduRecord& rec, LegIndex leg) const {
    PdcpPdu p;
    p.flow = flow_;
    p.count = count;
    p.sn = static_cast<std::uint32_t>(count % kSnModulus);
    p.payload_bytes = rec.payload_bytes;
    p.born_at = rec.born_at;
    p.leg = leg;
    return p;
  }

  std::vector<PdcpPdu> retransmit_uncovered(LegIndex to) {
    std::vector<PdcpPdu> out;
    for (auto& [count, rec] : unacked_) {
      bool covered = false;
      for (LegIndex l : rec.legs_sent) {
        for (LegIndex m : mode_.legs) covered = covered || l == m;
      }
      if (covered) continue;
      rec.legs_sent.push_back(to);
      out.push_back(make_pdu(count, rec, to));
    }
    return out;
  }

  BearerMode switched_mode(LegIndex from, LegIndex to) const {
    if (mode_.kind == BearerMode::Kind::Single) return BearerMode::single(to);
    BearerMode m = mode_;
    for (std::size_t i = 0; i < m.legs.size(); ++i) {
      if (m.legs[i] != from) continue;
      // Replace; if `to` already serves, merge instead.
      bool present = false;
      for (LegIndex l : m.legs) present = present || l == to;
      if (!present) {
        m.legs[i] = to;
      } else {
        m.legs.erase(m.legs.begin() + static_cast<std::ptrdiff_t>(i));
        if (m.kind == BearerMode::Kind::Split) {
          m.weights.erase(m.weights.begin() + static_cast<std::ptrdiff_t>(i));
        }
      }
      break;
    }
    if (m.legs.size() == 1) return BearerMode::single(m.legs[0]);
    return m;
  }

  void reset_mode(BearerMode m) {
    mode_ = std::move(m);
    dwrr_credit_.assign(mode_.legs.size(), 0);
    dwrr_cursor_ = mode_.legs.empty() ? 0 : mode_.legs.size() - 1;
  }

  // One SDU per pick; a leg's credit is replenished by its weight when the
  // round-robin pointer enters it. Weights w_i yield the exact long-run
  // ratio w_i / sum(w).
  LegIndex dwrr_pick() {
    while (dwrr_credit_[dwrr_cursor_] == 0) {
      dwrr_cursor_ = (dwrr_cursor_ + 1) % mode_.legs.size();
      dwrr_credit_[dwrr_cursor_] += mode_.weights[dwrr_cursor_];
    }
    --dwrr_credit_[dwrr_cursor_];
    return mode_.legs[dwrr_cursor_];
  }

  FlowIndex flow_;
  BearerMode mode_;
  std::uint64_t next_count_{0};
  std::map<std::uint64_t, SduRecord> unacked_;
  std::uint64_t window_evictions_{0};
  std::vector<std::int64_t> dwrr_credit_;
  std::size_t dwrr_cursor_{0};
};

// ---------------------------------------------------------------------------
// Receive side: in-order delivery with duplicate discard and t-Reordering
// gap skipping.
// ---------------------------------------------------------------------------

// Sliding "already seen" bitmap over the last 2^17 sns (bounded memory).
class SeenWindow {
 public:
  SeenWindow() : bits_(kReorderingWindow, 0) {}

  bool seen(std::uint64_t count) const {
    if (!any_ || count > hi_) return false;
    if (count + kReorderingWindow <= hi_) return true;  // aged out: treat as seen
    return bits_[count % kReorderingWindow] != 0;
  }

  void mark(std::uint64_t count) {
    if (any_ && count > hi_) {
      if (count - hi_ >= kReorderingWindow) {
        std::fill(bits_.begin(), bits_.end(), 0);
      } else {
        for (std::uint64_t c = hi_ + 1; c <= count; ++c) bits_[c % kReorderingWindow] = 0;
      }
    }
    if (!any_ || count > hi_) hi_ = count;
    any_ = true;
    if (count + kReorderingWindow > hi_) bits_[count % kReorderingWindow] = 1;
  }

 private:
  std::vector<std::uint8_t> bits_;
  std::uint64_t hi_{0};
  bool any_{false};
};

class PdcpRx {
 public:
  // Delivered SDUs come out strictly in count order.
  using DeliverFn =
      std::function<void(std::uint64_t count, std::uint32_t payload_bytes, SimTime born_at)>;
  using LossFn = std::function<void(std::uint64_t count)>;

  PdcpRx(Engine& engine, std::string flow_id, Duration t_reordering, DeliverFn deliver,
         LossFn loss = {})
      : engine_(engine),
        flow_id_(std::move(flow_id)),
        t_reordering_(t_reordering),
        deliver_(std::move(deliver)),
        loss_(std::move(loss)) {}

  // The pending timer event captures `this`.
  PdcpRx(const PdcpRx&) = delete;
  PdcpRx& operator=(const PdcpRx&) = delete;

  std::uint64_t rx_deliv() const { return rx_deliv_; }
  std::size_t held_size() const { return held_.size(); }
  std::uint64_t dup_discards() const { return dup_discards_; }
  std::uint64_t late_discards() const { return late_discards_; }
  std::uint64_t reordering_timeouts() const { return reordering_timeouts_; }
  std::uint64_t skipped_losses() const { return skipped_losses_; }
  Duration t_reordering() const { return t_reordering_; }

  void receive(const PdcpPdu& pdu) {
    const auto inferred = infer_count(pdu.sn);
    if (!inferred) {
      ++late_discards_;
      return;
    }
    const std::uint64_t count = *inferred;
    if (count < rx_deliv_) {
      if (seen_.seen(count)) {
        ++dup_discards_;
      } else {
        ++late_discards_;  // gap-skipped earlier; cannot be delivered in order
      }
      return;
    }
    assert(count == pdu.count);  // window inference cross-check
    if (seen_.seen(count)) {
      ++dup_discards_;
      return;
    }
    seen_.mark(count);
    held_.emplace(count, Held{pdu.payload_bytes, pdu.born_at});
    if (count == rx_deliv_) deliver_run();
    update_timer();
  }

  // Timer expiry: skip one gap to the first held sn, deliver the consecutive
  // run from there, and re-arm if another gap remains.
  void on_t_reordering_expire() {
    timer_running_ = false;
    if (held_.empty()) return;
    ++reordering_timeouts_;
    const std::uint64_t first = held_.begin()->first;
    for (std::uint64_t c = rx_deliv_; c < first; ++c) {
      ++skipped_losses_;
      if (loss_) loss_(c);
    }
    rx_deliv_ = first;
    deliver_run();
    update_timer();
  }

 private:
  struct Held {
    std::uint32_t payload_bytes;
    SimTime born_at;
  };

  // Window-relative unwrap of the 18-bit sn around rx_deliv: offsets below
  // 2^17 are ahead, the rest behind. Counts older than the stream start have
  // no valid unwrap and are discarded by the caller.
  std::optional<std::uint64_t> infer_count(std::uint32_t sn) const {
    const std::uint32_t base = static_cast<std::uint32_t>(rx_deliv_ % kSnModulus);
    const std::uint32_t d = (sn - base) & (kSnModulus - 1);
    if (d < kReorderingWindow) return rx_deliv_ + d;
    const std::uint64_t back = kSnModulus - d;
    if (back > rx_deliv_) return std::nullopt;
    return rx_deliv_ - back;
  }

  void deliver_run() {
    auto it = held_.begin();
    while (it != held_.end() && it->first == rx_deliv_) {
      deliver_(it->first, it->second.payload_bytes, it->second.born_at);
      it = held_.erase(it);
      ++rx_deliv_;
    }
  }

  // Invariant: the timer runs iff a gap is outstanding (held non-empty).
  void update_timer() {
    if (held_.empty()) {
      if (timer_running_) {
        engine_.cancel(timer_);
        timer_running_ = false;
      }
      return;
    }
    if (!timer_running_) {
      timer_ = engine_.schedule(t_reordering_, "pdcp:" + flow_id_ + ":t_reordering",
                                [this] { on_t_reordering_expire(); });
      timer_running_ = true;
    }
  }

  Engine& engine_;
  std::string flow_id_;
  Duration t_reordering_;
  DeliverFn deliver_;
  LossFn loss_;

  std::uint64_t rx_deliv_{0};
  std::map<std::uint64_t, Held> held_;
  SeenWindow seen_;
  EventHandle timer_{};
  bool timer_running_{false};

  std::uint64_t dup_discards_{0};
  std::uint64_t late_discards_{0};
  std::uint64_t reordering_timeouts_{0};
  std::uint64_t skipped_losses_{0};
};

}  // namespace mcsim
