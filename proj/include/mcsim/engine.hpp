#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "mcsim/error.hpp"
#include "mcsim/rng.hpp"
#include "mcsim/time.hpp"

namespace mcsim {

struct EventHandle {
  std::uint64_t seq{0};
};

// Deterministic discrete-event core. Events are processed in strict
// (fire_at, seq) order; seq is the insertion counter, so simultaneous events
// fire in scheduling order. Cancellation is lazy: cancelled entries stay in
// the heap as tombstones and are skipped on pop.
class Engine {
 public:
  explicit Engine(std::uint64_t master_seed = 0) : rngs_(master_seed) {}

  SimTime now() const { return now_; }

  using EventSink =
      std::function<void(SimTime, std::uint64_t seq, const std::string& label)>;

  // Called once per processed (not cancelled) event, before its action runs.
  void set_event_sink(EventSink sink) { sink_ = std::move(sink); }

  EventHandle schedule(Duration delay, std::string label,
                       std::function<void()> action) {
    if (delay.ns < 0) throw ValidationError("schedule: negative delay");
    const std::uint64_t seq = next_seq_++;
    state_.push_back(EventState::Pending);
    heap_.push_back(Entry{now_ + delay, seq, std::move(label), std::move(action)});
    std::push_heap(heap_.begin(), heap_.end(), Later{});
    return EventHandle{seq};
  }

  // True iff the event was pending and will now never fire.
  bool cancel(EventHandle h) {
    if (h.seq >= state_.size() || state_[h.seq] != EventState::Pending) {
      return false;
    }
    state_[h.seq] = EventState::Cancelled;
    return true;
  }

  // Processes every event with fire_at <= t_end (inclusive), including events
  // scheduled by handlers during this call. Returns the processed count and
  // leaves the clock at t_end.
  std::uint64_t run_until(SimTime t_end) {
    if (t_end < now_) throw ValidationError("run_until: t_end before current clock");
    std::uint64_t processed = 0;
    while (!heap_.empty() && heap_.front().at <= t_end) {
      std::pop_heap(heap_.begin(), heap_.end(), Later{});
      Entry ev = std::move(heap_.back());
      heap_.pop_back();
      if (state_[ev.seq] == EventState::Cancelled) continue;
      state_[ev.seq] = EventState::Fired;
      now_ = ev.at;
      if (sink_) sink_(ev.at, ev.seq, ev.label);
      ev.action();
      ++processed;
    }
    now_ = t_end;
    return processed;
  }

  RngStream& rng(std::string_view stream_id) { return rngs_.stream(stream_id); }
  RngRegistry& rngs() { return rngs_; }

 private:
  enum class EventState : std::uint8_t { Pending, Fired, Cancelled };

  struct Entry {
    SimTime at;
    std::uint64_t seq;
    std::string label;
    std::function<void()> action;
  };

  // Min-heap comparator on (fire_at, seq).
  struct Later {
    bool operator()(const Entry& a, const Entry& b) const {
      return a.at != b.at ? b.at < a.at : b.seq < a.seq;
    }
  };

  SimTime now_{};
  std::uint64_t next_seq_{0};
  std::vector<Entry> heap_;
  std::vector<EventState> state_;
  EventSink sink_;
  RngRegistry rngs_;
};

}  // namespace mcsim
