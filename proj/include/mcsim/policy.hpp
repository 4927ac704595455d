#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mcsim/bearer.hpp"
#include "mcsim/madm.hpp"
#include "mcsim/qlearn.hpp"
#include "mcsim/qoe.hpp"
#include "mcsim/view.hpp"

namespace mcsim {

enum class DirectiveAction { NoChange, Switch, SetSplit, SetDuplicate };

struct Directive {
  FlowIndex flow{0};
  DirectiveAction action{DirectiveAction::NoChange};
  LegIndex to_leg{0};  // Switch
  BearerMode mode{};   // SetSplit / SetDuplicate
};

// Per-flow runtime info handed to policies each epoch: QoS targets, current
// bearer mode, and the stats of the window that just closed.
struct FlowSnapshot {
  FlowIndex index{0};
  QosFlow qos{};
  BearerMode mode{};
  FlowWindowStats window{};
};

class Policy {
 public:
  virtual ~Policy() = default;
  virtual std::string_view name() const = 0;
  virtual std::vector<Directive> decide(const NetworkView& view,
                                        const std::vector<FlowSnapshot>& flows) = 0;
};

// Keeps whatever the scenario configured.
class StaticPolicy : public Policy {
 public:
  std::string_view name() const override { return "static"; }
  std::vector<Directive> decide(const NetworkView&,
                                const std::vector<FlowSnapshot>&) override {
    return {};
  }
};

// ---------------------------------------------------------------------------
// Threshold handover: switch a Single bearer away when its normalized
// throughput sits below theta_low for hysteresis_epochs consecutive epochs and
// some other leg clears theta_high; a Down serving leg switches immediately.
// ---------------------------------------------------------------------------

struct ThresholdParams {
  double theta_low{0.5};
  double theta_high{1.0};
  std::uint32_t hysteresis_epochs{3};

  void validate() const {
    if (!(theta_low < theta_high)) {
      throw ValidationError("threshold policy: theta_low must be < theta_high");
    }
  }
};

class ThresholdPolicy : public Policy {
 public:
  explicit ThresholdPolicy(ThresholdParams p) : params_(p) { params_.validate(); }

  std::string_view name() const override { return "threshold"; }

  std::vector<Directive> decide(const NetworkView& view,
                                const std::vector<FlowSnapshot>& flows) override {
    std::vector<Directive> out;
    for (const auto& f : flows) {
      if (f.mode.kind != BearerMode::Kind::Single) continue;
      const LegIndex serving = f.mode.legs[0];
      const auto& sv = view.legs.at(serving);
      const double target = static_cast<double>(f.qos.target_thr_bps);

      if (sv.admin == AdminState::Down) {
        if (auto best = best_other_up(view, serving)) {
          out.push_back({f.index, DirectiveAction::Switch, *best, {}});
          below_[f.index] = 0;
        }
        continue;
      }

      if (sv.ewma_thr_bps / target < params_.theta_low) {
        if (++below_[f.index] >= params_.hysteresis_epochs) {
          std::optional<LegIndex> best;
          double best_thr = 0;
          for (std::size_t i = 0; i < view.legs.size(); ++i) {
            const auto& lv = view.legs[i];
            if (i == serving || lv.admin != AdminState::Up) continue;
            if (lv.ewma_thr_bps / target > params_.theta_high && lv.ewma_thr_bps > best_thr) {
              best = static_cast<LegIndex>(i);
              best_thr = lv.ewma_thr_bps;
            }
          }
          if (best) {
            out.push_back({f.index, DirectiveAction::Switch, *best, {}});
            below_[f.index] = 0;
          }
        }
      } else {
        below_[f.index] = 0;
      }
    }
    return out;
  }

 private:
  static std::optional<LegIndex> best_other_up(const NetworkView& view, LegIndex serving) {
    std::optional<LegIndex> best;
    double best_thr = -1;
    for (std::size_t i = 0; i < view.legs.size(); ++i) {
      if (i == serving || view.legs[i].admin != AdminState::Up) continue;
      if (view.legs[i].ewma_thr_bps > best_thr) {
        best = static_cast<LegIndex>(i);
        best_thr = view.legs[i].ewma_thr_bps;
      }
    }
    return best;
  }

  ThresholdParams params_;
  std::map<FlowIndex, std::uint32_t> below_;
};

// ---------------------------------------------------------------------------
// MADM handover: rank Up legs on (throughput, loss, delay) with SAW or TOPSIS
// and switch once the winner differs from the serving leg for
// hysteresis_epochs consecutive epochs.
// ---------------------------------------------------------------------------

struct MadmParams {
  enum class Method { Saw, Topsis };
  Method method{Method::Topsis};
  double w_thr{0.5};
  double w_loss{0.25};
  double w_delay{0.25};
  std::uint32_t hysteresis_epochs{3};

  void validate() const {
    if (w_thr < 0 || w_loss < 0 || w_delay < 0 ||
        std::abs(w_thr + w_loss + w_delay - 1.0) > 1e-9) {
      throw ValidationError("madm policy: weights must be non-negative and sum to 1");
    }
  }
};

class MadmPolicy : public Policy {
 public:
  explicit MadmPolicy(MadmParams p) : params_(p) { params_.validate(); }

  std::string_view name() const override {
    return params_.method == MadmParams::Method::Saw ? "saw" : "topsis";
  }

  std::vector<Directive> decide(const NetworkView& view,
                                const std::vector<FlowSnapshot>& flows) override {
    std::vector<Directive> out;
    for (const auto& f : flows) {
      if (f.mode.kind != BearerMode::Kind::Single) continue;
      const LegIndex serving = f.mode.legs[0];

      std::vector<LegIndex> candidates;
      DecisionMatrix matrix;
      for (std::size_t i = 0; i < view.legs.size(); ++i) {
        const auto& lv = view.legs[i];
        if (lv.admin != AdminState::Up) continue;
        candidates.push_back(static_cast<LegIndex>(i));
        // MADM requires strictly positive entries.
        matrix.push_back({std::max(lv.ewma_thr_bps, 1e-9), std::max(lv.ewma_loss, 1e-9),
                          std::max(lv.ewma_delay_ns, 1e-9)});
      }
      if (candidates.empty()) continue;

      const std::vector<double> weights{params_.w_thr, params_.w_loss, params_.w_delay};
      const std::vector<Criterion> kinds{Criterion::Benefit, Criterion::Cost,
                                         Criterion::Cost};
      const auto ranking = params_.method == MadmParams::Method::Saw
                               ? saw_rank(matrix, weights, kinds)
                               : topsis_rank(matrix, weights, kinds);
      const LegIndex top = candidates[ranking[0]];

      if (view.legs.at(serving).admin == AdminState::Down) {
        out.push_back({f.index, DirectiveAction::Switch, top, {}});
        prefer_[f.index] = 0;
        continue;
      }
      if (top != serving) {
        if (++prefer_[f.index] >= params_.hysteresis_epochs) {
          out.push_back({f.index, DirectiveAction::Switch, top, {}});
          prefer_[f.index] = 0;
        }
      } else {
        prefer_[f.index] = 0;
      }
    }
    return out;
  }

 private:
  MadmParams params_;
  std::map<FlowIndex, std::uint32_t> prefer_;
};

// ---------------------------------------------------------------------------
// Tabular Q-learning over the discretized NetworkView. Actions per flow:
// Single(leg_i) for each managed leg, Duplicate(all), Split(weights
// proportional to ewma throughput). Managed legs are the first two in
// scenario order (tabular tractability cap).
// ---------------------------------------------------------------------------

struct RlParams {
  QLearnConfig qlearn{};
  std::string checkpoint;  // optional initial table
};

class RlPolicy : public Policy {
 public:
  // The table is shared by the caller (it persists across training episodes).
  RlPolicy(QTable& table, std::size_t n_legs, QoeWeights qoe_weights, RngStream& rng,
           bool learning, double epsilon)
      : n_legs_(std::min<std::size_t>(n_legs, 2)),
        qoe_weights_(qoe_weights),
        rng_(rng),
        table_(table),
        learning_(learning),
        epsilon_(epsilon) {
    if (n_legs == 0) throw ValidationError("rl policy: no legs");
    if (table_.n_actions() != action_count(n_legs_)) {
      throw ValidationError("rl policy: QTable action count does not match the leg set");
    }
  }

  static std::size_t action_count(std::size_t managed_legs) {
    const std::size_t capped = std::min<std::size_t>(managed_legs, 2);
    return capped == 1 ? 1 : capped + 2;
  }

  std::string_view name() const override { return "rl"; }

  QTable& table() { return table_; }
  void set_epsilon(double e) { epsilon_ = e; }

  struct ActionRecord {
    FlowIndex flow;
    std::size_t action;
  };
  const std::vector<ActionRecord>& action_log() const { return action_log_; }

  // Mean reward over this policy's lifetime (training progress metric).
  double mean_reward() const {
    return reward_count_ > 0 ? reward_sum_ / static_cast<double>(reward_count_) : 0.0;
  }

  std::vector<Directive> decide(const NetworkView& view,
                                const std::vector<FlowSnapshot>& flows) override {
    std::vector<Directive> out;
    for (const auto& f : flows) {
      const std::string state = encode_state(view, f.qos);
      if (learning_) {
        if (auto it = pending_.find(f.index); it != pending_.end()) {
          const double reward = (qoe_score(f.window, f.qos, qoe_weights_) - 1.0) / 4.0;
          table_.update(it->second.state, it->second.action, reward, state);
          reward_sum_ += reward;
          ++reward_count_;
        }
      }
      const std::size_t a = table_.select(state, epsilon_, rng_);
      pending_[f.index] = Pending{state, a};
      action_log_.push_back({f.index, a});
      if (auto d = to_directive(a, f, view)) out.push_back(*d);
    }
    return out;
  }

  // 8 buckets per managed leg: throughput quartile vs the flow target x admin.
  std::string encode_state(const NetworkView& view, const QosFlow& qos) const {
    std::string key;
    for (std::size_t i = 0; i < n_legs_; ++i) {
      const auto& lv = view.legs.at(i);
      const double t = static_cast<double>(qos.target_thr_bps);
      int bucket;
      if (lv.ewma_thr_bps <= 0) {
        bucket = 0;
      } else if (lv.ewma_thr_bps <= 0.5 * t) {
        bucket = 1;
      } else if (lv.ewma_thr_bps <= t) {
        bucket = 2;
      } else {
        bucket = 3;
      }
      if (lv.admin == AdminState::Down) bucket += 4;
      if (!key.empty()) key.push_back(',');
      key.push_back(static_cast<char>('0' + bucket));
    }
    return key;
  }

 private:
  struct Pending {
    std::string state;
    std::size_t action;
  };

  std::optional<Directive> to_directive(std::size_t action, const FlowSnapshot& f,
                                        const NetworkView& view) const {
    if (action < n_legs_) {
      const auto leg = static_cast<LegIndex>(action);
      if (f.mode.kind == BearerMode::Kind::Single && f.mode.legs[0] == leg) {
        return std::nullopt;  // already there
      }
      return Directive{f.index, DirectiveAction::Switch, leg, {}};
    }
    std::vector<LegIndex> legs;
    for (std::size_t i = 0; i < n_legs_; ++i) legs.push_back(static_cast<LegIndex>(i));
    if (action == n_legs_) {
      BearerMode m = BearerMode::duplicate(legs);
      if (f.mode == m) return std::nullopt;
      return Directive{f.index, DirectiveAction::SetDuplicate, 0, m};
    }
    // Split with integer weights proportional to viewed throughput, in 1..4.
    double max_thr = 0;
    for (std::size_t i = 0; i < n_legs_; ++i) {
      max_thr = std::max(max_thr, view.legs.at(i).ewma_thr_bps);
    }
    std::vector<std::uint32_t> weights;
    for (std::size_t i = 0; i < n_legs_; ++i) {
      const double thr = view.legs.at(i).ewma_thr_bps;
      weights.push_back(max_thr > 0 ? std::max<std::uint32_t>(
                                          1, static_cast<std::uint32_t>(
                                                 std::llround(4.0 * thr / max_thr)))
                                    : 1u);
    }
    BearerMode m = BearerMode::split(legs, weights);
    if (f.mode == m) return std::nullopt;
    return Directive{f.index, DirectiveAction::SetSplit, 0, m};
  }

  std::size_t n_legs_;
  QoeWeights qoe_weights_;
  RngStream& rng_;
  QTable& table_;
  bool learning_;
  double epsilon_;
  std::map<FlowIndex, Pending> pending_;
  std::vector<ActionRecord> action_log_;
  double reward_sum_{0};
  std::uint64_t reward_count_{0};
};

}  // namespace mcsim
