#pragma once

#include "mcsim/error.hpp"
#include "mcsim/rng.hpp"

namespace mcsim {

enum class ChannelState { Good, Bad };

struct GeChannelConfig {
  double p_gb{0.0};       // P(Good -> Bad) per transmission
  double p_bg{0.0};       // P(Bad -> Good) per transmission
  double loss_good{0.0};  // loss probability while Good
  double loss_bad{0.0};   // loss probability while Bad
  ChannelState initial{ChannelState::Good};

  void validate() const {
    for (double p : {p_gb, p_bg, loss_good, loss_bad}) {
      if (!(p >= 0.0 && p <= 1.0)) {
        throw ValidationError("GeChannel: probability outside [0,1]");
      }
    }
    if (loss_good > loss_bad) {
      throw ValidationError("GeChannel: loss_good must not exceed loss_bad");
    }
  }
};

// Two-state Markov loss channel, stepped once per transmission attempt.
// Fixed draw order (loss first, then transition) keeps RNG consumption at
// exactly two draws per step regardless of parameters.
class GeChannel {
 public:
  explicit GeChannel(GeChannelConfig cfg) : cfg_(cfg), state_(cfg.initial) {
    cfg_.validate();
  }

  struct StepResult {
    ChannelState state;
    bool lost;
  };

  StepResult step(RngStream& rng) {
    const bool lost =
        rng.next_unit() <
        (state_ == ChannelState::Good ? cfg_.loss_good : cfg_.loss_bad);
    const double p_leave = state_ == ChannelState::Good ? cfg_.p_gb : cfg_.p_bg;
    if (rng.next_unit() < p_leave) {
      state_ = state_ == ChannelState::Good ? ChannelState::Bad : ChannelState::Good;
    }
    return StepResult{state_, lost};
  }

  ChannelState state() const { return state_; }
  const GeChannelConfig& config() const { return cfg_; }

 private:
  GeChannelConfig cfg_;
  ChannelState state_;
};

}  // namespace mcsim
