#pragma once

#include <cstdint>
#include <string>

#include "mcsim/error.hpp"
#include "mcsim/rng.hpp"
#include "mcsim/time.hpp"

namespace mcsim {

enum class TrafficKind { Cbr, Poisson };

struct FlowGenConfig {
  std::string flow_id;
  TrafficKind kind{TrafficKind::Cbr};
  double rate_pps{0.0};
  std::uint32_t size_bytes{0};
  SimTime start{};
  SimTime stop{};

  void validate() const {
    if (!(rate_pps > 0.0)) throw ValidationError("FlowGen: rate_pps must be > 0");
    if (size_bytes == 0) throw ValidationError("FlowGen: size_bytes must be > 0");
    if (stop < start) throw ValidationError("FlowGen: start must not exceed stop");
  }
};

// Packet source. CBR uses a fixed period (1/rate rounded once to ns);
// Poisson draws exponential inter-arrivals with mean 1/rate.
class FlowGen {
 public:
  explicit FlowGen(FlowGenConfig cfg) : cfg_(cfg) {
    cfg_.validate();
    cbr_period_ = duration_from_ms(1e3 / cfg_.rate_pps);
  }

  struct Arrival {
    Duration inter_arrival;
    std::uint32_t size_bytes;
  };

  Arrival next(RngStream& rng) {
    if (cfg_.kind == TrafficKind::Cbr) return {cbr_period_, cfg_.size_bytes};
    const double gap_s = rng.exponential(1.0 / cfg_.rate_pps);
    return {duration_from_ms(gap_s * 1e3), cfg_.size_bytes};
  }

  const FlowGenConfig& config() const { return cfg_; }

 private:
  FlowGenConfig cfg_;
  Duration cbr_period_{};
};

}  // namespace mcsim
