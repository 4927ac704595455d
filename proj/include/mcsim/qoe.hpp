#pragma once

#include <algorithm>
#include <cmath>
#include <optional>

#include "mcsim/bearer.hpp"
#include "mcsim/error.hpp"
#include "mcsim/time.hpp"

namespace mcsim {

struct QoeWeights {
  double throughput{0.4};
  double latency{0.3};
  double reliability{0.3};

  void validate() const {
    if (throughput < 0 || latency < 0 || reliability < 0 ||
        std::abs(throughput + latency + reliability - 1.0) > 1e-9) {
      throw ValidationError("QoE weights must be non-negative and sum to 1");
    }
  }
};

// Per-flow observations over one control window. p95_latency is absent when
// the window delivered nothing (treated as zero latency satisfaction).
struct FlowWindowStats {
  double achieved_thr_bps{0.0};
  std::optional<Duration> p95_latency{};
  double loss_fraction{0.0};
};

// MOS-style score in [1,5]: 1 + 4 * weighted satisfaction of throughput,
// latency and reliability targets.
inline double qoe_score(const FlowWindowStats& s, const QosFlow& flow,
                        const QoeWeights& w) {
  w.validate();
  const double sat_thr =
      std::min(1.0, s.achieved_thr_bps / static_cast<double>(flow.target_thr_bps));
  double sat_lat = 0.0;
  if (s.p95_latency) {
    sat_lat = s.p95_latency->ns <= 0
                  ? 1.0
                  : std::min(1.0, static_cast<double>(flow.latency_budget.ns) /
                                      static_cast<double>(s.p95_latency->ns));
  }
  double sat_rel = 1.0;
  if (s.loss_fraction > 0.0 && s.loss_fraction > flow.reliability_target) {
    sat_rel = flow.reliability_target / s.loss_fraction;
  }
  return 1.0 + 4.0 * (w.throughput * sat_thr + w.latency * sat_lat + w.reliability * sat_rel);
}

}  // namespace mcsim
