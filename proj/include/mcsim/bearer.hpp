#pragma once

#include <algorithm>
#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "mcsim/error.hpp"
#include "mcsim/pdu.hpp"
#include "mcsim/time.hpp"

namespace mcsim {

struct QosFlow {
  std::string id;
  FlowIndex index{0};
  std::uint64_t target_thr_bps{0};
  Duration latency_budget{};
  double reliability_target{0.0};  // max tolerated loss fraction

  void validate() const {
    if (target_thr_bps == 0) throw ValidationError("Flow " + id + ": target_thr must be > 0");
    if (latency_budget.ns <= 0) {
      throw ValidationError("Flow " + id + ": latency_budget must be > 0");
    }
    if (!(reliability_target >= 0.0 && reliability_target <= 1.0)) {
      throw ValidationError("Flow " + id + ": reliability_target outside [0,1]");
    }
  }
};

// Per-flow delivery mode. Split weights parallel `legs` and are positive;
// leg order follows scenario order, which fixes the DWRR visit sequence.
struct BearerMode {
  enum class Kind { Single, Duplicate, Split };

  Kind kind{Kind::Single};
  std::vector<LegIndex> legs;
  std::vector<std::uint32_t> weights;  // Split only

  static BearerMode single(LegIndex leg) { return {Kind::Single, {leg}, {}}; }

  static BearerMode duplicate(std::vector<LegIndex> set) {
    return {Kind::Duplicate, std::move(set), {}};
  }

  static BearerMode split(std::vector<LegIndex> set, std::vector<std::uint32_t> w) {
    return {Kind::Split, std::move(set), std::move(w)};
  }

  bool operator==(const BearerMode&) const = default;

  void validate(std::size_t n_legs) const {
    for (LegIndex l : legs) {
      if (l >= n_legs) throw ValidationError("Bearer references unknown leg index");
    }
    std::set<LegIndex> distinct(legs.begin(), legs.end());
    if (distinct.size() != legs.size()) {
      throw ValidationError("Bearer leg set contains duplicates");
    }
    switch (kind) {
      case Kind::Single:
        if (legs.size() != 1) throw ValidationError("Single bearer needs exactly one leg");
        break;
      case Kind::Duplicate:
        if (legs.size() < 2) throw ValidationError("Duplicate bearer needs >= 2 legs");
        break;
      case Kind::Split:
        if (legs.empty()) throw ValidationError("Split bearer needs >= 1 leg");
        if (weights.size() != legs.size()) {
          throw ValidationError("Split bearer weights must parallel legs");
        }
        if (std::any_of(weights.begin(), weights.end(),
                        [](std::uint32_t w) { return w == 0; })) {
          throw ValidationError("Split bearer weights must be positive");
        }
        break;
    }
  }
};

}  // namespace mcsim
