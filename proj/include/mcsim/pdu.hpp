#pragma once

#include <cstdint>

#include "mcsim/time.hpp"

namespace mcsim {

using FlowIndex = std::uint32_t;
using LegIndex = std::uint32_t;

inline constexpr std::uint32_t kSnBits = 18;
inline constexpr std::uint32_t kSnModulus = 1u << kSnBits;        // 262144
inline constexpr std::uint32_t kReorderingWindow = 1u << (kSnBits - 1);  // 131072

// One PDCP PDU. `sn` is the 18-bit wire sequence number; `count` is the
// unwrapped model-side counter (sn == count mod 2^18), carried for bookkeeping
// and debug cross-checks, never used by the receiver's window inference.
struct PdcpPdu {
  FlowIndex flow{0};
  std::uint32_t sn{0};
  std::uint64_t count{0};
  std::uint32_t payload_bytes{0};
  SimTime born_at{};
  LegIndex leg{0};
};

}  // namespace mcsim
