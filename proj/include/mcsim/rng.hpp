#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <string_view>

namespace mcsim {

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::uint64_t splitmix64(std::uint64_t& x) {
  x += 0x9e3779b97f4a7c15ull;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// One named substream. State is derived from (master_seed, stream_id) only,
// so adding or reordering other consumers never perturbs an existing stream.
// xoshiro256** with splitmix64 state expansion.
class RngStream {
 public:
  RngStream(std::uint64_t master_seed, std::string_view stream_id)
      : id_(stream_id) {
    std::uint64_t sm = master_seed ^ fnv1a64(stream_id);
    for (auto& w : state_) w = splitmix64(sm);
  }

  std::uint64_t next_u64() {
    ++draws_;
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform in [0, 1), 53-bit resolution.
  double next_unit() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Exponential with the given mean; consumes exactly one draw.
  double exponential(double mean) { return -mean * std::log1p(-next_unit()); }

  // Uniform index in [0, n); consumes exactly one draw.
  std::size_t pick_index(std::size_t n) {
    const auto i = static_cast<std::size_t>(next_unit() * static_cast<double>(n));
    return i < n ? i : n - 1;
  }

  std::uint64_t draw_count() const { return draws_; }
  const std::string& id() const { return id_; }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::string id_;
  std::uint64_t state_[4]{};
  std::uint64_t draws_{0};
};

// Lazily created named streams, all derived from one master seed. References
// stay valid for the registry's lifetime.
class RngRegistry {
 public:
  explicit RngRegistry(std::uint64_t master_seed) : master_seed_(master_seed) {}

  RngStream& stream(std::string_view stream_id) {
    auto it = streams_.find(std::string(stream_id));
    if (it == streams_.end()) {
      it = streams_
               .emplace(std::string(stream_id),
                        std::make_unique<RngStream>(master_seed_, stream_id))
               .first;
    }
    return *it->second;
  }

  std::uint64_t master_seed() const { return master_seed_; }

 private:
  std::uint64_t master_seed_;
  std::map<std::string, std::unique_ptr<RngStream>, std::less<>> streams_;
};

}  // namespace mcsim
