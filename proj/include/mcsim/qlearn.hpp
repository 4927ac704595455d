#pragma once

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "mcsim/error.hpp"
#include "mcsim/rng.hpp"

namespace mcsim {

// Version of the state discretization; checkpoints from another scheme are
// rejected at load.
inline constexpr int kRlBucketSchemeVersion = 1;

struct QLearnConfig {
  double alpha{0.1};
  double gamma{0.9};
  double epsilon{0.1};

  void validate() const {
    if (!(alpha > 0.0 && alpha <= 1.0)) throw ValidationError("Q-learning: alpha in (0,1]");
    if (!(gamma >= 0.0 && gamma < 1.0)) throw ValidationError("Q-learning: gamma in [0,1)");
    if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw ValidationError("Q-learning: epsilon in [0,1]");
  }
};

class QTable {
 public:
  QTable(std::size_t n_actions, QLearnConfig cfg, int scheme = kRlBucketSchemeVersion)
      : n_actions_(n_actions), cfg_(cfg), scheme_(scheme) {
    if (n_actions_ == 0) throw ValidationError("QTable: empty action set");
    cfg_.validate();
  }

  std::size_t n_actions() const { return n_actions_; }
  const QLearnConfig& config() const { return cfg_; }
  int scheme() const { return scheme_; }
  std::size_t size() const { return table_.size(); }

  double value(const std::string& state, std::size_t action) const {
    auto it = table_.find(state);
    return it == table_.end() ? 0.0 : it->second.at(action);
  }

  double max_value(const std::string& state) const {
    auto it = table_.find(state);
    if (it == table_.end()) return 0.0;
    return *std::max_element(it->second.begin(), it->second.end());
  }

  std::size_t greedy_action(const std::string& state) const {
    auto it = table_.find(state);
    if (it == table_.end()) return 0;
    return static_cast<std::size_t>(
        std::max_element(it->second.begin(), it->second.end()) - it->second.begin());
  }

  // Epsilon-greedy: one RNG draw for the explore coin, one more iff exploring.
  // Ties go to the lowest action index.
  std::size_t select(const std::string& state, double epsilon, RngStream& rng) const {
    const bool explore = rng.next_unit() < epsilon;
    if (explore) return rng.pick_index(n_actions_);
    return greedy_action(state);
  }

  // One-step Q-learning: Q(s,a) += alpha * (r + gamma * max_a' Q(s',a') - Q(s,a)).
  void update(const std::string& state, std::size_t action, double reward,
              const std::string& next_state) {
    auto& row = table_.try_emplace(state, std::vector<double>(n_actions_, 0.0)).first->second;
    const double target = reward + cfg_.gamma * max_value(next_state);
    row.at(action) += cfg_.alpha * (target - row.at(action));
    max_abs_reward_ = std::max(max_abs_reward_, std::abs(reward));
    // Bounded-value invariant for zero-initialized tables.
    assert(std::abs(row.at(action)) <= max_abs_reward_ / (1.0 - cfg_.gamma) + 1e-9);
    assert(std::isfinite(row.at(action)));
  }

  // Flat text checkpoint: header with hyperparameters and bucket-scheme
  // version, then one `state<TAB>action<TAB>value` line per entry.
  void save(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write QTable checkpoint: " + path);
    char buf[128];
    std::snprintf(buf, sizeof buf, "mcsim-qtable v1 alpha=%.17g gamma=%.17g epsilon=%.17g scheme=%d",
                  cfg_.alpha, cfg_.gamma, cfg_.epsilon, scheme_);
    out << buf << "\n";
    for (const auto& [state, row] : table_) {
      for (std::size_t a = 0; a < row.size(); ++a) {
        std::snprintf(buf, sizeof buf, "%.17g", row[a]);
        out << state << "\t" << a << "\t" << buf << "\n";
      }
    }
    if (!out) throw std::runtime_error("write failed: " + path);
  }

  static QTable load(const std::string& path, std::size_t n_actions, int expected_scheme) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot read QTable checkpoint: " + path);
    std::string header;
    std::getline(in, header);
    QLearnConfig cfg;
    int scheme = -1;
    if (std::sscanf(header.c_str(), "mcsim-qtable v1 alpha=%lf gamma=%lf epsilon=%lf scheme=%d",
                    &cfg.alpha, &cfg.gamma, &cfg.epsilon, &scheme) != 4) {
      throw ValidationError("malformed QTable checkpoint header: " + path);
    }
    if (scheme != expected_scheme) {
      throw ValidationError("QTable checkpoint bucket-scheme version mismatch (got " +
                            std::to_string(scheme) + ", expected " +
                            std::to_string(expected_scheme) + ")");
    }
    QTable q(n_actions, cfg, scheme);
    std::string line;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::istringstream ls(line);
      std::string state;
      std::size_t action = 0;
      double value = 0;
      if (!std::getline(ls, state, '\t') || !(ls >> action >> value) || action >= n_actions) {
        throw ValidationError("malformed QTable checkpoint entry: " + line);
      }
      auto& row =
          q.table_.try_emplace(state, std::vector<double>(n_actions, 0.0)).first->second;
      row[action] = value;
    }
    return q;
  }

 private:
  std::size_t n_actions_;
  QLearnConfig cfg_;
  int scheme_;
  std::map<std::string, std::vector<double>> table_;
  double max_abs_reward_{0.0};
};

}  // namespace mcsim
