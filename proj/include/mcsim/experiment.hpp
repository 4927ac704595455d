#pragma once

#include <atomic>
#include <memory>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "mcsim/simulation.hpp"

namespace mcsim {

// Runs seeds master_seed..master_seed+n-1. Workers share nothing; reports are
// merged in seed order, so the parallel result is byte-identical to the
// sequential one.
inline std::vector<MetricsReport> run_sweep(const Scenario& scenario, std::uint64_t n_seeds,
                                            unsigned parallel = 1) {
  if (n_seeds == 0) throw ValidationError("sweep: need at least one seed");
  std::vector<MetricsReport> reports(n_seeds);
  if (parallel <= 1) {
    for (std::uint64_t i = 0; i < n_seeds; ++i) {
      reports[i] = run_simulation(scenario, scenario.master_seed + i);
    }
    return reports;
  }
  std::atomic<std::uint64_t> next{0};
  auto worker = [&] {
    for (;;) {
      const std::uint64_t i = next.fetch_add(1);
      if (i >= n_seeds) return;
      reports[i] = run_simulation(scenario, scenario.master_seed + i);
    }
  };
  std::vector<std::thread> threads;
  const unsigned k = std::min<unsigned>(parallel, static_cast<unsigned>(n_seeds));
  threads.reserve(k);
  for (unsigned t = 0; t < k; ++t) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  return reports;
}

struct TrainStats {
  std::uint64_t episodes{0};
  std::uint64_t epochs{0};
  std::vector<double> episode_mean_reward;
};

// Episodic Q-learning against the scenario: one simulation run per episode
// with seed master_seed+e, a shared QTable across episodes, and optional
// linear epsilon decay toward policy.rl_epsilon_final. Saves the checkpoint
// at the end.
inline TrainStats train_rl(const Scenario& scenario, std::uint64_t episodes,
                           const std::string& checkpoint_path,
                           std::ostream* progress = nullptr) {
  if (scenario.policy.name != "rl") {
    throw ValidationError("train-rl: scenario policy must be \"rl\"");
  }
  if (episodes == 0) throw ValidationError("train-rl: need at least one episode");

  const auto& params = scenario.policy.rl;
  const auto actions = RlPolicy::action_count(scenario.legs.size());
  QTable table = params.checkpoint.empty()
                     ? QTable(actions, params.qlearn)
                     : QTable::load(params.checkpoint, actions, kRlBucketSchemeVersion);

  TrainStats stats;
  stats.episodes = episodes;
  const double eps0 = params.qlearn.epsilon;
  const double eps_final = scenario.policy.rl_epsilon_final.value_or(eps0);
  for (std::uint64_t e = 0; e < episodes; ++e) {
    const double frac =
        episodes > 1 ? static_cast<double>(e) / static_cast<double>(episodes - 1) : 0.0;
    const double epsilon = eps0 + (eps_final - eps0) * frac;

    RlPolicy* rl = nullptr;
    Simulation training(scenario, scenario.master_seed + e,
                        [&](Engine& eng) -> std::unique_ptr<Policy> {
                          auto p = std::make_unique<RlPolicy>(
                              table, scenario.legs.size(), scenario.qoe_weights,
                              eng.rng("policy:rl"), /*learning=*/true, epsilon);
                          rl = p.get();
                          return p;
                        });
    training.run();
    stats.epochs += rl->action_log().size();
    stats.episode_mean_reward.push_back(rl->mean_reward());
    if (progress) {
      (*progress) << "episode " << e << " epsilon " << epsilon << " mean-reward "
                  << rl->mean_reward() << "\n";
    }
  }
  table.save(checkpoint_path);
  return stats;
}

}  // namespace mcsim
