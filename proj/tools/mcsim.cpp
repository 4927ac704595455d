// Multi-connectivity RAN simulator CLI: run one simulation, sweep seeds,
// validate a scenario, or train the RL traffic-control policy.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "mcsim/experiment.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

// Durations like "500ms", "10s", "250us", "1200000ns"; bare numbers are ms.
double parse_duration_ms(const std::string& text) {
  std::size_t pos = 0;
  double value = 0;
  try {
    value = std::stod(text, &pos);
  } catch (const std::exception&) {
    throw mcsim::ValidationError("cannot parse duration \"" + text + "\"");
  }
  const std::string unit = text.substr(pos);
  if (unit.empty() || unit == "ms") return value;
  if (unit == "s") return value * 1e3;
  if (unit == "us") return value * 1e-3;
  if (unit == "ns") return value * 1e-6;
  throw mcsim::ValidationError("unknown duration unit \"" + unit + "\" in \"" + text + "\"");
}

struct RunOptions {
  std::string scenario_path;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  std::string policy_override;
  std::string until;
  std::string format{"all"};
  bool events{false};
};

void write_outputs(const std::vector<mcsim::MetricsReport>& reports,
                   const std::string& out_dir, const std::string& format) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  if (format != "csv" && format != "json" && format != "all") {
    throw mcsim::ValidationError("unknown format \"" + format + "\" (expected csv|json|all)");
  }
  if (format == "csv" || format == "all") {
    mcsim::export_metrics(reports, "csv", (fs::path(out_dir) / "metrics.csv").string());
  }
  if (format == "json" || format == "all") {
    mcsim::export_metrics(reports, "json", (fs::path(out_dir) / "metrics.json").string());
  }
}

mcsim::Scenario load_for_cli(const RunOptions& opt) {
  std::optional<double> until_ms;
  if (!opt.until.empty()) until_ms = parse_duration_ms(opt.until);
  auto scenario = mcsim::load_scenario(opt.scenario_path, until_ms);
  if (!opt.policy_override.empty() && opt.policy_override != scenario.policy.name) {
    mcsim::json pj = {{"name", opt.policy_override}};
    scenario.policy = mcsim::scenario_detail::parse_policy(pj, "cli --policy");
  }
  return scenario;
}

int cmd_run(const RunOptions& opt) {
  const auto scenario = load_for_cli(opt);
  const std::uint64_t seed = opt.seed.value_or(scenario.master_seed);

  mcsim::Simulation sim(scenario, seed);
  std::ofstream events_out;
  if (opt.events) {
    std::filesystem::create_directories(opt.out_dir);
    events_out.open(std::filesystem::path(opt.out_dir) / "events.log");
    if (!events_out) throw std::runtime_error("cannot write events.log in " + opt.out_dir);
    sim.set_event_log(&events_out);
  }
  const auto report = sim.run();
  write_outputs({report}, opt.out_dir, opt.format);

  for (const auto& f : report.flows) {
    std::printf("flow %s: goodput %.3f Mbit/s, p95 %.3f ms, loss %.5f, switches %llu\n",
                f.id.c_str(), f.goodput_bps / 1e6, f.latency_p95_ns / 1e6, f.loss_fraction,
                static_cast<unsigned long long>(f.switch_count));
  }
  return kExitOk;
}

int cmd_sweep(const RunOptions& opt, std::uint64_t seeds, unsigned parallel) {
  const auto scenario = load_for_cli(opt);
  const auto reports = mcsim::run_sweep(scenario, seeds, parallel);
  write_outputs(reports, opt.out_dir, opt.format);
  std::printf("sweep: %llu runs written to %s\n",
              static_cast<unsigned long long>(reports.size()), opt.out_dir.c_str());
  return kExitOk;
}

int cmd_validate(const std::string& path) {
  const auto scenario = mcsim::load_scenario(path);
  std::printf("ok: %zu legs, %zu flows, policy %s, hash %s\n", scenario.legs.size(),
              scenario.flows.size(), scenario.policy.name.c_str(),
              mcsim::scenario_hash(scenario).c_str());
  return kExitOk;
}

int cmd_train(const std::string& path, std::uint64_t episodes, const std::string& checkpoint) {
  const auto scenario = mcsim::load_scenario(path);
  const auto stats = mcsim::train_rl(scenario, episodes, checkpoint, &std::cout);
  std::printf("trained %llu episodes (%llu epochs), checkpoint %s\n",
              static_cast<unsigned long long>(stats.episodes),
              static_cast<unsigned long long>(stats.epochs), checkpoint.c_str());
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Deterministic multi-connectivity RAN simulator"};
  app.require_subcommand(1);

  RunOptions opt;
  std::uint64_t seeds = 1;
  unsigned parallel = 1;
  std::uint64_t episodes = 50;
  std::string checkpoint;
  std::uint64_t seed_arg = 0;

  auto* run = app.add_subcommand("run", "Run one simulation");
  run->add_option("--scenario", opt.scenario_path, "Scenario file")->required();
  auto* seed_opt = run->add_option("--seed", seed_arg, "Master seed (default: scenario)");
  run->add_option("--policy", opt.policy_override, "Override policy name");
  run->add_option("--until", opt.until, "Override sim duration (e.g. 500ms, 10s)");
  run->add_option("--out", opt.out_dir, "Output directory")->required();
  run->add_option("--format", opt.format, "Output format: csv|json|all (default all)");
  run->add_flag("--events", opt.events, "Write events.log (one line per event)");

  auto* sweep = app.add_subcommand("sweep", "Run consecutive seeds");
  sweep->add_option("--scenario", opt.scenario_path, "Scenario file")->required();
  sweep->add_option("--seeds", seeds, "Number of seeds")->required();
  sweep->add_option("--parallel", parallel, "Concurrent workers (default 1)");
  sweep->add_option("--policy", opt.policy_override, "Override policy name");
  sweep->add_option("--until", opt.until, "Override sim duration");
  sweep->add_option("--out", opt.out_dir, "Output directory")->required();
  sweep->add_option("--format", opt.format, "Output format: csv|json|all");

  auto* validate = app.add_subcommand("validate", "Validate a scenario file");
  validate->add_option("--scenario", opt.scenario_path, "Scenario file")->required();

  auto* train = app.add_subcommand("train-rl", "Episodic Q-learning against a scenario");
  train->add_option("--scenario", opt.scenario_path, "Scenario file")->required();
  train->add_option("--episodes", episodes, "Training episodes");
  train->add_option("--checkpoint", checkpoint, "QTable checkpoint path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (seed_opt->count() > 0) opt.seed = seed_arg;
    if (run->parsed()) return cmd_run(opt);
    if (sweep->parsed()) return cmd_sweep(opt, seeds, parallel);
    if (validate->parsed()) return cmd_validate(opt.scenario_path);
    if (train->parsed()) return cmd_train(opt.scenario_path, episodes, checkpoint);
  } catch (const mcsim::ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "runtime error: %s\n", e.what());
    return kExitRuntime;
  }
  return kExitUsage;
}
