#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "mcsim/error.hpp"
#include "mcsim/time.hpp"

namespace mcsim {

// Nearest-rank percentile over the full sample vector (exact, not streaming).
inline Duration percentile_nearest_rank(std::vector<std::int64_t> samples, double p) {
  if (samples.empty()) return Duration{0};
  std::sort(samples.begin(), samples.end());
  const auto rank = static_cast<std::size_t>(
      std::ceil(p / 100.0 * static_cast<double>(samples.size())));
  return Duration{samples[std::max<std::size_t>(rank, 1) - 1]};
}

struct FlowMetrics {
  std::string id;
  std::uint64_t offered_sdus{0};
  std::uint64_t offered_bytes{0};
  std::uint64_t delivered_sdus{0};
  std::uint64_t delivered_bytes{0};
  double goodput_bps{0.0};
  std::int64_t latency_p50_ns{0};
  std::int64_t latency_p95_ns{0};
  std::int64_t latency_p99_ns{0};
  double loss_fraction{0.0};
  std::uint64_t lost_sdus{0};
  std::uint64_t switch_count{0};
  std::uint64_t duplicate_discards{0};
  std::uint64_t reordering_timeouts{0};
  std::uint64_t in_flight_at_end{0};

  bool operator==(const FlowMetrics&) const = default;
};

struct LegMetrics {
  std::string id;
  std::uint64_t offered_pdus{0};
  std::uint64_t delivered_pdus{0};
  std::uint64_t dropped_channel{0};
  std::uint64_t dropped_linkdown{0};
  std::uint64_t dropped_overflow{0};
  double utilization{0.0};

  bool operator==(const LegMetrics&) const = default;
};

struct RunMetadata {
  std::uint64_t seed{0};
  std::string scenario_hash;
  std::string policy;
  std::uint64_t sim_duration_ns{0};

  bool operator==(const RunMetadata&) const = default;
};

struct MetricsReport {
  RunMetadata meta;
  std::vector<FlowMetrics> flows;
  std::vector<LegMetrics> legs;

  bool operator==(const MetricsReport&) const = default;
};

inline nlohmann::json to_json(const MetricsReport& r) {
  nlohmann::json j;
  j["meta"] = {{"seed", r.meta.seed},
               {"scenario_hash", r.meta.scenario_hash},
               {"policy", r.meta.policy},
               {"sim_duration_ns", r.meta.sim_duration_ns}};
  j["flows"] = nlohmann::json::array();
  for (const auto& f : r.flows) {
    j["flows"].push_back({{"id", f.id},
                          {"offered_sdus", f.offered_sdus},
                          {"offered_bytes", f.offered_bytes},
                          {"delivered_sdus", f.delivered_sdus},
                          {"delivered_bytes", f.delivered_bytes},
                          {"goodput_bps", f.goodput_bps},
                          {"latency_p50_ns", f.latency_p50_ns},
                          {"latency_p95_ns", f.latency_p95_ns},
                          {"latency_p99_ns", f.latency_p99_ns},
                          {"loss_fraction", f.loss_fraction},
                          {"lost_sdus", f.lost_sdus},
                          {"switch_count", f.switch_count},
                          {"duplicate_discards", f.duplicate_discards},
                          {"reordering_timeouts", f.reordering_timeouts},
                          {"in_flight_at_end", f.in_flight_at_end}});
  }
  j["legs"] = nlohmann::json::array();
  for (const auto& l : r.legs) {
    j["legs"].push_back({{"id", l.id},
                         {"offered_pdus", l.offered_pdus},
                         {"delivered_pdus", l.delivered_pdus},
                         {"dropped_channel", l.dropped_channel},
                         {"dropped_linkdown", l.dropped_linkdown},
                         {"dropped_overflow", l.dropped_overflow},
                         {"utilization", l.utilization}});
  }
  return j;
}

inline MetricsReport report_from_json(const nlohmann::json& j) {
  MetricsReport r;
  r.meta.seed = j.at("meta").at("seed").get<std::uint64_t>();
  r.meta.scenario_hash = j.at("meta").at("scenario_hash").get<std::string>();
  r.meta.policy = j.at("meta").at("policy").get<std::string>();
  r.meta.sim_duration_ns = j.at("meta").at("sim_duration_ns").get<std::uint64_t>();
  for (const auto& fj : j.at("flows")) {
    FlowMetrics f;
    f.id = fj.at("id").get<std::string>();
    f.offered_sdus = fj.at("offered_sdus").get<std::uint64_t>();
    f.offered_bytes = fj.at("offered_bytes").get<std::uint64_t>();
    f.delivered_sdus = fj.at("delivered_sdus").get<std::uint64_t>();
    f.delivered_bytes = fj.at("delivered_bytes").get<std::uint64_t>();
    f.goodput_bps = fj.at("goodput_bps").get<double>();
    f.latency_p50_ns = fj.at("latency_p50_ns").get<std::int64_t>();
    f.latency_p95_ns = fj.at("latency_p95_ns").get<std::int64_t>();
    f.latency_p99_ns = fj.at("latency_p99_ns").get<std::int64_t>();
    f.loss_fraction = fj.at("loss_fraction").get<double>();
    f.lost_sdus = fj.at("lost_sdus").get<std::uint64_t>();
    f.switch_count = fj.at("switch_count").get<std::uint64_t>();
    f.duplicate_discards = fj.at("duplicate_discards").get<std::uint64_t>();
    f.reordering_timeouts = fj.at("reordering_timeouts").get<std::uint64_t>();
    f.in_flight_at_end = fj.at("in_flight_at_end").get<std::uint64_t>();
    r.flows.push_back(std::move(f));
  }
  for (const auto& lj : j.at("legs")) {
    LegMetrics l;
    l.id = lj.at("id").get<std::string>();
    l.offered_pdus = lj.at("offered_pdus").get<std::uint64_t>();
    l.delivered_pdus = lj.at("delivered_pdus").get<std::uint64_t>();
    l.dropped_channel = lj.at("dropped_channel").get<std::uint64_t>();
    l.dropped_linkdown = lj.at("dropped_linkdown").get<std::uint64_t>();
    l.dropped_overflow = lj.at("dropped_overflow").get<std::uint64_t>();
    l.utilization = lj.at("utilization").get<double>();
    r.legs.push_back(std::move(l));
  }
  return r;
}

namespace metrics_detail {

inline std::string fmt_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

}  // namespace metrics_detail

// Fixed column order; flow rows leave the leg columns empty and vice versa.
// See README for the documented schema.
inline constexpr const char* kCsvHeader =
    "record,id,seed,scenario_hash,policy,sim_duration_ns,"
    "offered_sdus,offered_bytes,delivered_sdus,delivered_bytes,goodput_bps,"
    "latency_p50_ns,latency_p95_ns,latency_p99_ns,loss_fraction,lost_sdus,"
    "switch_count,duplicate_discards,reordering_timeouts,in_flight_at_end,"
    "offered_pdus,delivered_pdus,dropped_channel,dropped_linkdown,"
    "dropped_overflow,utilization";

inline void write_csv(std::ostream& out, std::span<const MetricsReport> reports) {
  using metrics_detail::fmt_double;
  out << kCsvHeader << "\n";
  for (const auto& r : reports) {
    const std::string meta = std::to_string(r.meta.seed) + "," + r.meta.scenario_hash +
                             "," + r.meta.policy + "," +
                             std::to_string(r.meta.sim_duration_ns);
    for (const auto& f : r.flows) {
      out << "flow," << f.id << "," << meta << "," << f.offered_sdus << ","
          << f.offered_bytes << "," << f.delivered_sdus << "," << f.delivered_bytes << ","
          << fmt_double(f.goodput_bps) << "," << f.latency_p50_ns << ","
          << f.latency_p95_ns << "," << f.latency_p99_ns << ","
          << fmt_double(f.loss_fraction) << "," << f.lost_sdus << "," << f.switch_count
          << "," << f.duplicate_discards << "," << f.reordering_timeouts << ","
          << f.in_flight_at_end << ",,,,,,\n";
    }
    for (const auto& l : r.legs) {
      out << "leg," << l.id << "," << meta << ",,,,,,,,,,,,,,," << l.offered_pdus << ","
          << l.delivered_pdus << "," << l.dropped_channel << "," << l.dropped_linkdown
          << "," << l.dropped_overflow << "," << fmt_double(l.utilization) << "\n";
    }
  }
}

inline void write_json(std::ostream& out, std::span<const MetricsReport> reports) {
  if (reports.size() == 1) {
    out << to_json(reports[0]).dump(2) << "\n";
    return;
  }
  nlohmann::json j;
  j["runs"] = nlohmann::json::array();
  for (const auto& r : reports) j["runs"].push_back(to_json(r));
  out << j.dump(2) << "\n";
}

// format: "csv" or "json"; anything else is a usage error.
inline void export_metrics(std::span<const MetricsReport> reports, const std::string& format,
                           const std::string& path) {
  if (format != "csv" && format != "json") {
    throw ValidationError("export_metrics: unknown format \"" + format +
                          "\" (expected csv or json)");
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("export_metrics: cannot write " + path);
  if (format == "csv") {
    write_csv(out, reports);
  } else {
    write_json(out, reports);
  }
  out.flush();
  if (!out) throw std::runtime_error("export_metrics: write failed: " + path);
}

inline void export_metrics(const MetricsReport& report, const std::string& format,
                           const std::string& path) {
  export_metrics(std::span<const MetricsReport>(&report, 1), format, path);
}

}  // namespace mcsim
