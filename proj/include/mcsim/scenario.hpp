#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "mcsim/bearer.hpp"
#include "mcsim/leg.hpp"
#include "mcsim/policy.hpp"
#include "mcsim/qoe.hpp"
#include "mcsim/traffic.hpp"

namespace mcsim {

using json = nlohmann::json;

struct FaultEvent {
  LegIndex leg{0};
  SimTime down_at{};
  std::optional<SimTime> up_at{};
};

struct PolicyConfig {
  std::string name{"static"};
  ThresholdParams threshold{};
  MadmParams madm{};
  RlParams rl{};
  std::optional<double> rl_epsilon_final{};  // linear decay target for train-rl
};

struct FlowConfig {
  QosFlow qos{};
  FlowGenConfig gen{};
  BearerMode bearer{};
};

struct Scenario {
  std::string name;
  std::uint64_t master_seed{1};
  SimTime sim_duration{};
  Duration epoch{};
  double crrm_alpha{0.5};
  Duration t_reordering{};  // resolved: default 4x max leg propagation delay
  bool ack_enabled{true};
  std::optional<Duration> ack_delay{};  // default: carrying leg's propagation delay
  QoeWeights qoe_weights{};
  std::vector<LegConfig> legs;
  std::vector<FlowConfig> flows;
  PolicyConfig policy{};
  std::vector<FaultEvent> faults;

  LegIndex leg_by_id(const std::string& id) const {
    for (std::size_t i = 0; i < legs.size(); ++i) {
      if (legs[i].id == id) return static_cast<LegIndex>(i);
    }
    throw ValidationError("scenario: unknown leg id \"" + id + "\"");
  }
};

namespace scenario_detail {

inline double req_number(const json& j, const char* key, const std::string& where) {
  if (!j.contains(key)) throw ValidationError(where + ": missing required field \"" + key + "\"");
  if (!j[key].is_number()) throw ValidationError(where + ": field \"" + key + "\" must be a number");
  return j[key].get<double>();
}

inline double opt_number(const json& j, const char* key, double def, const std::string& where) {
  if (!j.contains(key)) return def;
  if (!j[key].is_number()) throw ValidationError(where + ": field \"" + key + "\" must be a number");
  return j[key].get<double>();
}

inline bool opt_bool(const json& j, const char* key, bool def, const std::string& where) {
  if (!j.contains(key)) return def;
  if (!j[key].is_boolean()) throw ValidationError(where + ": field \"" + key + "\" must be a boolean");
  return j[key].get<bool>();
}

inline std::string opt_string(const json& j, const char* key, const std::string& def,
                              const std::string& where) {
  if (!j.contains(key)) return def;
  if (!j[key].is_string()) throw ValidationError(where + ": field \"" + key + "\" must be a string");
  return j[key].get<std::string>();
}

inline Duration positive_duration_ms(double ms, const char* key, const std::string& where) {
  if (!(ms > 0)) throw ValidationError(where + ": \"" + key + "\" must be positive");
  return duration_from_ms(ms);
}

inline BearerMode parse_bearer(const json& j, const Scenario& s, const std::string& where) {
  if (!j.is_object()) throw ValidationError(where + ": bearer must be an object");
  const std::string mode = opt_string(j, "mode", "", where);
  if (mode == "single") {
    if (!j.contains("leg")) throw ValidationError(where + ": single bearer needs \"leg\"");
    return BearerMode::single(s.leg_by_id(j["leg"].get<std::string>()));
  }
  if (mode == "duplicate") {
    if (!j.contains("legs") || !j["legs"].is_array()) {
      throw ValidationError(where + ": duplicate bearer needs a \"legs\" array");
    }
    std::vector<LegIndex> legs;
    for (const auto& l : j["legs"]) legs.push_back(s.leg_by_id(l.get<std::string>()));
    return BearerMode::duplicate(std::move(legs));
  }
  if (mode == "split") {
    if (!j.contains("weights") || !j["weights"].is_object()) {
      throw ValidationError(where + ": split bearer needs a \"weights\" object");
    }
    // Leg order (hence the DWRR visit sequence) follows scenario leg order.
    std::vector<LegIndex> legs;
    std::vector<std::uint32_t> weights;
    for (std::size_t i = 0; i < s.legs.size(); ++i) {
      const auto& id = s.legs[i].id;
      if (!j["weights"].contains(id)) continue;
      const double w = j["weights"][id].get<double>();
      if (!(w >= 1) || w != std::floor(w)) {
        throw ValidationError(where + ": split weight for \"" + id +
                              "\" must be a positive integer");
      }
      legs.push_back(static_cast<LegIndex>(i));
      weights.push_back(static_cast<std::uint32_t>(w));
    }
    for (const auto& [id, w] : j["weights"].items()) {
      (void)w;
      s.leg_by_id(id);  // reject unknown leg ids
    }
    return BearerMode::split(std::move(legs), std::move(weights));
  }
  throw ValidationError(where + ": bearer mode must be single|duplicate|split");
}

inline PolicyConfig parse_policy(const json& j, const std::string& where) {
  PolicyConfig out;
  out.name = opt_string(j, "name", "static", where);
  const json params = j.contains("params") ? j["params"] : json::object();
  if (out.name == "static") {
    return out;
  }
  if (out.name == "threshold") {
    out.threshold.theta_low = opt_number(params, "theta_low", 0.5, where);
    out.threshold.theta_high = opt_number(params, "theta_high", 1.0, where);
    out.threshold.hysteresis_epochs = static_cast<std::uint32_t>(
        opt_number(params, "hysteresis_epochs", 3, where));
    out.threshold.validate();
    return out;
  }
  if (out.name == "saw" || out.name == "topsis") {
    out.madm.method =
        out.name == "saw" ? MadmParams::Method::Saw : MadmParams::Method::Topsis;
    out.madm.w_thr = opt_number(params, "w_thr", 0.5, where);
    out.madm.w_loss = opt_number(params, "w_loss", 0.25, where);
    out.madm.w_delay = opt_number(params, "w_delay", 0.25, where);
    out.madm.hysteresis_epochs = static_cast<std::uint32_t>(
        opt_number(params, "hysteresis_epochs", 3, where));
    out.madm.validate();
    return out;
  }
  if (out.name == "rl") {
    out.rl.qlearn.alpha = opt_number(params, "alpha", 0.1, where);
    out.rl.qlearn.gamma = opt_number(params, "gamma", 0.9, where);
    out.rl.qlearn.epsilon = opt_number(params, "epsilon", 0.1, where);
    out.rl.qlearn.validate();
    out.rl.checkpoint = opt_string(params, "checkpoint", "", where);
    if (params.contains("epsilon_final")) {
      out.rl_epsilon_final = params["epsilon_final"].get<double>();
    }
    return out;
  }
  throw ValidationError(where + ": unknown policy \"" + out.name +
                        "\" (expected static|threshold|saw|topsis|rl)");
}

}  // namespace scenario_detail

inline Scenario parse_scenario(const json& j) {
  using namespace scenario_detail;
  if (!j.is_object()) throw ValidationError("scenario: document must be a JSON object");
  Scenario s;
  s.name = opt_string(j, "name", "", "scenario");
  s.master_seed = static_cast<std::uint64_t>(opt_number(j, "master_seed", 1, "scenario"));
  s.sim_duration =
      SimTime{} + positive_duration_ms(req_number(j, "sim_duration_ms", "scenario"),
                                       "sim_duration_ms", "scenario");
  s.epoch = positive_duration_ms(opt_number(j, "epoch_ms", 100.0, "scenario"), "epoch_ms",
                                 "scenario");
  s.crrm_alpha = opt_number(j, "crrm_alpha", 0.5, "scenario");
  if (!(s.crrm_alpha > 0 && s.crrm_alpha <= 1)) {
    throw ValidationError("scenario: crrm_alpha must be in (0,1]");
  }

  if (j.contains("qoe_weights")) {
    const auto& q = j["qoe_weights"];
    s.qoe_weights.throughput = opt_number(q, "throughput", 0.4, "scenario.qoe_weights");
    s.qoe_weights.latency = opt_number(q, "latency", 0.3, "scenario.qoe_weights");
    s.qoe_weights.reliability = opt_number(q, "reliability", 0.3, "scenario.qoe_weights");
  }
  s.qoe_weights.validate();

  if (j.contains("ack")) {
    const auto& a = j["ack"];
    s.ack_enabled = opt_bool(a, "enabled", true, "scenario.ack");
    if (a.contains("delay_ms")) {
      s.ack_delay = duration_from_ms(req_number(a, "delay_ms", "scenario.ack"));
    }
  }

  // Legs.
  if (!j.contains("legs") || !j["legs"].is_array() || j["legs"].empty()) {
    throw ValidationError("scenario: needs a non-empty \"legs\" array");
  }
  const std::size_t default_queue_cap = static_cast<std::size_t>(
      opt_number(j, "queue_cap_default", 1000, "scenario"));
  std::set<std::string> leg_ids;
  for (std::size_t i = 0; i < j["legs"].size(); ++i) {
    const auto& lj = j["legs"][i];
    const std::string where = "scenario: legs[" + std::to_string(i) + "]";
    LegConfig cfg;
    cfg.id = opt_string(lj, "id", "", where);
    if (cfg.id.empty()) throw ValidationError(where + ": missing leg \"id\"");
    if (!leg_ids.insert(cfg.id).second) {
      throw ValidationError(where + ": duplicate leg id \"" + cfg.id + "\"");
    }
    cfg.index = static_cast<LegIndex>(i);
    const std::string rat = opt_string(lj, "rat", "terrestrial_nr", where);
    if (rat == "terrestrial_nr") {
      cfg.rat = RatKind::TerrestrialNr;
    } else if (rat == "satellite") {
      cfg.rat = RatKind::Satellite;
    } else if (rat == "other_terrestrial") {
      cfg.rat = RatKind::OtherTerrestrial;
    } else {
      throw ValidationError(where + ": unknown rat \"" + rat + "\"");
    }
    const double mbps = req_number(lj, "capacity_mbps", where);
    if (!(mbps > 0)) throw ValidationError(where + ": capacity_mbps must be positive");
    cfg.capacity_bps = static_cast<std::uint64_t>(mbps * 1e6);
    cfg.distance_m = opt_number(lj, "distance_km", 0.0, where) * 1000.0;
    if (cfg.distance_m < 0) throw ValidationError(where + ": distance_km must be >= 0");
    if (lj.contains("prop_delay_ms")) {
      cfg.prop_delay = duration_from_ms(req_number(lj, "prop_delay_ms", where));
    }
    cfg.queue_cap = static_cast<std::size_t>(
        opt_number(lj, "queue_cap", static_cast<double>(default_queue_cap), where));
    if (lj.contains("channel")) {
      const auto& cj = lj["channel"];
      cfg.channel.p_gb = opt_number(cj, "p_gb", 0.0, where);
      cfg.channel.p_bg = opt_number(cj, "p_bg", 0.0, where);
      cfg.channel.loss_good = opt_number(cj, "loss_good", 0.0, where);
      // loss_bad defaults to loss_good (uniform loss), keeping the
      // loss_good <= loss_bad invariant for static-state channels.
      cfg.channel.loss_bad = opt_number(cj, "loss_bad", cfg.channel.loss_good, where);
      const std::string init = opt_string(cj, "initial", "good", where);
      if (init == "good") {
        cfg.channel.initial = ChannelState::Good;
      } else if (init == "bad") {
        cfg.channel.initial = ChannelState::Bad;
      } else {
        throw ValidationError(where + ": channel initial must be good|bad");
      }
    }
    cfg.validate();
    s.legs.push_back(std::move(cfg));
  }

  // t_reordering: explicit, or 4x the largest propagation delay.
  if (j.contains("t_reordering_ms")) {
    s.t_reordering = positive_duration_ms(req_number(j, "t_reordering_ms", "scenario"),
                                          "t_reordering_ms", "scenario");
  } else {
    Duration max_prop{};
    for (const auto& l : s.legs) max_prop = std::max(max_prop, propagation_delay(l));
    s.t_reordering = max_prop * 4;
  }

  // Flows.
  if (!j.contains("flows") || !j["flows"].is_array() || j["flows"].empty()) {
    throw ValidationError("scenario: needs a non-empty \"flows\" array");
  }
  std::set<std::string> flow_ids;
  const bool has_default_bearer = j.contains("default_bearer");
  for (std::size_t i = 0; i < j["flows"].size(); ++i) {
    const auto& fj = j["flows"][i];
    std::string where = "scenario: flows[" + std::to_string(i) + "]";
    FlowConfig fc;
    fc.qos.id = opt_string(fj, "id", "", where);
    if (fc.qos.id.empty()) throw ValidationError(where + ": missing flow \"id\"");
    where += " (id \"" + fc.qos.id + "\")";
    if (!flow_ids.insert(fc.qos.id).second) {
      throw ValidationError(where + ": duplicate flow id");
    }
    fc.qos.index = static_cast<FlowIndex>(i);

    fc.gen.flow_id = fc.qos.id;
    const std::string kind = opt_string(fj, "kind", "cbr", where);
    if (kind == "cbr") {
      fc.gen.kind = TrafficKind::Cbr;
    } else if (kind == "poisson") {
      fc.gen.kind = TrafficKind::Poisson;
    } else {
      throw ValidationError(where + ": kind must be cbr|poisson");
    }
    fc.gen.rate_pps = req_number(fj, "rate_pps", where);
    fc.gen.size_bytes = static_cast<std::uint32_t>(req_number(fj, "size_bytes", where));
    const double start_ms = opt_number(fj, "start_ms", 0.0, where);
    if (start_ms < 0) throw ValidationError(where + ": start_ms must be >= 0");
    fc.gen.start = SimTime{} + duration_from_ms(start_ms);
    const double stop_ms = opt_number(
        fj, "stop_ms", static_cast<double>(s.sim_duration.ns) / 1e6, where);
    fc.gen.stop = SimTime{} + duration_from_ms(stop_ms);
    fc.gen.validate();

    const double default_target_mbps = fc.gen.rate_pps * fc.gen.size_bytes * 8.0 / 1e6;
    const double target_mbps = opt_number(fj, "target_thr_mbps", default_target_mbps, where);
    if (!(target_mbps > 0)) throw ValidationError(where + ": target_thr_mbps must be positive");
    fc.qos.target_thr_bps = static_cast<std::uint64_t>(target_mbps * 1e6);
    fc.qos.latency_budget = positive_duration_ms(
        opt_number(fj, "latency_budget_ms", 100.0, where), "latency_budget_ms", where);
    fc.qos.reliability_target = opt_number(fj, "reliability_target", 0.0, where);
    fc.qos.validate();

    if (fj.contains("bearer")) {
      fc.bearer = parse_bearer(fj["bearer"], s, where);
    } else if (has_default_bearer) {
      fc.bearer = parse_bearer(j["default_bearer"], s, where + " via default_bearer");
    } else {
      throw ValidationError(where + ": no bearer configured and no default_bearer present");
    }
    fc.bearer.validate(s.legs.size());
    s.flows.push_back(std::move(fc));
  }

  s.policy = scenario_detail::parse_policy(
      j.contains("policy") ? j["policy"] : json::object(), "scenario.policy");

  // Fault schedule.
  if (j.contains("faults")) {
    if (!j["faults"].is_array()) throw ValidationError("scenario: faults must be an array");
    for (std::size_t i = 0; i < j["faults"].size(); ++i) {
      const auto& ej = j["faults"][i];
      const std::string where = "scenario: faults[" + std::to_string(i) + "]";
      FaultEvent ev;
      const std::string leg_id = opt_string(ej, "leg", "", where);
      if (leg_id.empty()) throw ValidationError(where + ": missing \"leg\"");
      ev.leg = s.leg_by_id(leg_id);
      const double down_ms = req_number(ej, "down_at_ms", where);
      if (down_ms < 0) throw ValidationError(where + ": down_at_ms must be >= 0");
      ev.down_at = SimTime{} + duration_from_ms(down_ms);
      if (ej.contains("up_at_ms")) {
        const double up_ms = req_number(ej, "up_at_ms", where);
        ev.up_at = SimTime{} + duration_from_ms(up_ms);
        if (!(*ev.up_at > ev.down_at)) {
          throw ValidationError(where + ": up_at_ms must be after down_at_ms");
        }
      }
      s.faults.push_back(ev);
    }
    // Per-leg intervals must not overlap.
    std::map<LegIndex, std::vector<FaultEvent>> per_leg;
    for (const auto& ev : s.faults) per_leg[ev.leg].push_back(ev);
    for (auto& [leg, evs] : per_leg) {
      std::sort(evs.begin(), evs.end(),
                [](const FaultEvent& a, const FaultEvent& b) { return a.down_at < b.down_at; });
      for (std::size_t i = 0; i + 1 < evs.size(); ++i) {
        if (!evs[i].up_at || !(*evs[i].up_at < evs[i + 1].down_at)) {
          throw ValidationError("scenario: overlapping fault intervals on leg \"" +
                                s.legs[leg].id + "\"");
        }
      }
    }
  }
  return s;
}

inline Scenario load_scenario(const std::string& path,
                              std::optional<double> until_override_ms = {}) {
  std::ifstream in(path);
  if (!in) throw ValidationError("scenario: cannot read file " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ValidationError("scenario: " + path + ": JSON parse error: " + e.what());
  }
  if (until_override_ms) j["sim_duration_ms"] = *until_override_ms;
  return parse_scenario(j);
}

// Canonical normalized serialization; the run hash is FNV-1a over this text,
// so it changes iff some resolved scenario field changes.
inline json to_json(const Scenario& s) {
  json j;
  j["name"] = s.name;
  j["master_seed"] = s.master_seed;
  j["sim_duration_ns"] = s.sim_duration.ns;
  j["epoch_ns"] = s.epoch.ns;
  j["crrm_alpha"] = s.crrm_alpha;
  j["t_reordering_ns"] = s.t_reordering.ns;
  j["ack_enabled"] = s.ack_enabled;
  j["ack_delay_ns"] = s.ack_delay ? json(s.ack_delay->ns) : json(nullptr);
  j["qoe_weights"] = {{"throughput", s.qoe_weights.throughput},
                      {"latency", s.qoe_weights.latency},
                      {"reliability", s.qoe_weights.reliability}};
  j["legs"] = json::array();
  for (const auto& l : s.legs) {
    j["legs"].push_back(
        {{"id", l.id},
         {"rat", l.rat == RatKind::TerrestrialNr
                     ? "terrestrial_nr"
                     : (l.rat == RatKind::Satellite ? "satellite" : "other_terrestrial")},
         {"capacity_bps", l.capacity_bps},
         {"distance_m", l.distance_m},
         {"prop_delay_ns", l.prop_delay ? json(l.prop_delay->ns) : json(nullptr)},
         {"queue_cap", l.queue_cap},
         {"channel",
          {{"p_gb", l.channel.p_gb},
           {"p_bg", l.channel.p_bg},
           {"loss_good", l.channel.loss_good},
           {"loss_bad", l.channel.loss_bad},
           {"initial", l.channel.initial == ChannelState::Good ? "good" : "bad"}}}});
  }
  j["flows"] = json::array();
  for (const auto& f : s.flows) {
    json bearer;
    bearer["kind"] = f.bearer.kind == BearerMode::Kind::Single
                         ? "single"
                         : (f.bearer.kind == BearerMode::Kind::Duplicate ? "duplicate"
                                                                         : "split");
    bearer["legs"] = f.bearer.legs;
    bearer["weights"] = f.bearer.weights;
    j["flows"].push_back(
        {{"id", f.qos.id},
         {"kind", f.gen.kind == TrafficKind::Cbr ? "cbr" : "poisson"},
         {"rate_pps", f.gen.rate_pps},
         {"size_bytes", f.gen.size_bytes},
         {"start_ns", f.gen.start.ns},
         {"stop_ns", f.gen.stop.ns},
         {"target_thr_bps", f.qos.target_thr_bps},
         {"latency_budget_ns", f.qos.latency_budget.ns},
         {"reliability_target", f.qos.reliability_target},
         {"bearer", bearer}});
  }
  json pol;
  pol["name"] = s.policy.name;
  if (s.policy.name == "threshold") {
    pol["theta_low"] = s.policy.threshold.theta_low;
    pol["theta_high"] = s.policy.threshold.theta_high;
    pol["hysteresis_epochs"] = s.policy.threshold.hysteresis_epochs;
  } else if (s.policy.name == "saw" || s.policy.name == "topsis") {
    pol["w_thr"] = s.policy.madm.w_thr;
    pol["w_loss"] = s.policy.madm.w_loss;
    pol["w_delay"] = s.policy.madm.w_delay;
    pol["hysteresis_epochs"] = s.policy.madm.hysteresis_epochs;
  } else if (s.policy.name == "rl") {
    pol["alpha"] = s.policy.rl.qlearn.alpha;
    pol["gamma"] = s.policy.rl.qlearn.gamma;
    pol["epsilon"] = s.policy.rl.qlearn.epsilon;
    pol["checkpoint"] = s.policy.rl.checkpoint;
    pol["epsilon_final"] =
        s.policy.rl_epsilon_final ? json(*s.policy.rl_epsilon_final) : json(nullptr);
  }
  j["policy"] = pol;
  j["faults"] = json::array();
  for (const auto& ev : s.faults) {
    j["faults"].push_back({{"leg", ev.leg},
                           {"down_at_ns", ev.down_at.ns},
                           {"up_at_ns", ev.up_at ? json(ev.up_at->ns) : json(nullptr)}});
  }
  return j;
}

inline std::string scenario_hash(const Scenario& s) {
  const std::uint64_t h = fnv1a64(to_json(s).dump());
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

}  // namespace mcsim
