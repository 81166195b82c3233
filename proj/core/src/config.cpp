#include "ackscope/config.hpp"

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <sstream>

#include "ackscope/errors.hpp"
#include "builtin_profiles.hpp"

namespace ackscope {
namespace {

using Node = YAML::Node;

int line_of(const Node& n) { return n.IsDefined() && n.Mark().line >= 0 ? n.Mark().line + 1 : 0; }

[[noreturn]] void fail_at(const Node& n, const std::string& msg) {
  const int line = line_of(n);
  throw ValidationError(line ? "line " + std::to_string(line) + ": " + msg : msg, line);
}

template <typename F>
auto guard(const Node& n, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const ValidationError& e) {
    if (e.line() != 0) throw;
    fail_at(n, e.what());
  } catch (const InvalidInput& e) {
    fail_at(n, e.what());
  } catch (const YAML::Exception& e) {
    fail_at(n, e.msg);
  } catch (const std::invalid_argument& e) {
    fail_at(n, std::string("invalid value: ") + e.what());
  } catch (const std::out_of_range& e) {
    fail_at(n, std::string("value out of range: ") + e.what());
  }
}

void check_keys(const Node& n, std::initializer_list<std::string_view> allowed, std::string_view what) {
  if (!n.IsMap()) fail_at(n, std::string(what) + " must be a mapping");
  for (const auto& kv : n) {
    const auto key = kv.first.as<std::string>();
    bool ok = false;
    for (auto a : allowed) ok = ok || a == key;
    if (!ok) fail_at(kv.first, "unknown key '" + key + "' in " + std::string(what));
  }
}

Node require(const Node& parent, const char* key) {
  Node n = parent[key];
  if (!n.IsDefined() || n.IsNull()) fail_at(parent, std::string("missing required key '") + key + "'");
  return n;
}

std::string str(const Node& n) {
  if (!n.IsScalar()) fail_at(n, "expected a scalar");
  return n.Scalar();
}

double num(const Node& n) {
  return guard(n, [&] { return n.as<double>(); });
}

std::int64_t integer(const Node& n) {
  return guard(n, [&] { return n.as<std::int64_t>(); });
}

bool boolean(const Node& n) {
  return guard(n, [&] { return n.as<bool>(); });
}

Millis duration(const Node& n) {
  return guard(n, [&] { return parse_duration(str(n)); });
}

SimTime instant(const Node& n, Millis epoch) {
  return guard(n, [&] { return parse_instant(str(n), epoch); });
}

template <typename E>
E enum_value(const Node& n) {
  return guard(n, [&] { return parse_enum<E>(str(n)); });
}

// Milliseconds; numbers are taken as ms, strings may carry a unit.
double ms(const Node& n) {
  const std::string s = str(n);
  return guard(n, [&] {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used == s.size()) return v;
    return static_cast<double>(parse_duration(s));
  });
}

LatencyDistribution distribution(const Node& n) {
  if (n.IsScalar()) return guard(n, [&] { return LatencyDistribution::constant(ms(n)); });
  check_keys(n, {"kind", "value", "mean", "sd", "min", "low", "high", "table"}, "distribution");
  const auto kind = enum_value<DistributionKind>(require(n, "kind"));
  const double min = n["min"] ? ms(n["min"]) : 0.0;
  return guard(n, [&] {
    switch (kind) {
      case DistributionKind::Constant:
        return LatencyDistribution::constant(ms(require(n, "value")));
      case DistributionKind::Normal:
        return LatencyDistribution::normal(ms(require(n, "mean")), ms(require(n, "sd")), min);
      case DistributionKind::LogNormal:
        return LatencyDistribution::lognormal(ms(require(n, "mean")), ms(require(n, "sd")), min);
      case DistributionKind::Uniform:
        return LatencyDistribution::uniform(ms(require(n, "low")), ms(require(n, "high")));
      case DistributionKind::Empirical: {
        std::vector<double> table;
        for (const auto& v : require(n, "table")) table.push_back(ms(v));
        return LatencyDistribution::empirical(std::move(table), min);
      }
    }
    return LatencyDistribution::constant(0.0);
  });
}

AccessLink access_link(const Node& n, AccessLink base) {
  check_keys(n, {"tech", "up", "down", "rtt_half", "jitter_scale"}, "link");
  if (n["tech"]) base.tech = enum_value<LinkTech>(n["tech"]);
  if (n["rtt_half"]) base.up = base.down = distribution(n["rtt_half"]);
  if (n["up"]) base.up = distribution(n["up"]);
  if (n["down"]) base.down = distribution(n["down"]);
  if (n["jitter_scale"]) base.jitter_scale = num(n["jitter_scale"]);
  if (base.jitter_scale < 0) fail_at(n, "jitter_scale must be >= 0");
  return base;
}

void apply_profile_fields(const Node& n, PlatformProfile& p) {
  check_keys(n,
             {"name", "app", "os", "class", "delays", "stranger_delays", "sleep", "stacking", "read_stacking",
              "transient_duration_s", "battery", "ack_noise"},
             "profile");
  if (n["name"]) p.name = str(n["name"]);
  if (n["app"]) p.app = str(n["app"]);
  if (n["os"]) p.os = enum_value<PlatformKind>(n["os"]);
  if (n["class"]) p.device_class = enum_value<DeviceClass>(n["class"]);
  if (const Node d = n["delays"]) {
    if (!d.IsMap()) fail_at(d, "delays must map states to distributions");
    for (const auto& kv : d) p.delay_by_state[enum_value<ActivityState>(kv.first)] = distribution(kv.second);
  }
  if (const Node d = n["stranger_delays"]) {
    if (!d.IsMap()) fail_at(d, "stranger_delays must map states to distributions");
    for (const auto& kv : d) p.stranger_delay_override[enum_value<ActivityState>(kv.first)] = distribution(kv.second);
  }
  if (const Node s = n["sleep"]) {
    if (s.IsNull()) {
      p.sleep.reset();
    } else {
      check_keys(s, {"idle_threshold_s", "probe_resets_idle"}, "sleep");
      SleepDynamics sd = p.sleep.value_or(SleepDynamics{});
      if (s["idle_threshold_s"]) sd.idle_threshold_s = num(s["idle_threshold_s"]);
      if (s["probe_resets_idle"]) sd.probe_resets_idle = boolean(s["probe_resets_idle"]);
      p.sleep = sd;
    }
  }
  if (n["stacking"]) p.stacking = enum_value<StackingPolicy>(n["stacking"]);
  if (n["read_stacking"]) p.read_stacking = enum_value<StackingPolicy>(n["read_stacking"]);
  if (n["transient_duration_s"]) p.transient_duration_s = num(n["transient_duration_s"]);
  if (const Node b = n["battery"]) {
    check_keys(b, {"idle_pct_per_h", "attack_pct_per_h"}, "battery");
    BatteryRates r = p.battery.value_or(BatteryRates{});
    if (b["idle_pct_per_h"]) r.idle_pct_per_h = num(b["idle_pct_per_h"]);
    if (b["attack_pct_per_h"]) r.attack_pct_per_h = num(b["attack_pct_per_h"]);
    p.battery = r;
  }
  if (n["ack_noise"]) p.ack_noise = distribution(n["ack_noise"]);
}

SenderRateLimiter limiter(const Node& n) {
  if (n.IsScalar()) {
    const std::string s = str(n);
    if (s == "none" || s == "None") return SenderRateLimiter::none();
    return guard(n, [&] { return SenderRateLimiter::preset(parse_enum<MessengerKind>(s)); });
  }
  check_keys(n, {"model", "per_s", "burst", "bytes_per_s"}, "limiter");
  const auto model = n["model"] ? enum_value<LimiterModel>(n["model"]) : LimiterModel::QueueAboveRate;
  if (model == LimiterModel::None) return SenderRateLimiter::none();
  std::optional<double> bytes;
  if (n["bytes_per_s"]) bytes = num(n["bytes_per_s"]);
  return guard(n, [&] {
    return SenderRateLimiter::queue_above(num(require(n, "per_s")), static_cast<int>(integer(require(n, "burst"))),
                                          bytes);
  });
}

MitigationConfig mitigations(const Node& n) {
  MitigationConfig m;
  if (!n || n.IsNull()) return m;
  check_keys(n,
             {"restrict_to_contacts", "receipt_delay_noise", "strict_validation", "rate_limit",
              "receiver_flood_threshold_per_min", "synchronized_receipts", "harmonized_stacking"},
             "mitigations");
  if (n["restrict_to_contacts"]) m.restrict_to_contacts = boolean(n["restrict_to_contacts"]);
  if (n["receipt_delay_noise"] && !n["receipt_delay_noise"].IsNull()) {
    m.receipt_delay_noise = distribution(n["receipt_delay_noise"]);
  }
  if (n["strict_validation"]) m.strict_validation = boolean(n["strict_validation"]);
  if (n["rate_limit"] && !n["rate_limit"].IsNull()) m.rate_limit = limiter(n["rate_limit"]);
  if (n["receiver_flood_threshold_per_min"] && !n["receiver_flood_threshold_per_min"].IsNull()) {
    m.receiver_flood_threshold_per_min = static_cast<int>(integer(n["receiver_flood_threshold_per_min"]));
  }
  if (n["synchronized_receipts"]) m.synchronized_receipts = boolean(n["synchronized_receipts"]);
  if (n["harmonized_stacking"] && !n["harmonized_stacking"].IsNull()) {
    m.harmonized_stacking = enum_value<StackingPolicy>(n["harmonized_stacking"]);
  }
  guard(n, [&] {
    m.validate();
    return 0;
  });
  return m;
}

Node load_yaml(std::string_view text) {
  try {
    return YAML::Load(std::string(text));
  } catch (const YAML::ParserException& e) {
    const int line = e.mark.line >= 0 ? e.mark.line + 1 : 0;
    throw ValidationError("line " + std::to_string(line) + ": " + e.msg, line);
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void topology(const Node& n, ServerTopology& t) {
  check_keys(n, {"edge_nodes", "servers", "cross_server", "hops", "pins", "loss", "retransmit_after"}, "topology");
  if (const Node e = n["edge_nodes"]) {
    t.edge_nodes.clear();
    for (const auto& v : e) t.edge_nodes.push_back(str(v));
  }
  if (const Node s = n["servers"]) {
    t.messaging_servers.clear();
    for (const auto& v : s) t.messaging_servers.push_back(str(v));
  }
  if (n["cross_server"]) t.default_cross_server = distribution(n["cross_server"]);
  if (const Node h = n["hops"]) {
    for (const auto& hop : h) {
      check_keys(hop, {"from", "to", "latency"}, "hop");
      t.hop_latency[{str(require(hop, "from")), str(require(hop, "to"))}] = distribution(require(hop, "latency"));
    }
  }
  if (const Node p = n["pins"]) {
    if (!p.IsMap()) fail_at(p, "pins must map accounts to servers");
    for (const auto& kv : p) t.routing_pins[AccountId{str(kv.first)}] = str(kv.second);
  }
  if (n["loss"]) t.conditions.loss_probability = num(n["loss"]);
  if (n["retransmit_after"]) t.conditions.retransmit_after = duration(n["retransmit_after"]);
  guard(n, [&] {
    t.validate();
    return 0;
  });
}

ProbeSchedule schedule(const Node& n, Millis epoch) {
  check_keys(n, {"kind", "interval", "rate_per_s", "payload_bytes", "start", "duration", "until", "ref_valid"},
             "schedule");
  ProbeSchedule s;
  s.kind = enum_value<ProbeKind>(require(n, "kind"));
  if (n["interval"] && n["rate_per_s"]) fail_at(n, "give either interval or rate_per_s");
  if (n["interval"]) {
    s.interval_ms = duration(n["interval"]);
  } else if (n["rate_per_s"]) {
    const double r = num(n["rate_per_s"]);
    if (!(r > 0)) fail_at(n["rate_per_s"], "rate_per_s must be > 0");
    s.interval_ms = static_cast<Millis>(std::llround(1000.0 / r));
  } else {
    fail_at(n, "schedule needs interval or rate_per_s");
  }
  if (n["payload_bytes"]) s.payload_bytes = integer(n["payload_bytes"]);
  if (n["start"]) s.start_at = instant(n["start"], epoch);
  if (n["duration"] && n["until"]) fail_at(n, "give either duration or until");
  if (n["duration"]) {
    s.duration_s = static_cast<double>(duration(n["duration"])) / 1000.0;
  } else if (n["until"]) {
    s.duration_s = static_cast<double>(instant(n["until"], epoch) - s.start_at) / 1000.0;
  } else {
    fail_at(n, "schedule needs duration or until");
  }
  if (n["ref_valid"]) s.ref_valid = boolean(n["ref_valid"]);
  guard(n, [&] {
    s.validate();
    return 0;
  });
  return s;
}

ScriptEntry script_entry(const Node& n, Millis epoch) {
  check_keys(n, {"at", "state", "link", "open_conversation"}, "script entry");
  ScriptEntry e;
  e.at = instant(require(n, "at"), epoch);
  if (n["state"]) e.state = enum_value<ActivityState>(n["state"]);
  if (n["link"]) e.link = enum_value<LinkTech>(n["link"]);
  if (n["open_conversation"]) e.open_conversation = boolean(n["open_conversation"]);
  if (!e.state && !e.link && !e.open_conversation) fail_at(n, "script entry changes nothing");
  return e;
}

}  // namespace

ProfileCatalog parse_profile_catalog(std::string_view yaml) {
  const Node root = load_yaml(yaml);
  check_keys(root, {"version", "profiles"}, "profile catalog");
  const int version = static_cast<int>(integer(require(root, "version")));
  std::vector<PlatformProfile> profiles;
  for (const auto& n : require(root, "profiles")) {
    PlatformProfile p;
    apply_profile_fields(n, p);
    if (p.name.empty()) fail_at(n, "profile without a name");
    for (const auto& q : profiles) {
      if (q.name == p.name) fail_at(n, "duplicate profile '" + p.name + "'");
    }
    guard(n, [&] {
      p.validate();
      return 0;
    });
    profiles.push_back(std::move(p));
  }
  return ProfileCatalog(version, std::move(profiles));
}

ProfileCatalog load_profile_catalog(const std::string& path) { return parse_profile_catalog(read_file(path)); }

const ProfileCatalog& ProfileCatalog::builtin() {
  static const ProfileCatalog catalog = parse_profile_catalog(detail::kBuiltinProfilesYaml);
  return catalog;
}

Scenario parse_scenario(std::string_view yaml, const ProfileCatalog& catalog) {
  const Node root = load_yaml(yaml);
  check_keys(root,
             {"version", "name", "seed", "policy", "epoch", "end", "topology", "links", "attacker", "victim",
              "mitigations"},
             "scenario");
  Scenario sc;
  sc.version = static_cast<int>(integer(require(root, "version")));
  if (sc.version != 1) fail_at(root["version"], "unsupported scenario version " + std::to_string(sc.version));
  if (root["name"]) sc.name = str(root["name"]);
  if (root["seed"]) sc.seed = guard(root["seed"], [&] { return root["seed"].as<std::uint64_t>(); });
  if (root["policy"]) sc.policy = MessengerPolicy::preset(enum_value<MessengerKind>(root["policy"]));
  if (root["epoch"]) sc.epoch_of_day = guard(root["epoch"], [&] { return parse_time_of_day(str(root["epoch"])); });
  const Millis epoch = sc.epoch_of_day;
  sc.end_at = instant(require(root, "end"), epoch);
  if (const Node t = root["topology"]) topology(t, sc.topology);
  if (const Node l = root["links"]) {
    if (!l.IsMap()) fail_at(l, "links must map technologies to link parameters");
    for (const auto& kv : l) {
      const auto tech = enum_value<LinkTech>(kv.first);
      AccessLink base = AccessLink::preset(tech);
      sc.link_presets[tech] = access_link(kv.second, base);
      sc.link_presets[tech].tech = tech;
    }
  }

  const Node a = require(root, "attacker");
  check_keys(a, {"type", "account", "link", "prior_messages", "reference_age", "schedules", "limiter", "allow_visible"},
             "attacker");
  sc.attacker.type = enum_value<AttackerType>(require(a, "type"));
  if (a["account"]) sc.attacker.account = AccountId{str(a["account"])};
  if (a["link"]) sc.attacker.link = access_link(a["link"], AccessLink::attacker_default());
  if (a["prior_messages"]) sc.attacker.prior_messages = static_cast<int>(integer(a["prior_messages"]));
  if (a["reference_age"]) sc.attacker.reference_age = duration(a["reference_age"]);
  if (a["limiter"]) sc.attacker.limiter = limiter(a["limiter"]);
  if (a["allow_visible"]) sc.attacker.allow_visible = boolean(a["allow_visible"]);
  std::vector<Node> schedule_nodes;
  if (const Node ss = a["schedules"]) {
    for (const auto& s : ss) {
      sc.attacker.schedules.push_back(schedule(s, epoch));
      schedule_nodes.push_back(s);
    }
  }

  const Node v = require(root, "victim");
  check_keys(v, {"account", "attacker_in_contacts", "read_receipts", "devices"}, "victim");
  if (v["account"]) sc.victim.account = AccountId{str(v["account"])};
  if (v["attacker_in_contacts"]) sc.victim.attacker_in_contacts = boolean(v["attacker_in_contacts"]);
  if (v["read_receipts"]) sc.victim.read_receipts = boolean(v["read_receipts"]);
  std::vector<Node> device_nodes;
  for (const auto& d : require(v, "devices")) {
    check_keys(d,
               {"index", "profile", "profile_override", "link", "initial", "script", "registered_at", "removed_at",
                "battery"},
               "device");
    DeviceConfig dc;
    dc.index = static_cast<DeviceIndex>(integer(require(d, "index")));
    const Node pn = require(d, "profile");
    dc.profile = guard(pn, [&] { return catalog.find(str(pn)); });
    if (const Node o = d["profile_override"]) {
      if (o["name"]) fail_at(o["name"], "profile overrides cannot rename the profile");
      apply_profile_fields(o, dc.profile);
    }
    if (d["link"]) dc.link = enum_value<LinkTech>(d["link"]);
    if (d["initial"]) dc.initial = enum_value<ActivityState>(d["initial"]);
    if (d["registered_at"]) dc.registered_at = instant(d["registered_at"], epoch);
    if (d["removed_at"]) dc.removed_at = instant(d["removed_at"], epoch);
    if (d["battery"]) dc.battery_pct = num(d["battery"]);
    if (const Node s = d["script"]) {
      SimTime prev = std::numeric_limits<SimTime>::min();
      for (const auto& e : s) {
        dc.script.push_back(script_entry(e, epoch));
        if (dc.script.back().at < prev) fail_at(e, "script entries must be chronological");
        prev = dc.script.back().at;
      }
    }
    sc.victim.devices.push_back(std::move(dc));
    device_nodes.push_back(d);
  }
  sc.mitigations = mitigations(root["mitigations"]);

  guard(root, [&] {
    sc.validate_header();
    return 0;
  });
  for (std::size_t i = 0; i < device_nodes.size(); ++i) {
    guard(device_nodes[i], [&] {
      sc.validate_device(i);
      return 0;
    });
  }
  for (std::size_t i = 0; i < schedule_nodes.size(); ++i) {
    guard(schedule_nodes[i], [&] {
      sc.validate_schedule(i);
      return 0;
    });
  }
  return sc;
}

Scenario load_scenario(const std::string& path, const ProfileCatalog& catalog) {
  return parse_scenario(read_file(path), catalog);
}

MitigationConfig parse_mitigations(std::string_view yaml) {
  const Node root = load_yaml(yaml);
  if (root.IsMap() && root["mitigations"]) return mitigations(root["mitigations"]);
  return mitigations(root);
}

namespace {

void emit_distribution(YAML::Emitter& out, const LatencyDistribution& d) {
  out << YAML::Flow << YAML::BeginMap << YAML::Key << "kind" << YAML::Value << std::string(to_string(d.kind()));
  switch (d.kind()) {
    case DistributionKind::Constant:
      out << YAML::Key << "value" << YAML::Value << d.mean();
      break;
    case DistributionKind::Normal:
    case DistributionKind::LogNormal:
      out << YAML::Key << "mean" << YAML::Value << d.mean() << YAML::Key << "sd" << YAML::Value << d.stddev();
      if (d.min_ms() > 0) out << YAML::Key << "min" << YAML::Value << d.min_ms();
      break;
    case DistributionKind::Uniform:
      out << YAML::Key << "low" << YAML::Value << d.low() << YAML::Key << "high" << YAML::Value << d.high();
      break;
    case DistributionKind::Empirical:
      out << YAML::Key << "table" << YAML::Value << d.table();
      break;
  }
  out << YAML::EndMap;
}

}  // namespace

std::string profile_to_yaml(const PlatformProfile& p) {
  YAML::Emitter out;
  out << YAML::BeginMap;
  out << YAML::Key << "name" << YAML::Value << p.name;
  out << YAML::Key << "app" << YAML::Value << p.app;
  out << YAML::Key << "os" << YAML::Value << std::string(to_string(p.os));
  out << YAML::Key << "class" << YAML::Value << std::string(to_string(p.device_class));
  out << YAML::Key << "delays" << YAML::Value << YAML::BeginMap;
  for (const auto& [s, d] : p.delay_by_state) {
    out << YAML::Key << std::string(to_string(s)) << YAML::Value;
    emit_distribution(out, d);
  }
  out << YAML::EndMap;
  if (!p.stranger_delay_override.empty()) {
    out << YAML::Key << "stranger_delays" << YAML::Value << YAML::BeginMap;
    for (const auto& [s, d] : p.stranger_delay_override) {
      out << YAML::Key << std::string(to_string(s)) << YAML::Value;
      emit_distribution(out, d);
    }
    out << YAML::EndMap;
  }
  if (p.sleep) {
    out << YAML::Key << "sleep" << YAML::Value << YAML::BeginMap << YAML::Key << "idle_threshold_s" << YAML::Value
        << p.sleep->idle_threshold_s << YAML::Key << "probe_resets_idle" << YAML::Value << p.sleep->probe_resets_idle
        << YAML::EndMap;
  }
  out << YAML::Key << "stacking" << YAML::Value << std::string(to_string(p.stacking));
  out << YAML::Key << "read_stacking" << YAML::Value << std::string(to_string(p.read_stacking));
  if (p.transient_duration_s > 0) out << YAML::Key << "transient_duration_s" << YAML::Value << p.transient_duration_s;
  if (p.battery) {
    out << YAML::Key << "battery" << YAML::Value << YAML::BeginMap << YAML::Key << "idle_pct_per_h" << YAML::Value
        << p.battery->idle_pct_per_h << YAML::Key << "attack_pct_per_h" << YAML::Value << p.battery->attack_pct_per_h
        << YAML::EndMap;
  }
  if (p.ack_noise) {
    out << YAML::Key << "ack_noise" << YAML::Value;
    emit_distribution(out, *p.ack_noise);
  }
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

}  // namespace ackscope
