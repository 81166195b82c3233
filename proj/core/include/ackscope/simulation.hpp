#pragma once

// Scenario model and the deterministic event loop.

#include <cstdint>
#include <functional>
#include <map>
#include <nlohmann/json.hpp>
#include <optional>
#include <queue>
#include <string>
#include <vector>

#include "ackscope/device.hpp"
#include "ackscope/inference.hpp"
#include "ackscope/mitigation.hpp"
#include "ackscope/netmodel.hpp"
#include "ackscope/prober.hpp"

namespace ackscope {

enum class AttackerType { CreepyCompanion, SpookyStranger };

template <>
struct EnumNames<AttackerType> {
  static constexpr std::array<std::pair<AttackerType, std::string_view>, 2> kNames{{
      {AttackerType::CreepyCompanion, "CreepyCompanion"},
      {AttackerType::SpookyStranger, "SpookyStranger"},
  }};
};

struct AttackerConfig {
  AttackerType type = AttackerType::SpookyStranger;
  AccountId account{"attacker"};
  AccessLink link = AccessLink::attacker_default();
  // Messages already exchanged with the victim.
  int prior_messages = 0;
  // Age of the referenced message at time 0 (edits and deletes).
  Millis reference_age = 0;
  std::vector<ProbeSchedule> schedules;
  // Defaults to the messenger's sender-path limiter.
  std::optional<SenderRateLimiter> limiter;
  // Lets schedules use probes that notify the victim.
  bool allow_visible = false;
};

struct DeviceConfig {
  DeviceIndex index = 0;
  PlatformProfile profile;
  LinkTech link = LinkTech::WiFi;
  ActivityState initial = ActivityState::ScreenOn;
  std::vector<ScriptEntry> script;
  SimTime registered_at = 0;
  std::optional<SimTime> removed_at;
  double battery_pct = 100.0;
};

struct VictimConfig {
  AccountId account{"victim"};
  bool attacker_in_contacts = false;
  bool read_receipts = false;
  std::vector<DeviceConfig> devices;
};

struct Scenario {
  int version = 1;
  std::string name;
  std::uint64_t seed = 1;
  MessengerPolicy policy = MessengerPolicy::whatsapp_like();
  Millis epoch_of_day = 0;
  SimTime end_at = kHour;
  ServerTopology topology = ServerTopology::whatsapp_default();
  // Per-technology link parameters for victim devices (presets otherwise).
  std::map<LinkTech, AccessLink> link_presets;
  AttackerConfig attacker;
  VictimConfig victim;
  MitigationConfig mitigations;

  bool has_conversation() const { return attacker.type == AttackerType::CreepyCompanion; }
  bool attacker_is_stranger() const { return !has_conversation() && !victim.attacker_in_contacts; }
  AccessLink link_for(LinkTech tech) const;
  // Throws ValidationError for broken invariants (attacker type vs.
  // conversation, non-stealthy probes without allow_visible, scripts, ...).
  void validate() const;
  // The pieces of validate(), so callers can attribute errors.
  void validate_header() const;
  void validate_device(std::size_t i) const;
  void validate_schedule(std::size_t i) const;
};

// Append-only record stream ordered by (t_ms, insertion sequence).
struct LogRecord {
  SimTime t_ms = 0;
  std::uint64_t seq = 0;
  std::string actor;
  std::string kind;
  nlohmann::json payload;
};

class EventLog {
 public:
  void append(SimTime t, std::string actor, std::string kind, nlohmann::json payload = nlohmann::json::object());
  const std::vector<LogRecord>& records() const { return records_; }
  // Sorts by time; ties keep insertion order.
  void order();
  std::size_t count(std::string_view kind) const;

 private:
  std::vector<LogRecord> records_;
};

struct DeviceTruth {
  DeviceIndex index = 0;
  std::string profile;
  PlatformKind os = PlatformKind::Android;
  SimTime registered_at = 0;
  std::optional<SimTime> removed_at;
  std::vector<StateChange> history;
  double battery_start_pct = 100.0;
  double battery_end_pct = 100.0;
  std::int64_t rx_bytes = 0;
  std::int64_t device_acks_sent = 0;

  // Scripted state in force at `t` (Offline when the link is down).
  ActivityState scripted_at(SimTime t) const;
  bool online_at(SimTime t) const;
};

struct RunResult {
  std::vector<RttSample> samples;
  std::vector<ReceiptEvent> receipts;
  std::vector<DirectorySnapshot> directory;
  std::vector<DeviceTruth> truth;
  EventLog log;
  std::int64_t probes_sent = 0;
  std::int64_t probes_rejected = 0;
  std::int64_t ui_notifications = 0;
  SimTime end_at = 0;

  std::size_t device_ack_events() const;
  const DeviceTruth& device(DeviceIndex index) const;
};

// Runs the scenario to completion. Deterministic for a given scenario.
RunResult run_scenario(const Scenario& scenario);

// Writes attacker/, truth/ and summary.json below `dir`.
void write_run(const RunResult& result, const Scenario& scenario, const std::string& dir);

nlohmann::json run_summary(const RunResult& result, const Scenario& scenario);

}  // namespace ackscope
