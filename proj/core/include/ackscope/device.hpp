#pragma once

// Victim-side devices: activity-state machines, platform profiles, offline
// queues and receipt stacking.

#include <cstdint>
#include <deque>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ackscope/netmodel.hpp"
#include "ackscope/protocol.hpp"
#include "ackscope/rng.hpp"

namespace ackscope {

enum class ActivityState {
  AppForeground,
  AppBackgroundTransient,
  ScreenOn,
  ScreenOff,
  DeepSleep,
  Offline,
  TabActive,
  TabBackground,
};

template <>
struct EnumNames<ActivityState> {
  static constexpr std::array<std::pair<ActivityState, std::string_view>, 8> kNames{{
      {ActivityState::AppForeground, "AppForeground"},
      {ActivityState::AppBackgroundTransient, "AppBackgroundTransient"},
      {ActivityState::ScreenOn, "ScreenOn"},
      {ActivityState::ScreenOff, "ScreenOff"},
      {ActivityState::DeepSleep, "DeepSleep"},
      {ActivityState::Offline, "Offline"},
      {ActivityState::TabActive, "TabActive"},
      {ActivityState::TabBackground, "TabBackground"},
  }};
};

enum class StackingPolicy { Separate, Stacked, StackedReversed, StackedRandom };

template <>
struct EnumNames<StackingPolicy> {
  static constexpr std::array<std::pair<StackingPolicy, std::string_view>, 4> kNames{{
      {StackingPolicy::Separate, "Separate"},
      {StackingPolicy::Stacked, "Stacked"},
      {StackingPolicy::StackedReversed, "StackedReversed"},
      {StackingPolicy::StackedRandom, "StackedRandom"},
  }};
};

enum class DeviceClass { Phone, Browser, Desktop };

template <>
struct EnumNames<DeviceClass> {
  static constexpr std::array<std::pair<DeviceClass, std::string_view>, 3> kNames{{
      {DeviceClass::Phone, "Phone"},
      {DeviceClass::Browser, "Browser"},
      {DeviceClass::Desktop, "Desktop"},
  }};
};

// Bytes on the wire per probe on top of its payload.
inline constexpr std::int64_t kEnvelopeBytes = 500;
// Byte rate at which the full-attack battery drain was calibrated.
inline constexpr double kReferenceAttackBytesPerSecond = 3.7e6;

struct SleepDynamics {
  double idle_threshold_s = 0.0;
  bool probe_resets_idle = true;
};

struct BatteryRates {
  double idle_pct_per_h = 0.9;
  double attack_pct_per_h = 0.0;
};

struct PlatformProfile {
  std::string name;
  std::string app;  // "WhatsApp", "Signal", ...
  PlatformKind os = PlatformKind::Android;
  DeviceClass device_class = DeviceClass::Phone;
  // Processing delay added at the device before the ack departs.
  std::map<ActivityState, LatencyDistribution> delay_by_state;
  std::optional<SleepDynamics> sleep;
  StackingPolicy stacking = StackingPolicy::Separate;
  StackingPolicy read_stacking = StackingPolicy::Stacked;
  double transient_duration_s = 0.0;
  std::optional<BatteryRates> battery;
  // Delays observed when the sender is a stranger, where they differ.
  std::map<ActivityState, LatencyDistribution> stranger_delay_override;
  // Added to every device-ack departure (receipt timing countermeasure).
  std::optional<LatencyDistribution> ack_noise;

  bool has_state(ActivityState s) const { return delay_by_state.contains(s); }
  // Throws InvalidInput if the profile has no entry for the state.
  const LatencyDistribution& processing_delay(ActivityState s, bool from_stranger) const;
  // The states a user can be in while the device is reachable.
  std::vector<ActivityState> observable_states() const;
  // Throws ValidationError when the delay ordering invariants do not hold.
  void validate() const;
};

class ProfileCatalog {
 public:
  ProfileCatalog() = default;
  ProfileCatalog(int version, std::vector<PlatformProfile> profiles);

  int version() const { return version_; }
  const std::vector<PlatformProfile>& profiles() const { return profiles_; }
  const PlatformProfile* try_find(std::string_view name) const;
  // Throws InvalidInput for unknown names.
  const PlatformProfile& find(std::string_view name) const;
  void upsert(PlatformProfile profile);

  // The catalog shipped with the library (data/profiles.yaml).
  static const ProfileCatalog& builtin();

 private:
  int version_ = 0;
  std::vector<PlatformProfile> profiles_;
};

struct ScriptEntry {
  SimTime at = 0;
  std::optional<ActivityState> state;
  std::optional<LinkTech> link;
  bool open_conversation = false;
};

struct IncomingProbe {
  ProbeAction probe;
  bool acknowledge = true;
  bool from_stranger = false;
  // Displayed to the user (eligible for a read receipt).
  bool visible = false;
};

struct ScheduledReceipt {
  ReceiptKind kind = ReceiptKind::DeviceAck;
  std::vector<ProbeId> probe_ids;
  SimTime depart_at = 0;
};

// Ground-truth record; `scripted` is what the script asked for, `state` what
// the device actually did (transient and sleep states included).
struct StateChange {
  SimTime at = 0;
  ActivityState state = ActivityState::ScreenOn;
  ActivityState scripted = ActivityState::ScreenOn;
  LinkTech link = LinkTech::WiFi;
};

struct AdvanceResult {
  ActivityState state = ActivityState::ScreenOn;
  bool came_online = false;
  bool went_offline = false;
  std::vector<SimTime> conversation_opened;
};

class DeviceSession {
 public:
  // Throws ValidationError for out-of-order scripts or states the profile
  // does not model.
  DeviceSession(DeviceIndex index, PlatformProfile profile, AccessLink link, ActivityState initial,
                std::vector<ScriptEntry> script, SimTime start = 0);

  DeviceIndex index() const { return index_; }
  const PlatformProfile& profile() const { return profile_; }
  const AccessLink& link() const { return link_; }
  ActivityState state() const { return state_; }
  ActivityState scripted_state() const { return scripted_; }
  double battery_pct() const { return battery_pct_; }
  std::int64_t rx_bytes() const { return rx_bytes_; }
  const std::deque<IncomingProbe>& offline_queue() const { return offline_queue_; }
  const std::vector<ScriptEntry>& script() const { return script_; }
  const std::vector<StateChange>& history() const { return history_; }
  bool online() const { return state_ != ActivityState::Offline && link_.reachable(); }

  // Link parameters used when the script switches technology.
  void set_link_presets(std::map<LinkTech, AccessLink> presets) { link_presets_ = std::move(presets); }

  // Applies due script entries and automatic transitions in time order.
  AdvanceResult advance(SimTime now);

  StateChange snapshot_at(SimTime t) const;

  // Low-level mutators used by the operations below.
  void enqueue(IncomingProbe probe) { offline_queue_.push_back(std::move(probe)); }
  std::deque<IncomingProbe> take_queue();
  void add_rx(std::int64_t bytes) { rx_bytes_ += bytes; }
  void set_battery(double pct);
  // Probe activity resets the idle timer (and wakes from deep sleep) when
  // the platform does so.
  void note_probe(SimTime now);

 private:
  std::optional<SimTime> next_auto_transition() const;
  void enter(ActivityState s, ActivityState scripted, SimTime t);
  void record(SimTime t);

  DeviceIndex index_;
  PlatformProfile profile_;
  AccessLink link_;
  std::map<LinkTech, AccessLink> link_presets_;
  ActivityState state_;
  ActivityState scripted_;
  SimTime since_;
  SimTime idle_since_;
  std::vector<ScriptEntry> script_;
  std::size_t next_script_ = 0;
  std::deque<IncomingProbe> offline_queue_;
  double battery_pct_ = 100.0;
  std::int64_t rx_bytes_ = 0;
  std::vector<StateChange> history_;
};

// Delivers one probe. Offline: the probe is queued and nothing is emitted.
// Online: rx accounting, idle handling and (if acknowledged) one DeviceAck
// after the state-dependent processing delay. `noise_rng` feeds the ack
// noise countermeasure; defaults to `rng`.
std::vector<ScheduledReceipt> process_incoming(DeviceSession& session, const IncomingProbe& probe, SimTime now,
                                               Rng& rng, Rng* noise_rng = nullptr);

// Drains the offline queue after reconnection, stacking acks per the
// profile's policy.
std::vector<ScheduledReceipt> flush_offline_queue(DeviceSession& session, SimTime now, Rng& rng,
                                                  Rng* noise_rng = nullptr);

// Read receipts for the given probes, stacked per the profile's read policy.
std::vector<ScheduledReceipt> read_receipts(const DeviceSession& session, std::vector<ProbeId> probes,
                                            SimTime now, Rng& rng);

ActivityState advance_state(DeviceSession& session, SimTime now);

// Battery drain in %/h for a sustained byte rate; linear between the idle
// and full-attack calibration points, clamped at the attack rate.
double battery_drain_rate(double bytes_per_second, const BatteryRates& rates);

// Applies drain for `elapsed_s` seconds during which `bytes_processed` bytes
// arrived. Returns the new battery level.
double drain_battery(DeviceSession& session, std::int64_t bytes_processed, double elapsed_s,
                     const BatteryRates& rates);

// Orders ids according to a stacking policy (Separate keeps arrival order).
std::vector<ProbeId> stack_order(std::vector<ProbeId> ids, StackingPolicy policy, Rng& rng);

}  // namespace ackscope
