#include "ackscope/device.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ackscope/errors.hpp"

namespace ackscope {
namespace {

Millis to_millis(double ms) { return static_cast<Millis>(std::llround(ms)); }

}  // namespace

const LatencyDistribution& PlatformProfile::processing_delay(ActivityState s, bool from_stranger) const {
  if (from_stranger) {
    if (auto it = stranger_delay_override.find(s); it != stranger_delay_override.end()) return it->second;
  }
  auto it = delay_by_state.find(s);
  if (it == delay_by_state.end()) {
    throw InvalidInput("profile '" + name + "' has no delay for state " + std::string(to_string(s)));
  }
  return it->second;
}

std::vector<ActivityState> PlatformProfile::observable_states() const {
  std::vector<ActivityState> out;
  for (const auto& [state, dist] : delay_by_state) {
    if (state != ActivityState::Offline) out.push_back(state);
  }
  return out;
}

void PlatformProfile::validate() const {
  auto fail = [this](const std::string& m) { throw ValidationError("profile '" + name + "': " + m); };
  if (name.empty()) throw ValidationError("profile without a name");
  if (delay_by_state.empty()) fail("no delay distributions");
  if (transient_duration_s < 0) fail("transient_duration_s must be >= 0");
  if (sleep && sleep->idle_threshold_s <= 0) fail("idle_threshold_s must be > 0");
  auto mean = [this](ActivityState s) { return delay_by_state.at(s).mean(); };

  if (device_class == DeviceClass::Phone) {
    for (auto s : {ActivityState::AppForeground, ActivityState::ScreenOn, ActivityState::ScreenOff}) {
      if (!has_state(s)) fail("phone profiles need " + std::string(to_string(s)));
    }
    if (!(mean(ActivityState::AppForeground) < mean(ActivityState::ScreenOn))) {
      fail("AppForeground delay must be below ScreenOn");
    }
    if (!(mean(ActivityState::ScreenOn) < mean(ActivityState::ScreenOff))) {
      fail("ScreenOn delay must be below ScreenOff");
    }
    if (has_state(ActivityState::DeepSleep) && mean(ActivityState::DeepSleep) < mean(ActivityState::ScreenOff)) {
      fail("DeepSleep delay must not be below ScreenOff");
    }
  } else {
    for (auto s : {ActivityState::TabActive, ActivityState::TabBackground}) {
      if (!has_state(s)) fail("companion profiles need " + std::string(to_string(s)));
    }
    if (mean(ActivityState::TabActive) > mean(ActivityState::TabBackground)) {
      fail("TabActive delay must not exceed TabBackground");
    }
  }
}

ProfileCatalog::ProfileCatalog(int version, std::vector<PlatformProfile> profiles)
    : version_(version), profiles_(std::move(profiles)) {
  for (const auto& p : profiles_) p.validate();
}

const PlatformProfile* ProfileCatalog::try_find(std::string_view name) const {
  for (const auto& p : profiles_) {
    if (p.name == name) return &p;
  }
  return nullptr;
}

const PlatformProfile& ProfileCatalog::find(std::string_view name) const {
  if (const auto* p = try_find(name)) return *p;
  throw InvalidInput("unknown platform profile '" + std::string(name) + "'");
}

void ProfileCatalog::upsert(PlatformProfile profile) {
  profile.validate();
  for (auto& p : profiles_) {
    if (p.name == profile.name) {
      p = std::move(profile);
      return;
    }
  }
  profiles_.push_back(std::move(profile));
}

DeviceSession::DeviceSession(DeviceIndex index, PlatformProfile profile, AccessLink link, ActivityState initial,
                             std::vector<ScriptEntry> script, SimTime start)
    : index_(index),
      profile_(std::move(profile)),
      link_(std::move(link)),
      state_(initial),
      scripted_(initial),
      since_(start),
      idle_since_(start),
      script_(std::move(script)) {
  const std::string where = "device " + std::to_string(index_) + ": ";
  for (std::size_t i = 1; i < script_.size(); ++i) {
    if (script_[i].at < script_[i - 1].at) {
      throw ValidationError(where + "script entries out of chronological order at entry " + std::to_string(i));
    }
  }
  auto check_state = [&](ActivityState s) {
    if (s != ActivityState::Offline && !profile_.has_state(s)) {
      throw ValidationError(where + "profile '" + profile_.name + "' does not model state " +
                            std::string(to_string(s)));
    }
  };
  check_state(initial);
  for (const auto& e : script_) {
    if (e.state) check_state(*e.state);
  }
  record(start);
}

std::optional<SimTime> DeviceSession::next_auto_transition() const {
  if (state_ == ActivityState::AppBackgroundTransient) {
    return since_ + static_cast<Millis>(std::llround(profile_.transient_duration_s * kSecond));
  }
  if (state_ == ActivityState::ScreenOff && profile_.sleep && profile_.has_state(ActivityState::DeepSleep)) {
    return idle_since_ + static_cast<Millis>(std::llround(profile_.sleep->idle_threshold_s * kSecond));
  }
  return std::nullopt;
}

void DeviceSession::enter(ActivityState s, ActivityState scripted, SimTime t) {
  if (s == state_ && scripted == scripted_) return;
  state_ = s;
  scripted_ = scripted;
  since_ = t;
  if (s == ActivityState::ScreenOff) idle_since_ = t;
  record(t);
}

void DeviceSession::record(SimTime t) {
  StateChange c{t, state_, scripted_, link_.tech};
  if (!history_.empty() && history_.back().at == t) {
    history_.back() = c;
  } else {
    history_.push_back(c);
  }
}

AdvanceResult DeviceSession::advance(SimTime now) {
  AdvanceResult result;
  const bool was_online = online();
  constexpr SimTime kNever = std::numeric_limits<SimTime>::max();
  for (;;) {
    SimTime t_script = next_script_ < script_.size() && script_[next_script_].at <= now ? script_[next_script_].at
                                                                                         : kNever;
    auto auto_at = next_auto_transition();
    SimTime t_auto = auto_at && *auto_at <= now ? *auto_at : kNever;
    if (t_script == kNever && t_auto == kNever) break;

    if (t_auto < t_script) {
      if (state_ == ActivityState::AppBackgroundTransient) {
        enter(ActivityState::ScreenOn, ActivityState::ScreenOn, t_auto);
      } else {
        enter(ActivityState::DeepSleep, scripted_, t_auto);
      }
      continue;
    }

    const ScriptEntry& e = script_[next_script_++];
    if (e.link && *e.link != link_.tech) {
      auto it = link_presets_.find(*e.link);
      link_ = it != link_presets_.end() ? it->second : AccessLink::preset(*e.link);
      record(e.at);
    }
    if (e.state) {
      ActivityState target = *e.state;
      if (target == ActivityState::ScreenOn && state_ == ActivityState::AppForeground &&
          profile_.transient_duration_s > 0 && profile_.has_state(ActivityState::AppBackgroundTransient)) {
        // Leaving the app keeps it on hold before it is moved to standby.
        enter(ActivityState::AppBackgroundTransient, ActivityState::ScreenOn, e.at);
      } else {
        enter(target, target, e.at);
      }
    }
    if (e.open_conversation) result.conversation_opened.push_back(e.at);
  }
  result.state = state_;
  result.came_online = !was_online && online();
  result.went_offline = was_online && !online();
  return result;
}

StateChange DeviceSession::snapshot_at(SimTime t) const {
  auto it = std::upper_bound(history_.begin(), history_.end(), t,
                             [](SimTime v, const StateChange& c) { return v < c.at; });
  if (it == history_.begin()) return history_.front();
  return *std::prev(it);
}

std::deque<IncomingProbe> DeviceSession::take_queue() {
  std::deque<IncomingProbe> q;
  q.swap(offline_queue_);
  return q;
}

void DeviceSession::set_battery(double pct) {
  // Battery never recovers during a scenario.
  battery_pct_ = std::clamp(std::min(pct, battery_pct_), 0.0, 100.0);
}

void DeviceSession::note_probe(SimTime now) {
  if (!profile_.sleep || !profile_.sleep->probe_resets_idle) return;
  if (state_ == ActivityState::ScreenOff) {
    idle_since_ = now;
  } else if (state_ == ActivityState::DeepSleep) {
    enter(ActivityState::ScreenOff, scripted_, now);
  }
}

std::vector<ScheduledReceipt> process_incoming(DeviceSession& session, const IncomingProbe& probe, SimTime now,
                                               Rng& rng, Rng* noise_rng) {
  if (!session.online()) {
    session.enqueue(probe);
    return {};
  }
  session.add_rx(probe.probe.payload_bytes + kEnvelopeBytes);
  // Delay reflects the state the probe found the device in.
  const ActivityState found = session.state();
  session.note_probe(now);
  if (!probe.acknowledge) return {};

  double delay = session.profile().processing_delay(found, probe.from_stranger).sample(rng);
  if (const auto& noise = session.profile().ack_noise) delay += noise->sample(noise_rng ? *noise_rng : rng);
  return {ScheduledReceipt{ReceiptKind::DeviceAck, {probe.probe.id}, now + to_millis(delay)}};
}

std::vector<ProbeId> stack_order(std::vector<ProbeId> ids, StackingPolicy policy, Rng& rng) {
  switch (policy) {
    case StackingPolicy::Separate:
    case StackingPolicy::Stacked:
      break;
    case StackingPolicy::StackedReversed:
      std::reverse(ids.begin(), ids.end());
      break;
    case StackingPolicy::StackedRandom:
      for (std::size_t i = ids.size(); i > 1; --i) std::swap(ids[i - 1], ids[rng.index(i)]);
      break;
  }
  return ids;
}

namespace {

std::vector<ScheduledReceipt> emit_stacked(ReceiptKind kind, std::vector<ProbeId> ids, StackingPolicy policy,
                                           SimTime depart, Rng& rng) {
  std::vector<ScheduledReceipt> out;
  if (ids.empty()) return out;
  if (policy == StackingPolicy::Separate) {
    for (const auto& id : ids) out.push_back({kind, {id}, depart});
  } else {
    out.push_back({kind, stack_order(std::move(ids), policy, rng), depart});
  }
  return out;
}

}  // namespace

std::vector<ScheduledReceipt> flush_offline_queue(DeviceSession& session, SimTime now, Rng& rng, Rng* noise_rng) {
  auto queue = session.take_queue();
  if (queue.empty()) return {};
  std::vector<ProbeId> acked;
  bool stranger = false;
  for (const auto& p : queue) {
    session.add_rx(p.probe.payload_bytes + kEnvelopeBytes);
    if (p.acknowledge) {
      acked.push_back(p.probe.id);
      stranger = stranger || p.from_stranger;
    }
  }
  const ActivityState found = session.state();
  session.note_probe(now);
  if (acked.empty()) return {};
  double delay = session.profile().processing_delay(found, stranger).sample(rng);
  if (const auto& noise = session.profile().ack_noise) delay += noise->sample(noise_rng ? *noise_rng : rng);
  return emit_stacked(ReceiptKind::DeviceAck, std::move(acked), session.profile().stacking, now + to_millis(delay),
                      rng);
}

std::vector<ScheduledReceipt> read_receipts(const DeviceSession& session, std::vector<ProbeId> probes, SimTime now,
                                            Rng& rng) {
  return emit_stacked(ReceiptKind::ReadAck, std::move(probes), session.profile().read_stacking, now, rng);
}

ActivityState advance_state(DeviceSession& session, SimTime now) { return session.advance(now).state; }

double battery_drain_rate(double bytes_per_second, const BatteryRates& rates) {
  const double share = std::clamp(bytes_per_second / kReferenceAttackBytesPerSecond, 0.0, 1.0);
  const double rate = rates.idle_pct_per_h + (rates.attack_pct_per_h - rates.idle_pct_per_h) * share;
  return std::min(rate, std::max(rates.attack_pct_per_h, rates.idle_pct_per_h));
}

double drain_battery(DeviceSession& session, std::int64_t bytes_processed, double elapsed_s,
                     const BatteryRates& rates) {
  if (elapsed_s <= 0) return session.battery_pct();
  const double rate = battery_drain_rate(static_cast<double>(bytes_processed) / elapsed_s, rates);
  session.set_battery(session.battery_pct() - rate * elapsed_s / 3600.0);
  return session.battery_pct();
}

}  // namespace ackscope
