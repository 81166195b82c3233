#include "ackscope/exhaustion.hpp"

#include <algorithm>
#include <cmath>

#include "ackscope/errors.hpp"
#include "ackscope/simulation.hpp"

namespace ackscope {

TrafficEstimate predict_traffic(const ExhaustionPlan& plan) {
  const auto policy = MessengerPolicy::preset(plan.policy);
  if (!(plan.rate_per_s >= 0)) throw InvalidInput("rate must be >= 0");
  if (plan.duration_s < 0) throw InvalidInput("duration must be >= 0");
  if (plan.payload_bytes < 0) throw InvalidInput("payload must be >= 0");
  if (plan.kind == ProbeKind::Delete && plan.payload_bytes > 0) throw InvalidInput("Delete carries no payload");
  if (plan.payload_bytes > policy.payload_limit(plan.kind)) {
    throw InvalidInput(std::string(to_string(plan.kind)) + " payload above the server limit of " +
                       std::to_string(policy.payload_limit(plan.kind)) + " bytes");
  }
  const auto limiter = plan.limiter.value_or(SenderRateLimiter::preset(plan.policy));
  const std::int64_t per_msg = plan.payload_bytes + kEnvelopeBytes;
  TrafficEstimate e;
  if (plan.rate_per_s == 0) return e;
  e.rate_per_s = limiter.capped_rate(plan.rate_per_s, per_msg);
  e.bytes_per_s = e.rate_per_s * static_cast<double>(per_msg);
  e.mb_per_h = e.bytes_per_s * 3600.0 / 1e6;
  return e;
}

ExhaustionResult run_exhaustion(const ExhaustionPlan& plan, const PlatformProfile& target, std::uint64_t seed) {
  ExhaustionResult r;
  r.predicted = predict_traffic(plan);
  if (plan.duration_s == 0 || plan.rate_per_s == 0) return r;

  Scenario sc;
  sc.name = "exhaustion";
  sc.seed = seed;
  sc.policy = MessengerPolicy::preset(plan.policy);
  sc.topology = ServerTopology::whatsapp_default();
  sc.attacker.type = AttackerType::SpookyStranger;
  sc.attacker.limiter = plan.limiter;
  sc.mitigations = plan.mitigations;
  ProbeSchedule s;
  s.kind = plan.kind;
  s.payload_bytes = plan.payload_bytes;
  s.interval_ms = std::max<Millis>(1, std::llround(1000.0 / plan.rate_per_s));
  s.duration_s = plan.duration_s;
  sc.attacker.schedules.push_back(s);
  DeviceConfig d;
  d.index = sc.policy.main_device_index;
  d.profile = target;
  d.initial = target.has_state(ActivityState::ScreenOff) ? ActivityState::ScreenOff : target.observable_states().front();
  sc.victim.devices.push_back(d);
  sc.end_at = static_cast<SimTime>(std::llround(plan.duration_s * 1000.0));

  const RunResult run = run_scenario(sc);
  const DeviceTruth& dev = run.truth.front();
  r.probes_sent = run.probes_sent;
  r.rx_bytes = dev.rx_bytes;
  r.observed_mb_per_h = static_cast<double>(r.rx_bytes) / 1e6 / (plan.duration_s / 3600.0);
  r.battery_delta_pct = dev.battery_end_pct - dev.battery_start_pct;
  r.ui_notifications = run.ui_notifications;
  return r;
}

}  // namespace ackscope
