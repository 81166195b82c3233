#pragma once

// Resource exhaustion: traffic and battery cost of a probe flood.

#include <cstdint>
#include <optional>

#include "ackscope/device.hpp"
#include "ackscope/mitigation.hpp"
#include "ackscope/prober.hpp"
#include "ackscope/protocol.hpp"

namespace ackscope {

struct ExhaustionPlan {
  MessengerKind policy = MessengerKind::WhatsAppLike;
  ProbeKind kind = ProbeKind::InvalidRefReaction;
  std::int64_t payload_bytes = 1'000'000;
  double rate_per_s = 3.7;
  double duration_s = 3600.0;
  // Defaults to the messenger's sender-path limiter.
  std::optional<SenderRateLimiter> limiter;
  // Countermeasures active on the victim's side during the simulated run.
  MitigationConfig mitigations;
};

struct TrafficEstimate {
  double rate_per_s = 0.0;        // after the sender limiter
  double bytes_per_s = 0.0;       // payload plus envelope
  double mb_per_h = 0.0;          // 1 MB = 10^6 bytes
};

// Closed-form victim download. Throws InvalidInput for a Delete with payload,
// payloads over the server limit and negative rates.
TrafficEstimate predict_traffic(const ExhaustionPlan& plan);

struct ExhaustionResult {
  TrafficEstimate predicted;
  std::int64_t probes_sent = 0;
  std::int64_t rx_bytes = 0;
  double observed_mb_per_h = 0.0;
  double battery_delta_pct = 0.0;
  std::int64_t ui_notifications = 0;
};

// Simulates the flood against one idle phone (screen off, WiFi).
ExhaustionResult run_exhaustion(const ExhaustionPlan& plan, const PlatformProfile& target, std::uint64_t seed = 1);

}  // namespace ackscope
