#pragma once

// Countermeasures as transforms of the messenger policy and device profiles.

#include <optional>
#include <vector>

#include "ackscope/device.hpp"
#include "ackscope/inference.hpp"
#include "ackscope/prober.hpp"

namespace ackscope {

struct MitigationConfig {
  // No receipts for senders that are neither contacts nor in a conversation.
  bool restrict_to_contacts = false;
  // Added to every device-ack departure.
  std::optional<LatencyDistribution> receipt_delay_noise;
  // Drop invalid-reference and out-of-window probes without a receipt.
  bool strict_validation = false;
  // Replaces the sender-path limiter.
  std::optional<SenderRateLimiter> rate_limit;
  // Messages per minute from one sender that trigger a warning and a block.
  std::optional<int> receiver_flood_threshold_per_min;
  // One receipt per message, issued after the devices synchronized.
  bool synchronized_receipts = false;
  // Same stacking and ordering on every platform.
  std::optional<StackingPolicy> harmonized_stacking;

  bool any() const;
  void validate() const;
};

MessengerPolicy mitigate_policy(MessengerPolicy policy, const MitigationConfig& config);
PlatformProfile mitigate_profile(PlatformProfile profile, const MitigationConfig& config);
// Ordering table an attacker faces under the config.
std::vector<OrderingRow> mitigate_ordering_table(const MitigationConfig& config);

struct MitigatedSetup {
  MessengerPolicy policy;
  std::vector<PlatformProfile> profiles;
  std::vector<OrderingRow> ordering_table;
};

// The all-off config returns its inputs unchanged.
MitigatedSetup apply_mitigations(const MessengerPolicy& policy, const std::vector<PlatformProfile>& profiles,
                                 const MitigationConfig& config);

}  // namespace ackscope
