#include "ackscope/mitigation.hpp"

#include "ackscope/errors.hpp"

namespace ackscope {

bool MitigationConfig::any() const {
  return restrict_to_contacts || receipt_delay_noise || strict_validation || rate_limit ||
         receiver_flood_threshold_per_min || synchronized_receipts || harmonized_stacking;
}

void MitigationConfig::validate() const {
  if (rate_limit) rate_limit->validate();
  if (receiver_flood_threshold_per_min && *receiver_flood_threshold_per_min < 1) {
    throw ValidationError("mitigations: receiver_flood_threshold_per_min must be >= 1");
  }
}

MessengerPolicy mitigate_policy(MessengerPolicy policy, const MitigationConfig& config) {
  if (config.restrict_to_contacts) policy.receipts_for_strangers = false;
  if (config.strict_validation) policy.strict_validation = true;
  if (config.synchronized_receipts) policy.per_device_receipts = false;
  if (config.receiver_flood_threshold_per_min) policy.flood_threshold_per_min = config.receiver_flood_threshold_per_min;
  return policy;
}

PlatformProfile mitigate_profile(PlatformProfile profile, const MitigationConfig& config) {
  if (config.receipt_delay_noise) profile.ack_noise = config.receipt_delay_noise;
  if (config.harmonized_stacking) profile.stacking = profile.read_stacking = *config.harmonized_stacking;
  return profile;
}

std::vector<OrderingRow> mitigate_ordering_table(const MitigationConfig& config) {
  if (config.harmonized_stacking) return harmonized_table(*config.harmonized_stacking);
  return receipt_ordering_table();
}

MitigatedSetup apply_mitigations(const MessengerPolicy& policy, const std::vector<PlatformProfile>& profiles,
                                 const MitigationConfig& config) {
  MitigatedSetup out;
  out.policy = mitigate_policy(policy, config);
  for (const auto& p : profiles) out.profiles.push_back(mitigate_profile(p, config));
  out.ordering_table = mitigate_ordering_table(config);
  return out;
}

}  // namespace ackscope
