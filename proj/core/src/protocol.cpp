#include "ackscope/protocol.hpp"

#include <algorithm>
#include <cstdio>

#include "ackscope/errors.hpp"

namespace ackscope {
namespace {

constexpr std::int64_t kKB = 1000;

std::set<ProbeKind> all_kinds() {
  return {ProbeKind::TextMessage, ProbeKind::Reaction, ProbeKind::SelfReaction, ProbeKind::RemoveReaction,
          ProbeKind::Edit,        ProbeKind::Delete,   ProbeKind::InvalidRefReaction};
}

void set_reaction_limit(MessengerPolicy& p, std::int64_t bytes) {
  for (auto k : {ProbeKind::Reaction, ProbeKind::SelfReaction, ProbeKind::RemoveReaction,
                 ProbeKind::InvalidRefReaction}) {
    p.payload_limits[k] = bytes;
  }
}

}  // namespace

bool is_reaction(ProbeKind kind) {
  return kind == ProbeKind::Reaction || kind == ProbeKind::SelfReaction || kind == ProbeKind::RemoveReaction ||
         kind == ProbeKind::InvalidRefReaction;
}

std::string ProbeId::to_string() const {
  char buf[33];
  std::snprintf(buf, sizeof buf, "%016llx%016llx", static_cast<unsigned long long>(nonce),
                static_cast<unsigned long long>(sequence));
  return buf;
}

ProbeId ProbeId::parse(std::string_view hex) {
  if (hex.size() != 32) throw InvalidInput("probe id must be 32 hex digits");
  auto word = [](std::string_view s) {
    std::uint64_t v = 0;
    for (char c : s) {
      v <<= 4;
      if (c >= '0' && c <= '9') v |= static_cast<std::uint64_t>(c - '0');
      else if (c >= 'a' && c <= 'f') v |= static_cast<std::uint64_t>(c - 'a' + 10);
      else if (c >= 'A' && c <= 'F') v |= static_cast<std::uint64_t>(c - 'A' + 10);
      else throw InvalidInput("probe id must be 32 hex digits");
    }
    return v;
  };
  return ProbeId{word(hex.substr(0, 16)), word(hex.substr(16))};
}

MessengerPolicy MessengerPolicy::whatsapp_like() {
  MessengerPolicy p;
  p.name = MessengerKind::WhatsAppLike;
  p.supported_kinds = all_kinds();
  p.receipt_actions = all_kinds();
  p.main_device_index = 0;
  p.edit_window = {15 * kMinute, 20 * kMinute};
  p.delete_window = {48 * kHour, 60 * kHour};
  p.payload_limits[ProbeKind::TextMessage] = 65 * kKB;
  p.payload_limits[ProbeKind::Edit] = 65 * kKB;
  set_reaction_limit(p, 1000 * kKB);
  p.payload_limits[ProbeKind::Delete] = 0;
  p.reaction_handling_limit_bytes = 30;
  p.edits_notify_ios = true;
  return p;
}

MessengerPolicy MessengerPolicy::signal_like() {
  MessengerPolicy p;
  p.name = MessengerKind::SignalLike;
  p.supported_kinds = all_kinds();
  p.receipt_actions = all_kinds();
  p.main_device_index = 1;
  p.edit_window = {24 * kHour, 48 * kHour};
  p.delete_window = {24 * kHour, 48 * kHour};
  p.max_edits = 10;
  p.payload_limits[ProbeKind::TextMessage] = 194 * kKB;
  p.payload_limits[ProbeKind::Edit] = 194 * kKB;
  set_reaction_limit(p, 194 * kKB);
  p.payload_limits[ProbeKind::Delete] = 0;
  return p;
}

MessengerPolicy MessengerPolicy::threema_like() {
  MessengerPolicy p;
  p.name = MessengerKind::ThreemaLike;
  // Reactions exist but only towards someone else's message.
  p.supported_kinds = {ProbeKind::TextMessage, ProbeKind::Reaction};
  p.receipt_actions = {ProbeKind::TextMessage};
  p.self_reaction_allowed = false;
  p.invalid_ref_acked = false;
  p.per_device_receipts = false;
  p.main_device_index = 0;
  // No measured server limits; mirror WhatsAppLike text size.
  p.payload_limits[ProbeKind::TextMessage] = 65 * kKB;
  set_reaction_limit(p, 65 * kKB);
  p.payload_limits[ProbeKind::Edit] = 65 * kKB;
  p.payload_limits[ProbeKind::Delete] = 0;
  return p;
}

MessengerPolicy MessengerPolicy::preset(MessengerKind kind) {
  switch (kind) {
    case MessengerKind::WhatsAppLike:
      return whatsapp_like();
    case MessengerKind::SignalLike:
      return signal_like();
    case MessengerKind::ThreemaLike:
      return threema_like();
  }
  return whatsapp_like();
}

std::int64_t MessengerPolicy::payload_limit(ProbeKind kind) const {
  auto it = payload_limits.find(kind);
  return it == payload_limits.end() ? 0 : it->second;
}

void MessengerPolicy::validate() const {
  auto fail = [](const std::string& m) { throw ValidationError("messenger policy: " + m); };
  if (edit_window.enforced < edit_window.announced) fail("edit window enforced < announced");
  if (delete_window.enforced < delete_window.announced) fail("delete window enforced < announced");
  if (main_device_index != 0 && main_device_index != 1) fail("main device index must be 0 or 1");
  for (auto k : receipt_actions) {
    if (!supported_kinds.contains(k)) fail("receipt action '" + std::string(to_string(k)) + "' is not supported");
  }
  if (max_edits && *max_edits < 0) fail("max_edits must be >= 0");
}

bool is_stealthy(ProbeKind kind, const ProbeContext& context, const MessengerPolicy& policy) {
  if (!policy.supported_kinds.contains(kind)) {
    throw InvalidInput(std::string(to_string(policy.name)) + " does not offer " + std::string(to_string(kind)) +
                       " probes (no receipt-bearing variant)");
  }
  switch (kind) {
    case ProbeKind::TextMessage:
      return false;
    case ProbeKind::Reaction:
      if (context.reacts_to_own_message) {
        if (!policy.self_reaction_allowed) {
          throw InvalidInput(std::string(to_string(policy.name)) + " does not allow reactions to own messages");
        }
        return true;
      }
      // Reacting to a message the target wrote notifies the target.
      return false;
    case ProbeKind::SelfReaction:
    case ProbeKind::RemoveReaction:
    case ProbeKind::InvalidRefReaction:
      return true;
    case ProbeKind::Edit:
      return !(policy.edits_notify_ios && context.target_platform == PlatformKind::iOS);
    case ProbeKind::Delete:
      return true;
  }
  return false;
}

ReceiptVerdict evaluate_receipt(const ProbeFacts& facts, const MessengerPolicy& policy) {
  const ProbeKind kind = facts.kind;
  if (facts.payload_bytes < 0 || facts.payload_bytes > policy.payload_limit(kind)) {
    return {ReceiptDecision::RejectedByServer, false};
  }
  if (kind == ProbeKind::Edit && policy.max_edits && facts.prior_edits >= *policy.max_edits) {
    return {ReceiptDecision::RejectedByServer, false};
  }
  if (facts.from_stranger && !policy.receipts_for_strangers) {
    return {ReceiptDecision::SilentlyDropped, false};
  }
  if (!policy.receipt_actions.contains(kind) || !policy.supported_kinds.contains(kind)) {
    return {ReceiptDecision::SilentlyDropped, false};
  }

  const bool ref_valid = facts.ref_valid && kind != ProbeKind::InvalidRefReaction;
  bool expired = false;
  if (facts.ref_age && (kind == ProbeKind::Edit || kind == ProbeKind::Delete)) {
    const ActionWindow& w = kind == ProbeKind::Edit ? policy.edit_window : policy.delete_window;
    expired = *facts.ref_age > w.enforced;
  }

  if (policy.strict_validation && (!ref_valid || expired)) {
    return {ReceiptDecision::SilentlyDropped, false};
  }
  if (!ref_valid && !policy.invalid_ref_acked) {
    return {ReceiptDecision::SilentlyDropped, false};
  }
  if (is_reaction(kind) && policy.reaction_handling_limit_bytes &&
      facts.payload_bytes > *policy.reaction_handling_limit_bytes &&
      (ref_valid || policy.handling_limit_applies_to_invalid_refs)) {
    return {policy.ack_oversized_reactions ? ReceiptDecision::AckedButDiscarded : ReceiptDecision::SilentlyDropped,
            false};
  }
  if (expired || !ref_valid) {
    return {ReceiptDecision::Acked, false};
  }
  return {ReceiptDecision::Acked, true};
}

ReceiptDecision elicits_receipt(ProbeKind kind, bool ref_valid, std::int64_t payload_bytes,
                                const MessengerPolicy& policy) {
  ProbeFacts facts;
  facts.kind = kind;
  facts.ref_valid = ref_valid;
  facts.payload_bytes = payload_bytes;
  return evaluate_receipt(facts, policy).decision;
}

DeviceDirectory::DeviceDirectory(AccountId account, DeviceIndex main_index)
    : account_(std::move(account)), indices_{main_index}, next_index_(main_index + 1) {}

DeviceDirectory DeviceDirectory::from_indices(AccountId account, std::vector<DeviceIndex> indices) {
  if (indices.empty()) throw InvalidInput("device directory must not be empty");
  for (std::size_t i = 1; i < indices.size(); ++i) {
    if (indices[i] <= indices[i - 1]) throw InvalidInput("device indices must be strictly increasing");
  }
  if (indices.front() < 0) throw InvalidInput("device indices must be non-negative");
  DeviceDirectory dir(std::move(account), indices.front());
  dir.indices_ = std::move(indices);
  dir.next_index_ = dir.indices_.back() + 1;
  return dir;
}

bool DeviceDirectory::contains(DeviceIndex index) const {
  return std::binary_search(indices_.begin(), indices_.end(), index);
}

DeviceIndex DeviceDirectory::main_device() const {
  if (indices_.empty()) throw InvalidInput("account '" + account_.value + "' has no registered devices");
  return indices_.front();
}

DeviceIndex DeviceDirectory::add_device() {
  DeviceIndex idx = next_index_++;
  indices_.push_back(idx);
  return idx;
}

void DeviceDirectory::add_device(DeviceIndex index) {
  if (index < next_index_) {
    throw InvalidInput("device index " + std::to_string(index) + " was already issued for this account");
  }
  indices_.push_back(index);
  next_index_ = index + 1;
}

void DeviceDirectory::remove_device(DeviceIndex index) {
  auto it = std::lower_bound(indices_.begin(), indices_.end(), index);
  if (it == indices_.end() || *it != index) {
    throw InvalidInput("device index " + std::to_string(index) + " is not registered");
  }
  indices_.erase(it);
}

void ProbeAction::validate() const {
  if (kind == ProbeKind::InvalidRefReaction && ref_valid) {
    throw InvalidInput("InvalidRefReaction probes must reference an invalid message");
  }
  if (payload_bytes < 0) throw InvalidInput("payload_bytes must be >= 0");
}

std::vector<DeliveryTask> fanout(const ProbeAction& probe, const DeviceDirectory& directory,
                                 const MessengerPolicy& policy) {
  if (directory.empty()) {
    throw InvalidInput("account '" + directory.account().value + "' is not registered on any device");
  }
  std::vector<DeliveryTask> tasks;
  if (policy.per_device_receipts) {
    tasks.reserve(directory.indices().size());
    for (DeviceIndex d : directory.indices()) tasks.push_back({probe.id, {d}});
  } else {
    tasks.push_back({probe.id, directory.indices()});
  }
  return tasks;
}

DeviceDirectory& AccountRegistry::register_account(const AccountId& account, const MessengerPolicy& policy) {
  auto [it, inserted] = directories_.try_emplace(account, account, policy.main_device_index);
  if (!inserted) throw InvalidInput("account '" + account.value + "' already registered");
  return it->second;
}

void AccountRegistry::put(DeviceDirectory directory) {
  AccountId id = directory.account();
  directories_.insert_or_assign(std::move(id), std::move(directory));
}

bool AccountRegistry::contains(const AccountId& account) const { return directories_.contains(account); }

DeviceDirectory& AccountRegistry::directory(const AccountId& account) {
  auto it = directories_.find(account);
  if (it == directories_.end()) throw InvalidInput("unknown account '" + account.value + "'");
  return it->second;
}

const DeviceDirectory& AccountRegistry::directory(const AccountId& account) const {
  auto it = directories_.find(account);
  if (it == directories_.end()) throw InvalidInput("unknown account '" + account.value + "'");
  return it->second;
}

}  // namespace ackscope
