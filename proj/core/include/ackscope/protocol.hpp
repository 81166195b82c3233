#pragma once

// Messenger protocol rules: accounts, device directories, probe kinds and the
// receipt / notification behavior of each messenger family.

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "ackscope/enum_names.hpp"
#include "ackscope/time.hpp"

namespace ackscope {

enum class MessengerKind { WhatsAppLike, SignalLike, ThreemaLike };

enum class ProbeKind { TextMessage, Reaction, SelfReaction, RemoveReaction, Edit, Delete, InvalidRefReaction };

// Operating system / client family of a receiving device.
enum class PlatformKind { Android, iOS, Web, Windows, macOS, Desktop };

enum class ReceiptKind { ServerAck, DeviceAck, ReadAck };

enum class ReceiptDecision { Acked, AckedButDiscarded, SilentlyDropped, RejectedByServer };

template <>
struct EnumNames<MessengerKind> {
  static constexpr std::array<std::pair<MessengerKind, std::string_view>, 3> kNames{{
      {MessengerKind::WhatsAppLike, "WhatsAppLike"},
      {MessengerKind::SignalLike, "SignalLike"},
      {MessengerKind::ThreemaLike, "ThreemaLike"},
  }};
};

template <>
struct EnumNames<ProbeKind> {
  static constexpr std::array<std::pair<ProbeKind, std::string_view>, 7> kNames{{
      {ProbeKind::TextMessage, "TextMessage"},
      {ProbeKind::Reaction, "Reaction"},
      {ProbeKind::SelfReaction, "SelfReaction"},
      {ProbeKind::RemoveReaction, "RemoveReaction"},
      {ProbeKind::Edit, "Edit"},
      {ProbeKind::Delete, "Delete"},
      {ProbeKind::InvalidRefReaction, "InvalidRefReaction"},
  }};
};

template <>
struct EnumNames<PlatformKind> {
  static constexpr std::array<std::pair<PlatformKind, std::string_view>, 6> kNames{{
      {PlatformKind::Android, "Android"},
      {PlatformKind::iOS, "iOS"},
      {PlatformKind::Web, "Web"},
      {PlatformKind::Windows, "Windows"},
      {PlatformKind::macOS, "macOS"},
      {PlatformKind::Desktop, "Desktop"},
  }};
};

template <>
struct EnumNames<ReceiptKind> {
  static constexpr std::array<std::pair<ReceiptKind, std::string_view>, 3> kNames{{
      {ReceiptKind::ServerAck, "ServerAck"},
      {ReceiptKind::DeviceAck, "DeviceAck"},
      {ReceiptKind::ReadAck, "ReadAck"},
  }};
};

template <>
struct EnumNames<ReceiptDecision> {
  static constexpr std::array<std::pair<ReceiptDecision, std::string_view>, 4> kNames{{
      {ReceiptDecision::Acked, "acked"},
      {ReceiptDecision::AckedButDiscarded, "acked_but_discarded"},
      {ReceiptDecision::SilentlyDropped, "silently_dropped"},
      {ReceiptDecision::RejectedByServer, "rejected_by_server"},
  }};
};

// Reaction-family kinds share the reaction payload limit.
bool is_reaction(ProbeKind kind);

// Stands in for a phone number.
struct AccountId {
  std::string value;

  auto operator<=>(const AccountId&) const = default;
};

using DeviceIndex = int;

// Opaque 128-bit message id. The low word is the attacker-side sequence
// number so stacked receipts can be mapped back without a lookup table.
struct ProbeId {
  std::uint64_t nonce = 0;
  std::uint64_t sequence = 0;

  auto operator<=>(const ProbeId&) const = default;

  std::string to_string() const;
  static ProbeId parse(std::string_view hex);
};

struct ActionWindow {
  Millis announced = 0;
  Millis enforced = 0;
};

struct MessengerPolicy {
  MessengerKind name = MessengerKind::WhatsAppLike;
  std::set<ProbeKind> supported_kinds;
  std::set<ProbeKind> receipt_actions;
  bool self_reaction_allowed = true;
  bool invalid_ref_acked = true;
  bool per_device_receipts = true;
  DeviceIndex main_device_index = 0;
  ActionWindow edit_window;
  ActionWindow delete_window;
  std::optional<int> max_edits;
  // Server-side maximum payload per kind, in bytes. Missing kind: no payload allowed.
  std::map<ProbeKind, std::int64_t> payload_limits;
  // Client-side size above which reactions are discarded without a receipt.
  std::optional<std::int64_t> reaction_handling_limit_bytes;
  bool ack_oversized_reactions = false;
  bool handling_limit_applies_to_invalid_refs = true;
  // Edits raise a (silent) notification on iOS receivers.
  bool edits_notify_ios = false;

  // Countermeasure switches. Defaults describe the deployed protocol.
  bool receipts_for_strangers = true;
  bool strict_validation = false;
  std::optional<int> flood_threshold_per_min;
  Millis flood_block = 15 * kMinute;

  static MessengerPolicy whatsapp_like();
  static MessengerPolicy signal_like();
  static MessengerPolicy threema_like();
  static MessengerPolicy preset(MessengerKind kind);

  std::int64_t payload_limit(ProbeKind kind) const;
  // Throws ValidationError if the policy breaks a structural invariant.
  void validate() const;
};

struct ProbeContext {
  bool existing_conversation = false;
  bool reacts_to_own_message = false;
  PlatformKind target_platform = PlatformKind::Android;
};

// True iff the probe produces neither a push notification nor a visible UI
// artifact on the target. Throws InvalidInput when the messenger does not
// offer the action at all.
bool is_stealthy(ProbeKind kind, const ProbeContext& context, const MessengerPolicy& policy);

// Facts about a probe as seen by server and receiving client.
struct ProbeFacts {
  ProbeKind kind = ProbeKind::TextMessage;
  bool ref_valid = true;
  std::int64_t payload_bytes = 0;
  // Age of the referenced message when the probe is processed (edit/delete).
  std::optional<Millis> ref_age;
  // Edits already applied to the referenced message.
  int prior_edits = 0;
  // Sender is not a contact and has no conversation with the receiver.
  bool from_stranger = false;
};

struct ReceiptVerdict {
  ReceiptDecision decision = ReceiptDecision::Acked;
  // Whether the client executes the action (false for late edits/deletes).
  bool applied = true;

  bool emits_receipt() const {
    return decision == ReceiptDecision::Acked || decision == ReceiptDecision::AckedButDiscarded;
  }
};

ReceiptVerdict evaluate_receipt(const ProbeFacts& facts, const MessengerPolicy& policy);

ReceiptDecision elicits_receipt(ProbeKind kind, bool ref_valid, std::int64_t payload_bytes,
                                const MessengerPolicy& policy);

class DeviceDirectory {
 public:
  DeviceDirectory(AccountId account, DeviceIndex main_index);

  // Indices must be strictly increasing and non-empty.
  static DeviceDirectory from_indices(AccountId account, std::vector<DeviceIndex> indices);

  const AccountId& account() const { return account_; }
  const std::vector<DeviceIndex>& indices() const { return indices_; }
  bool empty() const { return indices_.empty(); }
  bool contains(DeviceIndex index) const;
  // Lowest registered index. Throws InvalidInput when empty.
  DeviceIndex main_device() const;

  // Registers a new session with the next auto-incremented index.
  DeviceIndex add_device();
  // Registers a specific index; it must exceed every index ever issued.
  void add_device(DeviceIndex index);
  void remove_device(DeviceIndex index);

 private:
  AccountId account_;
  std::vector<DeviceIndex> indices_;
  DeviceIndex next_index_;
};

struct ProbeAction {
  ProbeId id;
  ProbeKind kind = ProbeKind::InvalidRefReaction;
  std::int64_t payload_bytes = 0;
  bool ref_valid = false;
  SimTime sent_at = 0;

  // Throws InvalidInput for contradictory fields.
  void validate() const;
};

struct ReceiptEvent {
  ReceiptKind kind = ReceiptKind::ServerAck;
  std::vector<ProbeId> probe_ids;
  std::optional<DeviceIndex> device_index;
  SimTime observed_at = 0;
};

// One delivery obligation produced by fanout. With per-device receipts each
// task has a single recipient; otherwise all devices share one task and the
// first device to process the message answers for all of them.
struct DeliveryTask {
  ProbeId probe;
  std::vector<DeviceIndex> recipients;
};

// Throws InvalidInput if the directory is empty (unregistered account).
std::vector<DeliveryTask> fanout(const ProbeAction& probe, const DeviceDirectory& directory,
                                 const MessengerPolicy& policy);

// Server-side registry of accounts and their device directories.
class AccountRegistry {
 public:
  DeviceDirectory& register_account(const AccountId& account, const MessengerPolicy& policy);
  void put(DeviceDirectory directory);
  bool contains(const AccountId& account) const;
  // Throws InvalidInput for unknown accounts.
  DeviceDirectory& directory(const AccountId& account);
  const DeviceDirectory& directory(const AccountId& account) const;

 private:
  std::map<AccountId, DeviceDirectory> directories_;
};

}  // namespace ackscope
