#include <gtest/gtest.h>

#include "ackscope/errors.hpp"
#include "ackscope/protocol.hpp"

using namespace ackscope;

namespace {

const MessengerPolicy kWa = MessengerPolicy::whatsapp_like();
const MessengerPolicy kSig = MessengerPolicy::signal_like();
const MessengerPolicy kThr = MessengerPolicy::threema_like();

ProbeAction probe(ProbeKind kind = ProbeKind::InvalidRefReaction) {
  ProbeAction p;
  p.id = {7, 1};
  p.kind = kind;
  return p;
}

}  // namespace

TEST(Stealth, SelfReactionInConversationIsStealthy) {
  ProbeContext ctx{.existing_conversation = true, .reacts_to_own_message = true};
  EXPECT_TRUE(is_stealthy(ProbeKind::SelfReaction, ctx, kWa));
  EXPECT_TRUE(is_stealthy(ProbeKind::Reaction, ctx, kWa));
}

TEST(Stealth, TextMessageNeverStealthy) {
  for (const auto& p : {kWa, kSig, kThr}) {
    for (bool conv : {false, true}) {
      EXPECT_FALSE(is_stealthy(ProbeKind::TextMessage, ProbeContext{.existing_conversation = conv}, p));
    }
  }
}

TEST(Stealth, ThreemaHasNoInvalidRefReaction) {
  EXPECT_THROW(is_stealthy(ProbeKind::InvalidRefReaction, ProbeContext{}, kThr), InvalidInput);
  EXPECT_THROW(is_stealthy(ProbeKind::Reaction, ProbeContext{.reacts_to_own_message = true}, kThr), InvalidInput);
}

TEST(Stealth, ReactionFamilySilentOnWhatsAppAndSignal) {
  for (const auto& p : {kWa, kSig}) {
    for (auto k : {ProbeKind::SelfReaction, ProbeKind::RemoveReaction, ProbeKind::InvalidRefReaction}) {
      EXPECT_TRUE(is_stealthy(k, ProbeContext{}, p)) << to_string(k);
    }
  }
  // Reacting to the target's own message shows up for them.
  EXPECT_FALSE(is_stealthy(ProbeKind::Reaction, ProbeContext{.existing_conversation = true}, kWa));
}

TEST(Stealth, EditsNotifyIosOnWhatsApp) {
  EXPECT_FALSE(is_stealthy(ProbeKind::Edit, ProbeContext{.target_platform = PlatformKind::iOS}, kWa));
  EXPECT_TRUE(is_stealthy(ProbeKind::Edit, ProbeContext{.target_platform = PlatformKind::Android}, kWa));
  EXPECT_TRUE(is_stealthy(ProbeKind::Edit, ProbeContext{.target_platform = PlatformKind::iOS}, kSig));
  EXPECT_TRUE(is_stealthy(ProbeKind::Delete, ProbeContext{}, kWa));
}

TEST(Receipt, DocumentedExamples) {
  EXPECT_EQ(elicits_receipt(ProbeKind::Reaction, false, 8, kWa), ReceiptDecision::Acked);
  EXPECT_EQ(elicits_receipt(ProbeKind::Reaction, true, 2'000'000, kWa), ReceiptDecision::RejectedByServer);
  EXPECT_EQ(elicits_receipt(ProbeKind::Delete, true, 0, kThr), ReceiptDecision::SilentlyDropped);
}

TEST(Receipt, ThreemaOnlyAcksText) {
  for (auto k : {ProbeKind::Reaction, ProbeKind::SelfReaction, ProbeKind::RemoveReaction, ProbeKind::Edit,
                 ProbeKind::Delete, ProbeKind::InvalidRefReaction}) {
    EXPECT_NE(elicits_receipt(k, k != ProbeKind::InvalidRefReaction, 0, kThr), ReceiptDecision::Acked)
        << to_string(k);
  }
  EXPECT_EQ(elicits_receipt(ProbeKind::TextMessage, true, 10, kThr), ReceiptDecision::Acked);
}

TEST(Receipt, PayloadLimits) {
  EXPECT_EQ(elicits_receipt(ProbeKind::InvalidRefReaction, false, 1'000'000, kWa), ReceiptDecision::SilentlyDropped);
  EXPECT_EQ(elicits_receipt(ProbeKind::InvalidRefReaction, false, 1'000'001, kWa), ReceiptDecision::RejectedByServer);
  EXPECT_EQ(elicits_receipt(ProbeKind::TextMessage, true, 65'000, kWa), ReceiptDecision::Acked);
  EXPECT_EQ(elicits_receipt(ProbeKind::TextMessage, true, 65'001, kWa), ReceiptDecision::RejectedByServer);
  EXPECT_EQ(elicits_receipt(ProbeKind::Reaction, true, 194'000, kSig), ReceiptDecision::Acked);
  EXPECT_EQ(elicits_receipt(ProbeKind::Reaction, true, 194'001, kSig), ReceiptDecision::RejectedByServer);
  EXPECT_EQ(elicits_receipt(ProbeKind::Delete, true, 1, kWa), ReceiptDecision::RejectedByServer);
  EXPECT_EQ(elicits_receipt(ProbeKind::TextMessage, true, -1, kWa), ReceiptDecision::RejectedByServer);
}

TEST(Receipt, HandlingLimitAndFlags) {
  EXPECT_EQ(elicits_receipt(ProbeKind::Reaction, true, 30, kWa), ReceiptDecision::Acked);
  EXPECT_EQ(elicits_receipt(ProbeKind::Reaction, true, 31, kWa), ReceiptDecision::SilentlyDropped);
  auto p = kWa;
  p.ack_oversized_reactions = true;
  EXPECT_EQ(elicits_receipt(ProbeKind::Reaction, true, 31, p), ReceiptDecision::AckedButDiscarded);
  p = kWa;
  p.handling_limit_applies_to_invalid_refs = false;
  EXPECT_EQ(elicits_receipt(ProbeKind::InvalidRefReaction, false, 500'000, p), ReceiptDecision::Acked);
  // Signal has no client handling limit.
  EXPECT_EQ(elicits_receipt(ProbeKind::InvalidRefReaction, false, 100'000, kSig), ReceiptDecision::Acked);
}

TEST(Receipt, LateEditsAndDeletesAckedNotApplied) {
  ProbeFacts f;
  f.kind = ProbeKind::Delete;
  f.ref_age = 61 * kHour;
  auto v = evaluate_receipt(f, kWa);
  EXPECT_EQ(v.decision, ReceiptDecision::Acked);
  EXPECT_FALSE(v.applied);
  f.ref_age = 59 * kHour;  // past the announced window, inside the enforced one
  v = evaluate_receipt(f, kWa);
  EXPECT_TRUE(v.applied);

  f.kind = ProbeKind::Edit;
  f.payload_bytes = 10;
  f.ref_age = 19 * kMinute;
  EXPECT_TRUE(evaluate_receipt(f, kWa).applied);
  f.ref_age = 21 * kMinute;
  v = evaluate_receipt(f, kWa);
  EXPECT_EQ(v.decision, ReceiptDecision::Acked);
  EXPECT_FALSE(v.applied);

  f.ref_age = 47 * kHour;
  EXPECT_TRUE(evaluate_receipt(f, kSig).applied);
  f.ref_age = 49 * kHour;
  EXPECT_FALSE(evaluate_receipt(f, kSig).applied);
  EXPECT_TRUE(evaluate_receipt(f, kSig).emits_receipt());
}

TEST(Receipt, SignalEditCap) {
  ProbeFacts f;
  f.kind = ProbeKind::Edit;
  f.payload_bytes = 5;
  f.prior_edits = 9;
  EXPECT_EQ(evaluate_receipt(f, kSig).decision, ReceiptDecision::Acked);
  f.prior_edits = 10;
  EXPECT_EQ(evaluate_receipt(f, kSig).decision, ReceiptDecision::RejectedByServer);
  EXPECT_EQ(evaluate_receipt(f, kWa).decision, ReceiptDecision::Acked);
}

TEST(Receipt, Countermeasures) {
  auto p = kWa;
  p.strict_validation = true;
  EXPECT_EQ(elicits_receipt(ProbeKind::InvalidRefReaction, false, 8, p), ReceiptDecision::SilentlyDropped);
  EXPECT_EQ(elicits_receipt(ProbeKind::Reaction, true, 8, p), ReceiptDecision::Acked);
  ProbeFacts f;
  f.kind = ProbeKind::Delete;
  f.ref_age = 70 * kHour;
  EXPECT_EQ(evaluate_receipt(f, p).decision, ReceiptDecision::SilentlyDropped);

  p = kWa;
  p.receipts_for_strangers = false;
  f = ProbeFacts{};
  f.kind = ProbeKind::InvalidRefReaction;
  f.ref_valid = false;
  f.from_stranger = true;
  EXPECT_EQ(evaluate_receipt(f, p).decision, ReceiptDecision::SilentlyDropped);
  f.from_stranger = false;
  EXPECT_EQ(evaluate_receipt(f, p).decision, ReceiptDecision::Acked);
}

TEST(Fanout, PerDeviceVersusShared) {
  auto dir = DeviceDirectory::from_indices({"v"}, {0, 1, 9});
  auto tasks = fanout(probe(), dir, kWa);
  ASSERT_EQ(tasks.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    ASSERT_EQ(tasks[i].recipients.size(), 1u);
    EXPECT_EQ(tasks[i].recipients[0], dir.indices()[i]);
    EXPECT_EQ(tasks[i].probe, probe().id);
  }
  EXPECT_EQ(fanout(probe(), DeviceDirectory::from_indices({"v"}, {1}), kSig).size(), 1u);
  auto shared = fanout(probe(ProbeKind::TextMessage), DeviceDirectory::from_indices({"v"}, {0, 1}), kThr);
  ASSERT_EQ(shared.size(), 1u);
  EXPECT_EQ(shared[0].recipients, (std::vector<DeviceIndex>{0, 1}));
}

TEST(Fanout, EmptyDirectoryRejected) {
  DeviceDirectory dir({"v"}, 0);
  dir.remove_device(0);
  EXPECT_THROW(fanout(probe(), dir, kWa), InvalidInput);
}

TEST(Directory, IndicesMonotone) {
  DeviceDirectory dir({"v"}, 1);
  EXPECT_EQ(dir.main_device(), 1);
  EXPECT_EQ(dir.add_device(), 2);
  dir.add_device(9);
  EXPECT_EQ(dir.add_device(), 10);
  dir.remove_device(2);
  EXPECT_THROW(dir.add_device(2), InvalidInput);
  EXPECT_THROW(dir.add_device(5), InvalidInput);
  EXPECT_THROW(dir.remove_device(3), InvalidInput);
  EXPECT_EQ(dir.indices(), (std::vector<DeviceIndex>{1, 9, 10}));
  EXPECT_TRUE(dir.contains(9));
  EXPECT_FALSE(dir.contains(2));
  EXPECT_THROW(DeviceDirectory::from_indices({"v"}, {0, 0}), InvalidInput);
  EXPECT_THROW(DeviceDirectory::from_indices({"v"}, {}), InvalidInput);
}

TEST(Registry, RegisterAndLookup) {
  AccountRegistry reg;
  auto& d = reg.register_account({"alice"}, kSig);
  EXPECT_EQ(d.main_device(), 1);
  EXPECT_TRUE(reg.contains({"alice"}));
  EXPECT_THROW(reg.register_account({"alice"}, kSig), InvalidInput);
  EXPECT_THROW(reg.directory({"bob"}), InvalidInput);
  reg.put(DeviceDirectory::from_indices({"bob"}, {0, 3}));
  EXPECT_EQ(reg.directory({"bob"}).indices().size(), 2u);
}

TEST(ProbeIdFormat, RoundTrip) {
  ProbeId id{0x0123456789abcdefULL, 42};
  auto s = id.to_string();
  EXPECT_EQ(s.size(), 32u);
  EXPECT_EQ(s, "0123456789abcdef000000000000002a");
  EXPECT_EQ(ProbeId::parse(s), id);
  EXPECT_EQ(ProbeId::parse("0123456789ABCDEF000000000000002A"), id);
  EXPECT_THROW(ProbeId::parse("12"), InvalidInput);
  EXPECT_THROW(ProbeId::parse("0123456789abcdeg000000000000002a"), InvalidInput);
}

TEST(Policy, PresetsValidateAndWindows) {
  for (auto k : {MessengerKind::WhatsAppLike, MessengerKind::SignalLike, MessengerKind::ThreemaLike}) {
    auto p = MessengerPolicy::preset(k);
    EXPECT_NO_THROW(p.validate());
    EXPECT_GE(p.edit_window.enforced, p.edit_window.announced);
    EXPECT_GE(p.delete_window.enforced, p.delete_window.announced);
  }
  EXPECT_EQ(kWa.delete_window.announced, 48 * kHour);
  EXPECT_EQ(kWa.delete_window.enforced, 60 * kHour);
  EXPECT_EQ(kWa.edit_window.enforced, 20 * kMinute);
  EXPECT_EQ(kSig.delete_window.enforced, 48 * kHour);
  EXPECT_FALSE(kThr.per_device_receipts);
  EXPECT_EQ(kSig.main_device_index, 1);

  auto bad = kWa;
  bad.edit_window.enforced = bad.edit_window.announced - 1;
  EXPECT_THROW(bad.validate(), ValidationError);
  bad = kThr;
  bad.receipt_actions.insert(ProbeKind::Edit);
  EXPECT_THROW(bad.validate(), ValidationError);
}

TEST(ProbeActionCheck, Contradictions) {
  auto p = probe();
  p.ref_valid = true;
  EXPECT_THROW(p.validate(), InvalidInput);
  p = probe();
  p.payload_bytes = -5;
  EXPECT_THROW(p.validate(), InvalidInput);
}
