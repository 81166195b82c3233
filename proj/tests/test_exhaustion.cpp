#include <gtest/gtest.h>

#include "ackscope/errors.hpp"
#include "ackscope/exhaustion.hpp"

using namespace ackscope;

namespace {

const PlatformProfile& iphone13() { return ProfileCatalog::builtin().find("iPhone13Pro-WhatsApp"); }

}  // namespace

TEST(Traffic, WhatsAppReactionFlood) {
  ExhaustionPlan p;
  auto e = predict_traffic(p);
  const double per_msg = 1'000'000 + kEnvelopeBytes;
  EXPECT_DOUBLE_EQ(e.rate_per_s, 3.7);
  EXPECT_DOUBLE_EQ(e.bytes_per_s, 3.7 * per_msg);
  EXPECT_NEAR(e.mb_per_h, 13'320, 13'320 * 0.01);
}

TEST(Traffic, SignalCappedBySenderPath) {
  ExhaustionPlan p;
  p.policy = MessengerKind::SignalLike;
  p.payload_bytes = 194'000;
  auto e = predict_traffic(p);
  // The rate that yields 360 MB/h for this message size.
  const double implied = 360e6 / 3600.0 / (194'000 + kEnvelopeBytes);
  EXPECT_NEAR(e.rate_per_s, implied, implied * 0.01);
  EXPECT_NEAR(e.mb_per_h, 360, 3.6);
}

TEST(Traffic, ZeroRateAndErrors) {
  ExhaustionPlan p;
  p.rate_per_s = 0;
  EXPECT_DOUBLE_EQ(predict_traffic(p).mb_per_h, 0);
  p = ExhaustionPlan{};
  p.payload_bytes = 1'000'001;
  EXPECT_THROW(predict_traffic(p), InvalidInput);
  p = ExhaustionPlan{};
  p.kind = ProbeKind::Delete;
  EXPECT_THROW(predict_traffic(p), InvalidInput);
  p.payload_bytes = 0;
  EXPECT_NO_THROW(predict_traffic(p));
  p = ExhaustionPlan{};
  p.rate_per_s = -1;
  EXPECT_THROW(predict_traffic(p), InvalidInput);
}

TEST(Run, ZeroDurationIsInert) {
  ExhaustionPlan p;
  p.duration_s = 0;
  auto r = run_exhaustion(p, iphone13());
  EXPECT_EQ(r.rx_bytes, 0);
  EXPECT_EQ(r.probes_sent, 0);
  EXPECT_DOUBLE_EQ(r.battery_delta_pct, 0);
}

TEST(Run, RxBytesReconcile) {
  ExhaustionPlan p;
  p.duration_s = 60;
  auto r = run_exhaustion(p, iphone13(), 3);
  const std::int64_t per_msg = p.payload_bytes + kEnvelopeBytes;
  EXPECT_EQ(r.rx_bytes % per_msg, 0);
  const auto delivered = r.rx_bytes / per_msg;
  EXPECT_LE(delivered, r.probes_sent);
  EXPECT_GE(delivered, r.probes_sent - 2);
  EXPECT_NEAR(r.observed_mb_per_h, r.predicted.mb_per_h, r.predicted.mb_per_h * 0.01);
  EXPECT_EQ(r.ui_notifications, 0);
  EXPECT_LT(r.battery_delta_pct, 0);
}

TEST(Run, SignalThrottledRun) {
  ExhaustionPlan p;
  p.policy = MessengerKind::SignalLike;
  p.payload_bytes = 194'000;
  p.duration_s = 300;
  auto r = run_exhaustion(p, ProfileCatalog::builtin().find("iPhone13Pro-Signal"), 4);
  EXPECT_NEAR(r.observed_mb_per_h, 360, 360 * 0.02);
  EXPECT_EQ(r.ui_notifications, 0);
}

TEST(Run, StrangerBlockingDoesNotStopDownload) {
  ExhaustionPlan p;
  p.duration_s = 30;
  p.mitigations.restrict_to_contacts = true;
  auto r = run_exhaustion(p, iphone13(), 5);
  EXPECT_GT(r.rx_bytes, 0);
}
