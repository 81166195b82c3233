#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "ackscope/errors.hpp"
#include "ackscope/netmodel.hpp"

using namespace ackscope;

namespace {

AccessLink const_link(double ms, LinkTech tech = LinkTech::WiFi) {
  AccessLink l;
  l.tech = tech;
  l.up = l.down = LatencyDistribution::constant(ms);
  return l;
}

ServerTopology const_topology(double cross) {
  ServerTopology t = ServerTopology::whatsapp_default();
  t.default_cross_server = LatencyDistribution::constant(cross);
  return t;
}

double variance(const std::vector<double>& v) {
  double m = 0;
  for (double x : v) m += x;
  m /= static_cast<double>(v.size());
  double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

}  // namespace

TEST(PathDelay, SameServerSumsAccessHops) {
  auto t = const_topology(10);
  t.routing_pins[{"a"}] = "frc";
  t.routing_pins[{"b"}] = "frc";
  Rng rng(1);
  auto d = sample_path_delay({{"a"}, const_link(10)}, {{"b"}, const_link(10)}, t, rng);
  ASSERT_TRUE(d);
  EXPECT_DOUBLE_EQ(*d, 20.0);
}

TEST(PathDelay, DistinctServersAddCrossHop) {
  auto t = const_topology(10);
  t.routing_pins[{"a"}] = "nao";
  t.routing_pins[{"b"}] = "frc";
  Rng rng(1);
  auto d = sample_path_delay({{"a"}, const_link(10)}, {{"b"}, const_link(10)}, t, rng);
  ASSERT_TRUE(d);
  EXPECT_DOUBLE_EQ(*d, 30.0);
  t.hop_latency[{"frc", "nao"}] = LatencyDistribution::constant(55);
  EXPECT_DOUBLE_EQ(*sample_path_delay({{"a"}, const_link(10)}, {{"b"}, const_link(10)}, t, rng), 75.0);
}

TEST(PathDelay, OfflineYieldsNothing) {
  auto t = const_topology(10);
  t.routing_pins[{"a"}] = "nao";
  t.routing_pins[{"b"}] = "frc";
  Rng rng(1);
  EXPECT_FALSE(sample_path_delay({{"a"}, const_link(10)}, {{"b"}, const_link(0, LinkTech::Offline)}, t, rng));
}

TEST(PathDelay, UnpinnedAccountRejected) {
  auto t = const_topology(10);
  t.routing_pins[{"a"}] = "nao";
  Rng rng(1);
  EXPECT_THROW(sample_path_delay({{"a"}, const_link(1)}, {{"b"}, const_link(1)}, t, rng), InvalidInput);
}

TEST(PathDelay, JitterScaleQuadruplesVariance) {
  auto t = const_topology(0);
  t.routing_pins[{"a"}] = "nao";
  t.routing_pins[{"b"}] = "nao";
  AccessLink narrow;
  narrow.up = LatencyDistribution::constant(0);
  narrow.down = LatencyDistribution::normal(100, 10);
  AccessLink wide = narrow;
  wide.tech = LinkTech::LTE;
  wide.jitter_scale = 2.0;
  Rng r1(11), r2(12);
  std::vector<double> a, b;
  for (int i = 0; i < 10000; ++i) {
    a.push_back(*sample_path_delay({{"a"}, const_link(0)}, {{"b"}, narrow}, t, r1));
    b.push_back(*sample_path_delay({{"a"}, const_link(0)}, {{"b"}, wide}, t, r2));
  }
  // sd 10 and 20 are far from the clamp at 0, so the ratio is 4 analytically.
  EXPECT_NEAR(variance(b) / variance(a), 4.0, 0.4);
}

TEST(PathDelay, Deterministic) {
  auto t = ServerTopology::whatsapp_default();
  t.routing_pins[{"a"}] = "nao";
  t.routing_pins[{"b"}] = "frc";
  Rng r1(99), r2(99);
  for (int i = 0; i < 500; ++i) {
    auto x = sample_path_delay({{"a"}, AccessLink::attacker_default()}, {{"b"}, AccessLink::preset(LinkTech::LTE)}, t,
                               r1);
    auto y = sample_path_delay({{"a"}, AccessLink::attacker_default()}, {{"b"}, AccessLink::preset(LinkTech::LTE)}, t,
                               r2);
    ASSERT_EQ(*x, *y);
  }
}

TEST(Distribution, Moments) {
  Rng rng(5);
  auto ln = LatencyDistribution::lognormal(1000, 150);
  auto u = LatencyDistribution::uniform(100, 300);
  double s1 = 0, s2 = 0, su = 0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    double x = ln.sample(rng);
    s1 += x;
    s2 += x * x;
    su += u.sample(rng);
  }
  double m = s1 / n;
  EXPECT_NEAR(m, 1000, 3);
  EXPECT_NEAR(std::sqrt(s2 / n - m * m), 150, 3);
  EXPECT_NEAR(su / n, 200, 1);
  EXPECT_NEAR(u.stddev(), 200 / std::sqrt(12.0), 1e-9);
}

TEST(Distribution, ClampAndEmpirical) {
  Rng rng(3);
  auto d = LatencyDistribution::normal(0, 50, 5);
  for (int i = 0; i < 1000; ++i) EXPECT_GE(d.sample(rng), 5.0);
  auto e = LatencyDistribution::empirical({10, 20, 30});
  EXPECT_DOUBLE_EQ(e.mean(), 20);
  std::map<double, int> seen;
  for (int i = 0; i < 3000; ++i) seen[e.sample(rng)]++;
  EXPECT_EQ(seen.size(), 3u);
  EXPECT_THROW(LatencyDistribution::empirical({}), InvalidInput);
  EXPECT_THROW(LatencyDistribution::lognormal(0, 1), InvalidInput);
  EXPECT_THROW(LatencyDistribution::uniform(5, 1), InvalidInput);
  EXPECT_THROW(LatencyDistribution::constant(-1), InvalidInput);
}

TEST(Pinning, KeepCookieKeepsExistingPin) {
  auto t = ServerTopology::whatsapp_default();
  t.routing_pins[{"a"}] = "odn";
  Rng rng(1);
  for (int i = 0; i < 20; ++i) EXPECT_EQ(update_routing_pin({"a"}, t, PinStrategy::KeepCookie, rng), "odn");
}

TEST(Pinning, RandomIsUniformOverEightServers) {
  ServerTopology t;
  t.messaging_servers = {"s0", "s1", "s2", "s3", "s4", "s5", "s6", "s7"};
  Rng rng(2024);
  std::map<std::string, int> counts;
  const int n = 8000;
  for (int i = 0; i < n; ++i) counts[update_routing_pin({"fresh"}, t, PinStrategy::Random, rng)]++;
  ASSERT_EQ(counts.size(), 8u);
  double chi2 = 0;
  for (auto& [k, c] : counts) chi2 += (c - 1000.0) * (c - 1000.0) / 1000.0;
  // 99th percentile of chi-square with 7 degrees of freedom.
  EXPECT_LT(chi2, 18.475);
}

TEST(Pinning, SingleServerAlwaysChosen) {
  ServerTopology t;
  t.messaging_servers = {"only"};
  Rng rng(1);
  EXPECT_EQ(update_routing_pin({"x"}, t, PinStrategy::Random, rng), "only");
  EXPECT_EQ(update_routing_pin({"y"}, t, PinStrategy::KeepCookie, rng), "only");
  EXPECT_EQ(t.pin({"y"}), "only");
}

TEST(Topology, Validate) {
  auto t = ServerTopology::whatsapp_default();
  EXPECT_NO_THROW(t.validate());
  t.routing_pins[{"a"}] = "nowhere";
  EXPECT_THROW(t.validate(), ValidationError);
  t = ServerTopology::whatsapp_default();
  t.conditions.loss_probability = 1.0;
  EXPECT_THROW(t.validate(), ValidationError);
  EXPECT_DOUBLE_EQ(t.hop("frc", "frc").mean(), 0.0);
}
