#include <gtest/gtest.h>

#include <filesystem>

#include "ackscope/config.hpp"
#include "ackscope/errors.hpp"
#include "test_util.hpp"

using namespace ackscope;
using ackscope::testing::scenario_path;

namespace {

const char* kMinimal = R"(version: 1
name: mini
seed: 9
policy: WhatsAppLike
epoch: "08:00"
end: "08:10"
topology:
  pins: {attacker: nao, victim: frc}
links:
  WiFi: {rtt_half: 20}
attacker:
  type: SpookyStranger
  schedules:
    - {kind: InvalidRefReaction, interval: 2s, start: "08:00", until: "08:05"}
victim:
  devices:
    - index: 0
      profile: GalaxyS23-WhatsApp
      link: WiFi
      initial: ScreenOn
      script:
        - {at: "08:02", state: ScreenOff}
        - {at: "08:03", link: Offline}
    - index: 3
      profile: Chromium-WhatsAppWeb
      profile_override: {stacking: StackedReversed}
      initial: TabActive
      registered_at: "08:01"
mitigations:
  receipt_delay_noise: {kind: uniform, low: 0, high: 2s}
)";

// Line of the first ValidationError thrown by parse_scenario.
int error_line(const std::string& yaml) {
  try {
    parse_scenario(yaml);
  } catch (const ValidationError& e) {
    return e.line();
  }
  return -1;
}

}  // namespace

TEST(ScenarioYaml, MinimalParses) {
  auto sc = parse_scenario(kMinimal);
  EXPECT_EQ(sc.name, "mini");
  EXPECT_EQ(sc.seed, 9u);
  EXPECT_EQ(sc.epoch_of_day, 8 * kHour);
  EXPECT_EQ(sc.end_at, 10 * kMinute);
  ASSERT_EQ(sc.attacker.schedules.size(), 1u);
  EXPECT_EQ(sc.attacker.schedules[0].interval_ms, 2000);
  EXPECT_DOUBLE_EQ(sc.attacker.schedules[0].duration_s, 300);
  ASSERT_EQ(sc.victim.devices.size(), 2u);
  EXPECT_EQ(sc.victim.devices[0].script[0].at, 2 * kMinute);
  EXPECT_EQ(sc.victim.devices[0].script[1].link, LinkTech::Offline);
  EXPECT_EQ(sc.victim.devices[1].profile.stacking, StackingPolicy::StackedReversed);
  EXPECT_EQ(sc.victim.devices[1].registered_at, kMinute);
  EXPECT_DOUBLE_EQ(sc.link_for(LinkTech::WiFi).up.mean(), 20);
  ASSERT_TRUE(sc.mitigations.receipt_delay_noise);
  EXPECT_DOUBLE_EQ(sc.mitigations.receipt_delay_noise->high(), 2000);
  EXPECT_EQ(sc.topology.pin({"attacker"}), "nao");
  EXPECT_NO_THROW(run_scenario(sc));
}

TEST(ScenarioYaml, UnknownKeyReportsLine) {
  std::string y = kMinimal;
  y.replace(y.find("    - index: 3\n"), 15, "    - index: 3\n      colour: red\n");
  EXPECT_EQ(error_line(y), 25);
}

TEST(ScenarioYaml, SemanticErrorsCarryLines) {
  std::string y = kMinimal;
  y.replace(y.find("interval: 2s"), 12, "interval: 10ms");
  EXPECT_EQ(error_line(y), 14);

  y = kMinimal;
  y.replace(y.find("index: 3"), 8, "index: 0");
  EXPECT_EQ(error_line(y), 24);

  y = kMinimal;
  y.replace(y.find("{at: \"08:03\""), 12, "{at: \"08:01\"");
  EXPECT_EQ(error_line(y), 23);

  y = kMinimal;
  y.replace(y.find("profile: GalaxyS23"), 18, "profile: Nokia3310");
  EXPECT_EQ(error_line(y), 18);

  y = kMinimal;
  y.replace(y.find("version: 1"), 10, "version: 2");
  EXPECT_EQ(error_line(y), 1);
}

TEST(ScenarioYaml, VisibleKindsRequireOverride) {
  std::string y = kMinimal;
  y.replace(y.find("kind: InvalidRefReaction"), 24, "kind: TextMessage");
  EXPECT_THROW(parse_scenario(y), ValidationError);
  y.replace(y.find("  type: SpookyStranger"), 22, "  type: SpookyStranger\n  allow_visible: true");
  EXPECT_NO_THROW(parse_scenario(y));
}

TEST(ScenarioYaml, MalformedYaml) {
  EXPECT_THROW(parse_scenario("version: [1"), ValidationError);
  EXPECT_THROW(parse_scenario("- just\n- a list\n"), ValidationError);
  EXPECT_THROW(load_scenario("/nonexistent/nowhere.yaml"), std::runtime_error);
}

TEST(ScenarioYaml, ShippedScenariosLoad) {
  int n = 0;
  for (const auto& e : std::filesystem::recursive_directory_iterator(ACKSCOPE_SCENARIO_DIR)) {
    if (e.path().extension() != ".yaml") continue;
    EXPECT_NO_THROW(load_scenario(e.path().string())) << e.path();
    ++n;
  }
  EXPECT_GE(n, 11);
}

TEST(ProfileYaml, ShippedCatalogMatchesBuiltin) {
  auto cat = load_profile_catalog(std::string(ACKSCOPE_DATA_DIR) + "/profiles.yaml");
  const auto& b = ProfileCatalog::builtin();
  ASSERT_EQ(cat.profiles().size(), b.profiles().size());
  for (std::size_t i = 0; i < cat.profiles().size(); ++i) EXPECT_EQ(cat.profiles()[i].name, b.profiles()[i].name);
}

TEST(ProfileYaml, RoundTripThroughEmitter) {
  for (const auto& p : ProfileCatalog::builtin().profiles()) {
    const std::string doc = "version: 1\nprofiles:\n  - " + [&] {
      std::string y = profile_to_yaml(p);
      std::string out;
      for (char c : y) {
        out += c;
        if (c == '\n') out += "    ";
      }
      return out;
    }();
    auto back = parse_profile_catalog(doc);
    ASSERT_EQ(back.profiles().size(), 1u) << p.name;
    const auto& q = back.profiles()[0];
    EXPECT_EQ(q.name, p.name);
    EXPECT_EQ(q.os, p.os);
    EXPECT_EQ(q.stacking, p.stacking);
    EXPECT_EQ(q.delay_by_state.size(), p.delay_by_state.size());
    for (const auto& [s, d] : p.delay_by_state) EXPECT_DOUBLE_EQ(q.delay_by_state.at(s).mean(), d.mean());
    EXPECT_EQ(q.sleep.has_value(), p.sleep.has_value());
  }
}

TEST(ProfileYaml, Rejections) {
  EXPECT_THROW(parse_profile_catalog("version: 1\nprofiles:\n  - {name: a, class: Phone, delays: {ScreenOn: 5}}\n"),
               ValidationError);
  const char* dup = R"(version: 1
profiles:
  - {name: d, class: Desktop, delays: {TabActive: 50, TabBackground: 60}}
  - {name: d, class: Desktop, delays: {TabActive: 50, TabBackground: 60}}
)";
  EXPECT_THROW(parse_profile_catalog(dup), ValidationError);
  EXPECT_THROW(parse_profile_catalog("version: 1\nprofiles:\n  - {name: e, class: Desktop, delays: {TabActive: "
                                     "{kind: gamma, mean: 3}, TabBackground: 60}}\n"),
               ValidationError);
}

TEST(MitigationYaml, BareAndNested) {
  auto m = parse_mitigations("strict_validation: true\nrate_limit: {per_s: 2, burst: 5}\n");
  EXPECT_TRUE(m.strict_validation);
  ASSERT_TRUE(m.rate_limit);
  EXPECT_DOUBLE_EQ(m.rate_limit->sustained_threshold_per_s, 2);
  auto n = parse_mitigations("mitigations:\n  harmonized_stacking: Stacked\n  receiver_flood_threshold_per_min: 60\n");
  EXPECT_EQ(n.harmonized_stacking, StackingPolicy::Stacked);
  EXPECT_EQ(n.receiver_flood_threshold_per_min, 60);
  EXPECT_THROW(parse_mitigations("noise_level: 3\n"), ValidationError);
  EXPECT_THROW(parse_mitigations("harmonized_stacking: Sideways\n"), ValidationError);
}
