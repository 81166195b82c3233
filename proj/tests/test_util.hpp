#pragma once

#include <string>

#include "ackscope/config.hpp"
#include "ackscope/simulation.hpp"

namespace ackscope::testing {

// Phone profile with fixed delays per state.
inline PlatformProfile constant_phone(double fg = 300, double on = 600, double off = 1500) {
  PlatformProfile p;
  p.name = "ConstPhone";
  p.app = "WhatsApp";
  p.os = PlatformKind::Android;
  p.device_class = DeviceClass::Phone;
  p.delay_by_state[ActivityState::AppForeground] = LatencyDistribution::constant(fg);
  p.delay_by_state[ActivityState::ScreenOn] = LatencyDistribution::constant(on);
  p.delay_by_state[ActivityState::ScreenOff] = LatencyDistribution::constant(off);
  p.battery = BatteryRates{0.9, 15.0};
  return p;
}

inline PlatformProfile constant_desktop(StackingPolicy stacking = StackingPolicy::Stacked, double delay = 50) {
  PlatformProfile p;
  p.name = "ConstDesktop";
  p.app = "WhatsApp";
  p.os = PlatformKind::Windows;
  p.device_class = DeviceClass::Desktop;
  p.delay_by_state[ActivityState::TabActive] = LatencyDistribution::constant(delay);
  p.delay_by_state[ActivityState::TabBackground] = LatencyDistribution::constant(delay);
  p.stacking = stacking;
  p.read_stacking = stacking;
  return p;
}

// Every hop constant, both accounts pinned to distinct servers.
inline Scenario constant_scenario(double access = 20, double cross = 40) {
  Scenario sc;
  sc.name = "constant";
  sc.topology = ServerTopology::whatsapp_default();
  sc.topology.default_cross_server = LatencyDistribution::constant(cross);
  sc.topology.routing_pins[AccountId{"attacker"}] = "nao";
  sc.topology.routing_pins[AccountId{"victim"}] = "frc";
  AccessLink link;
  link.tech = LinkTech::WiFi;
  link.up = link.down = LatencyDistribution::constant(access);
  sc.attacker.link = link;
  for (auto t : {LinkTech::WiFi, LinkTech::LTE, LinkTech::LAN}) {
    AccessLink l = link;
    l.tech = t;
    sc.link_presets[t] = l;
  }
  return sc;
}

inline ProbeSchedule every(Millis interval, double duration_s, ProbeKind kind = ProbeKind::InvalidRefReaction) {
  ProbeSchedule s;
  s.kind = kind;
  s.interval_ms = interval;
  s.duration_s = duration_s;
  return s;
}

inline DeviceConfig device(DeviceIndex idx, PlatformProfile p, ActivityState initial) {
  DeviceConfig d;
  d.index = idx;
  d.profile = std::move(p);
  d.initial = initial;
  return d;
}

inline std::string scenario_path(const std::string& name) { return std::string(ACKSCOPE_SCENARIO_DIR) + "/" + name; }

}  // namespace ackscope::testing
