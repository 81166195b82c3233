#pragma once

// Latency model of the two-server message path:
//   sender -> sender's messaging server -> receiver's messaging server -> receiver.

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "ackscope/protocol.hpp"
#include "ackscope/rng.hpp"

namespace ackscope {

enum class DistributionKind { Constant, Normal, LogNormal, Uniform, Empirical };

template <>
struct EnumNames<DistributionKind> {
  static constexpr std::array<std::pair<DistributionKind, std::string_view>, 5> kNames{{
      {DistributionKind::Constant, "constant"},
      {DistributionKind::Normal, "normal"},
      {DistributionKind::LogNormal, "lognormal"},
      {DistributionKind::Uniform, "uniform"},
      {DistributionKind::Empirical, "empirical"},
  }};
};

// Delay distribution in milliseconds. Samples are clamped at `min_ms`.
//
// `jitter_scale` stretches every sample's deviation from the distribution
// mean, so a scale of 2 multiplies the variance by exactly 4 (before
// clamping).
class LatencyDistribution {
 public:
  LatencyDistribution() = default;

  static LatencyDistribution constant(double ms);
  static LatencyDistribution normal(double mean_ms, double stddev_ms, double min_ms = 0.0);
  // Parameterized by the mean and standard deviation of the delay itself.
  static LatencyDistribution lognormal(double mean_ms, double stddev_ms, double min_ms = 0.0);
  static LatencyDistribution uniform(double low_ms, double high_ms);
  static LatencyDistribution empirical(std::vector<double> table_ms, double min_ms = 0.0);

  double sample(Rng& rng, double jitter_scale = 1.0) const;

  DistributionKind kind() const { return kind_; }
  double mean() const;
  double stddev() const;
  double min_ms() const { return min_ms_; }
  double low() const { return low_; }
  double high() const { return high_; }
  const std::vector<double>& table() const { return table_; }

 private:
  DistributionKind kind_ = DistributionKind::Constant;
  double mean_ = 0.0;
  double stddev_ = 0.0;
  double min_ms_ = 0.0;
  double low_ = 0.0;
  double high_ = 0.0;
  double log_mu_ = 0.0;
  double log_sigma_ = 0.0;
  std::vector<double> table_;
};

enum class LinkTech { WiFi, LTE, LAN, Offline };

template <>
struct EnumNames<LinkTech> {
  static constexpr std::array<std::pair<LinkTech, std::string_view>, 4> kNames{{
      {LinkTech::WiFi, "WiFi"},
      {LinkTech::LTE, "LTE"},
      {LinkTech::LAN, "LAN"},
      {LinkTech::Offline, "Offline"},
  }};
};

// Client <-> messaging-server hop.
struct AccessLink {
  LinkTech tech = LinkTech::WiFi;
  LatencyDistribution up;
  LatencyDistribution down;
  double jitter_scale = 1.0;

  bool reachable() const { return tech != LinkTech::Offline; }

  // Calibrated defaults: LAN is the most stable, LTE sits higher than WiFi
  // with tighter spread.
  static AccessLink preset(LinkTech tech);
  // Datacenter-grade attacker uplink (25 ms each way).
  static AccessLink attacker_default();
};

struct NetworkConditions {
  // Per-hop loss probability; a lost hop is retransmitted after `retransmit_after`.
  double loss_probability = 0.0;
  Millis retransmit_after = kSecond;
};

struct ServerTopology {
  std::vector<std::string> edge_nodes;
  std::vector<std::string> messaging_servers;
  // Latency between two distinct messaging servers unless overridden.
  LatencyDistribution default_cross_server = LatencyDistribution::constant(40.0);
  // Overrides keyed (from, to). A key (a, b) also serves b -> a unless that
  // direction has its own entry.
  std::map<std::pair<std::string, std::string>, LatencyDistribution> hop_latency;
  std::map<AccountId, std::string> routing_pins;
  NetworkConditions conditions;

  bool has_server(const std::string& label) const;
  // Zero for identical servers.
  LatencyDistribution hop(const std::string& from, const std::string& to) const;
  // Throws InvalidInput if the account is not pinned.
  const std::string& pin(const AccountId& account) const;
  // Throws ValidationError on dangling pins or empty server list.
  void validate() const;

  // The messaging-server locations observed for WhatsApp.
  static ServerTopology whatsapp_default();
};

struct Endpoint {
  AccountId account;
  AccessLink link;
};

// One-way delay src -> MSS -> MSR -> dst (a single server when the pins
// coincide). Returns nullopt when either access link is offline; the caller
// queues the message instead. Hop samples are drawn in path order.
std::optional<double> sample_path_delay(const Endpoint& src, const Endpoint& dst, const ServerTopology& topology,
                                        Rng& rng);

enum class PinStrategy { KeepCookie, Random };

template <>
struct EnumNames<PinStrategy> {
  static constexpr std::array<std::pair<PinStrategy, std::string_view>, 2> kNames{{
      {PinStrategy::KeepCookie, "KeepCookie"},
      {PinStrategy::Random, "Random"},
  }};
};

// KeepCookie keeps an existing pin (a fresh account gets a random server,
// like a first connection with an empty cookie). Random reassigns uniformly.
std::string update_routing_pin(const AccountId& account, ServerTopology& topology, PinStrategy strategy, Rng& rng);

}  // namespace ackscope
