#include "ackscope/netmodel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ackscope/errors.hpp"

namespace ackscope {

LatencyDistribution LatencyDistribution::constant(double ms) {
  if (ms < 0) throw InvalidInput("constant latency must be >= 0");
  LatencyDistribution d;
  d.kind_ = DistributionKind::Constant;
  d.mean_ = ms;
  d.min_ms_ = std::min(ms, 0.0);
  return d;
}

LatencyDistribution LatencyDistribution::normal(double mean_ms, double stddev_ms, double min_ms) {
  if (stddev_ms < 0 || min_ms < 0) throw InvalidInput("normal latency needs stddev >= 0 and min >= 0");
  LatencyDistribution d;
  d.kind_ = DistributionKind::Normal;
  d.mean_ = mean_ms;
  d.stddev_ = stddev_ms;
  d.min_ms_ = min_ms;
  return d;
}

LatencyDistribution LatencyDistribution::lognormal(double mean_ms, double stddev_ms, double min_ms) {
  if (mean_ms <= 0 || stddev_ms < 0 || min_ms < 0) {
    throw InvalidInput("lognormal latency needs mean > 0, stddev >= 0, min >= 0");
  }
  LatencyDistribution d;
  d.kind_ = DistributionKind::LogNormal;
  d.mean_ = mean_ms;
  d.stddev_ = stddev_ms;
  d.min_ms_ = min_ms;
  const double ratio = stddev_ms / mean_ms;
  d.log_sigma_ = std::sqrt(std::log1p(ratio * ratio));
  d.log_mu_ = std::log(mean_ms) - 0.5 * d.log_sigma_ * d.log_sigma_;
  return d;
}

LatencyDistribution LatencyDistribution::uniform(double low_ms, double high_ms) {
  if (low_ms < 0 || high_ms < low_ms) throw InvalidInput("uniform latency needs 0 <= low <= high");
  LatencyDistribution d;
  d.kind_ = DistributionKind::Uniform;
  d.low_ = low_ms;
  d.high_ = high_ms;
  d.mean_ = 0.5 * (low_ms + high_ms);
  d.stddev_ = (high_ms - low_ms) / std::sqrt(12.0);
  d.min_ms_ = low_ms;
  return d;
}

LatencyDistribution LatencyDistribution::empirical(std::vector<double> table_ms, double min_ms) {
  if (table_ms.empty()) throw InvalidInput("empirical latency table must not be empty");
  if (min_ms < 0) throw InvalidInput("min must be >= 0");
  LatencyDistribution d;
  d.kind_ = DistributionKind::Empirical;
  d.min_ms_ = min_ms;
  const double n = static_cast<double>(table_ms.size());
  d.mean_ = std::accumulate(table_ms.begin(), table_ms.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : table_ms) ss += (v - d.mean_) * (v - d.mean_);
  d.stddev_ = std::sqrt(ss / n);
  d.table_ = std::move(table_ms);
  return d;
}

double LatencyDistribution::sample(Rng& rng, double jitter_scale) const {
  double x = mean_;
  switch (kind_) {
    case DistributionKind::Constant:
      return mean_;
    case DistributionKind::Normal:
      x = mean_ + stddev_ * rng.normal();
      break;
    case DistributionKind::LogNormal:
      x = std::exp(log_mu_ + log_sigma_ * rng.normal());
      break;
    case DistributionKind::Uniform:
      x = rng.uniform(low_, high_);
      break;
    case DistributionKind::Empirical:
      x = table_[rng.index(table_.size())];
      break;
  }
  x = mean_ + jitter_scale * (x - mean_);
  return std::max(x, min_ms_);
}

double LatencyDistribution::mean() const { return mean_; }

double LatencyDistribution::stddev() const { return stddev_; }

AccessLink AccessLink::preset(LinkTech tech) {
  AccessLink link;
  link.tech = tech;
  switch (tech) {
    case LinkTech::LAN:
      link.up = link.down = LatencyDistribution::lognormal(15.0, 1.5, 1.0);
      link.jitter_scale = 0.5;
      break;
    case LinkTech::WiFi:
      link.up = link.down = LatencyDistribution::lognormal(25.0, 6.0, 2.0);
      link.jitter_scale = 1.0;
      break;
    case LinkTech::LTE:
      link.up = link.down = LatencyDistribution::lognormal(70.0, 5.0, 20.0);
      link.jitter_scale = 0.8;
      break;
    case LinkTech::Offline:
      link.up = link.down = LatencyDistribution::constant(0.0);
      link.jitter_scale = 0.0;
      break;
  }
  return link;
}

AccessLink AccessLink::attacker_default() {
  AccessLink link;
  link.tech = LinkTech::LAN;
  link.up = link.down = LatencyDistribution::lognormal(25.0, 1.0, 1.0);
  link.jitter_scale = 1.0;
  return link;
}

bool ServerTopology::has_server(const std::string& label) const {
  return std::find(messaging_servers.begin(), messaging_servers.end(), label) != messaging_servers.end();
}

LatencyDistribution ServerTopology::hop(const std::string& from, const std::string& to) const {
  if (from == to) return LatencyDistribution::constant(0.0);
  if (auto it = hop_latency.find({from, to}); it != hop_latency.end()) return it->second;
  if (auto it = hop_latency.find({to, from}); it != hop_latency.end()) return it->second;
  return default_cross_server;
}

const std::string& ServerTopology::pin(const AccountId& account) const {
  auto it = routing_pins.find(account);
  if (it == routing_pins.end()) throw InvalidInput("account '" + account.value + "' has no routing pin");
  return it->second;
}

void ServerTopology::validate() const {
  if (messaging_servers.empty()) throw ValidationError("topology: no messaging servers");
  for (const auto& [account, label] : routing_pins) {
    if (!has_server(label)) {
      throw ValidationError("topology: account '" + account.value + "' pinned to unknown server '" + label + "'");
    }
  }
  for (const auto& [key, dist] : hop_latency) {
    if (!has_server(key.first) || !has_server(key.second)) {
      throw ValidationError("topology: hop " + key.first + "->" + key.second + " names an unknown server");
    }
  }
  if (conditions.loss_probability < 0 || conditions.loss_probability >= 1) {
    throw ValidationError("topology: loss probability must be in [0, 1)");
  }
}

ServerTopology ServerTopology::whatsapp_default() {
  ServerTopology t;
  t.messaging_servers = {"odn", "cln", "lla", "frc", "atn", "nao", "rva", "vll", "cco"};
  t.default_cross_server = LatencyDistribution::lognormal(40.0, 3.0, 5.0);
  return t;
}

std::optional<double> sample_path_delay(const Endpoint& src, const Endpoint& dst, const ServerTopology& topology,
                                        Rng& rng) {
  if (!src.link.reachable() || !dst.link.reachable()) return std::nullopt;
  const std::string& mss = topology.pin(src.account);
  const std::string& msr = topology.pin(dst.account);
  double total = src.link.up.sample(rng, src.link.jitter_scale);
  if (mss != msr) total += topology.hop(mss, msr).sample(rng);
  total += dst.link.down.sample(rng, dst.link.jitter_scale);
  return total;
}

std::string update_routing_pin(const AccountId& account, ServerTopology& topology, PinStrategy strategy, Rng& rng) {
  if (topology.messaging_servers.empty()) throw InvalidInput("topology has no messaging servers");
  if (strategy == PinStrategy::KeepCookie) {
    if (auto it = topology.routing_pins.find(account); it != topology.routing_pins.end()) return it->second;
  }
  const std::string& chosen = topology.messaging_servers[rng.index(topology.messaging_servers.size())];
  topology.routing_pins[account] = chosen;
  return chosen;
}

}  // namespace ackscope
