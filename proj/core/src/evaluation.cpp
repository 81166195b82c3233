#include "ackscope/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "ackscope/errors.hpp"
#include "ackscope/exhaustion.hpp"

namespace ackscope {
namespace {

// What a band classifier can tell apart: deep sleep reads as screen off and
// the short transient after leaving the app as screen on.
ActivityState band_state(ActivityState s) {
  if (s == ActivityState::DeepSleep) return ActivityState::ScreenOff;
  if (s == ActivityState::AppBackgroundTransient) return ActivityState::ScreenOn;
  return s;
}

ActivityState reachable_state(const PlatformProfile& p) {
  if (p.device_class == DeviceClass::Phone) return ActivityState::ScreenOn;
  return ActivityState::TabActive;
}

// Sorted medians of `window` noised draws from one state.
std::vector<double> noised_medians(const LatencyDistribution& delay, const LatencyDistribution& noise, double offset,
                                   int window, Rng& rng) {
  constexpr int kDraws = 4000;
  std::vector<double> out(kDraws), w(static_cast<std::size_t>(window));
  for (auto& m : out) {
    for (auto& x : w) x = delay.sample(rng) + offset + noise.sample(rng);
    std::nth_element(w.begin(), w.begin() + window / 2, w.end());
    m = w[static_cast<std::size_t>(window / 2)];
  }
  std::sort(out.begin(), out.end());
  return out;
}

// Ordered thresholds maximising the summed per-state hit rate over a 10 ms
// grid (equal priors). Returns one boundary per adjacent pair.
std::vector<double> ordered_splits(const std::vector<std::vector<double>>& med) {
  constexpr double kBin = 10.0;
  double lo = med.front().front(), hi = med.front().back();
  for (const auto& m : med) {
    lo = std::min(lo, m.front());
    hi = std::max(hi, m.back());
  }
  const auto bins = static_cast<std::size_t>((hi - lo) / kBin) + 1;
  const std::size_t k_n = med.size();
  std::vector<std::vector<double>> prefix(k_n, std::vector<double>(bins + 1, 0.0));
  for (std::size_t k = 0; k < k_n; ++k) {
    for (double v : med[k]) prefix[k][std::min(bins - 1, static_cast<std::size_t>((v - lo) / kBin)) + 1] += 1.0;
    for (std::size_t b = 0; b < bins; ++b) prefix[k][b + 1] = prefix[k][b] + prefix[k][b + 1] / med[k].size();
  }
  // best[k][b]: bins [0, b) shared by states 0..k; arg[k][b]: where state k starts.
  std::vector<std::vector<double>> best(k_n, std::vector<double>(bins + 1, 0.0));
  std::vector<std::vector<std::size_t>> arg(k_n, std::vector<std::size_t>(bins + 1, 0));
  best[0] = prefix[0];
  for (std::size_t k = 1; k < k_n; ++k) {
    for (std::size_t b = 0; b <= bins; ++b) {
      best[k][b] = -1.0;
      for (std::size_t a = 0; a <= b; ++a) {
        const double v = best[k - 1][a] + prefix[k][b] - prefix[k][a];
        if (v > best[k][b]) {
          best[k][b] = v;
          arg[k][b] = a;
        }
      }
    }
  }
  std::vector<double> cuts(k_n - 1);
  std::size_t b = bins;
  for (std::size_t k = k_n - 1; k > 0; --k) {
    b = arg[k][b];
    cuts[k - 1] = lo + kBin * static_cast<double>(b);
  }
  return cuts;
}

std::optional<double> mean_of(const std::vector<double>& v) {
  if (v.empty()) return std::nullopt;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

std::optional<double> run_state_accuracy(const RunResult& run, const Scenario& sc,
                                         const std::optional<LatencyDistribution>& noise) {
  const auto streams = split_by_device(run.samples);
  std::vector<double> acc;
  for (const auto& cfg : sc.victim.devices) {
    const auto it = streams.find(cfg.index);
    if (it == streams.end()) continue;
    const auto model = attacker_classifier(cfg.profile, cfg.link, noise);
    const auto score = score_states(it->second, run.device(cfg.index), model);
    if (score.total > 0) acc.push_back(score.accuracy());
  }
  return mean_of(acc);
}

MessengerKind policy_for_app(const std::string& app) {
  return app == "Signal" ? MessengerKind::SignalLike : MessengerKind::WhatsAppLike;
}

}  // namespace

StateScore score_states(const std::vector<RttSample>& stream, const DeviceTruth& truth,
                        const StateClassifierModel& model) {
  const auto acked = acked_samples(stream);
  const auto labels = label_samples(acked, model);
  std::map<std::uint64_t, std::optional<ActivityState>> by_probe;
  for (std::size_t i = 0; i < acked.size(); ++i) by_probe[acked[i].probe_id.sequence] = labels[i];

  StateScore score;
  for (const auto& s : stream) {
    if (s.rejected || !truth.online_at(s.send_at)) continue;
    ++score.total;
    const auto it = by_probe.find(s.probe_id.sequence);
    if (it != by_probe.end() && it->second == band_state(truth.scripted_at(s.send_at))) ++score.correct;
  }
  return score;
}

std::vector<std::optional<Millis>> transition_lags(const DeviceTruth& truth, const std::vector<Segment>& activity) {
  std::vector<std::optional<Millis>> out;
  std::optional<ActivityState> prev;
  for (const auto& c : truth.history) {
    const ActivityState cur = c.link == LinkTech::Offline ? ActivityState::Offline : band_state(c.scripted);
    if (prev && *prev != cur && *prev != ActivityState::Offline && cur != ActivityState::Offline) {
      std::optional<Millis> best;
      for (std::size_t i = 1; i < activity.size(); ++i) {
        if (activity[i].label != SegmentLabel(cur) || activity[i - 1].label == SegmentLabel(cur)) continue;
        const Millis d = std::abs(activity[i].start_ms - c.at);
        if (!best || d < *best) best = d;
      }
      out.push_back(best);
    }
    prev = cur;
  }
  return out;
}

StateClassifierModel attacker_classifier(const PlatformProfile& profile, LinkTech link,
                                         const std::optional<LatencyDistribution>& noise) {
  const double shift = noise ? noise->mean() : 0.0;
  const double offset = nominal_network_offset_ms(link);
  auto model = StateClassifierModel::from_profile(profile, offset + shift);
  if (!noise) return model;
  model.bands.back().high_ms += 4.0 * noise->stddev();
  // Midpoints are a poor split once the noise dwarfs the state spread.
  Rng rng(0x6e6f697365);
  std::vector<std::vector<double>> med;
  for (const auto& b : model.bands)
    med.push_back(noised_medians(profile.delay_by_state.at(b.label), *noise, offset, model.smoothing_window, rng));
  const auto cuts = ordered_splits(med);
  for (std::size_t i = 0; i < cuts.size(); ++i) {
    const double t = std::max(cuts[i], model.bands[i].low_ms + 1.0);
    model.bands[i].high_ms = t;
    model.bands[i + 1].low_ms = t;
  }
  model.bands.back().high_ms = std::max(model.bands.back().high_ms, med.back().back() + 1.0);
  return model;
}

FingerprintTrial run_fingerprint_trial(const OrderingRow& row, const MitigationConfig& config, std::uint64_t seed,
                                       int backlog) {
  if (backlog < 1) throw InvalidInput("backlog must be >= 1");
  const PlatformProfile* base = nullptr;
  for (const auto& p : ProfileCatalog::builtin().profiles()) {
    if (p.app == row.app && p.os == row.platform) {
      base = &p;
      break;
    }
  }
  if (!base) throw InvalidInput("no profile for " + row.label());

  constexpr Millis kInterval = 2 * kSecond;
  Scenario sc;
  sc.name = "fingerprint " + row.label();
  sc.seed = seed;
  sc.policy = MessengerPolicy::preset(policy_for_app(row.app));
  sc.mitigations = config;
  ProbeSchedule s;
  s.kind = ProbeKind::InvalidRefReaction;
  s.interval_ms = kInterval;
  s.duration_s = static_cast<double>(backlog) * kInterval / 1000.0;
  sc.attacker.schedules.push_back(s);
  DeviceConfig d;
  d.index = sc.policy.main_device_index;
  d.profile = *base;
  d.profile.stacking = row.delivery;
  d.profile.read_stacking = row.read;
  d.initial = ActivityState::Offline;
  ScriptEntry back;
  back.at = static_cast<SimTime>(backlog) * kInterval + kSecond;
  back.state = reachable_state(*base);
  d.script.push_back(back);
  sc.victim.devices.push_back(d);
  sc.end_at = back.at + 30 * kSecond;

  const RunResult run = run_scenario(sc);
  FingerprintTrial trial;
  trial.truth = row;
  const auto table = mitigate_ordering_table(config);
  const auto flushes = find_backlog_flushes(run.receipts, run.samples);
  if (flushes.empty()) {
    trial.fingerprint.candidates = table;
  } else {
    const auto& f = flushes.front();
    trial.fingerprint = fingerprint_platform(f.events, f.sent_order, ReceiptColumn::Delivery, table);
  }
  const auto& c = trial.fingerprint.candidates;
  // Rows are compared by what the attacker can name, not by the policy
  // values a countermeasure may have rewritten.
  const bool found = std::any_of(c.begin(), c.end(), [&](const OrderingRow& r) {
    return r.app == row.app && r.platform == row.platform;
  });
  trial.success = found && c.size() < table.size();
  return trial;
}

std::optional<double> online_detect_error_s(const RunResult& run, DeviceIndex index) {
  const DeviceTruth& truth = run.device(index);
  std::vector<RttSample> stream;
  for (const auto& s : run.samples) {
    if (s.device_index == index) stream.push_back(s);
  }
  const auto segments = detect_online_intervals(stream);
  std::vector<std::pair<SimTime, Presence>> changes;
  std::optional<bool> prev;
  for (const auto& c : truth.history) {
    const bool on = truth.online_at(c.at);
    if (prev && *prev != on) changes.emplace_back(c.at, on ? Presence::Online : Presence::Offline);
    prev = on;
  }
  if (changes.empty()) return std::nullopt;
  std::vector<double> errs;
  for (const auto& [at, p] : changes) {
    double best = static_cast<double>(std::max<SimTime>(run.end_at - at, 0));
    for (std::size_t i = 1; i < segments.size(); ++i) {
      if (segments[i].label != SegmentLabel(p)) continue;
      best = std::min(best, static_cast<double>(std::abs(segments[i].start_ms - at)));
    }
    errs.push_back(best / 1000.0);
  }
  return mean_of(errs);
}

MitigationMetrics measure(const Scenario& scenario, const MitigationConfig& config) {
  Scenario sc = scenario;
  sc.mitigations = config;
  const RunResult run = run_scenario(sc);

  MitigationMetrics m;
  m.state_accuracy = run_state_accuracy(run, sc, config.receipt_delay_noise);

  std::vector<double> errs;
  for (const auto& d : sc.victim.devices) {
    if (auto e = online_detect_error_s(run, d.index)) errs.push_back(*e);
  }
  m.online_detect_error_s = mean_of(errs);

  const auto& rows = receipt_ordering_table();
  int ok = 0;
  for (const auto& row : rows) ok += run_fingerprint_trial(row, config, sc.seed).success ? 1 : 0;
  m.fingerprint_success = static_cast<double>(ok) / static_cast<double>(rows.size());

  ExhaustionPlan plan;
  plan.policy = sc.policy.name;
  plan.kind = ProbeKind::InvalidRefReaction;
  plan.payload_bytes = std::min<std::int64_t>(1'000'000, sc.policy.payload_limit(plan.kind));
  plan.duration_s = 600;
  plan.limiter = config.rate_limit;
  plan.mitigations = config;
  if (sc.policy.supported_kinds.contains(plan.kind) && plan.payload_bytes > 0) {
    m.exhaustion_mb_per_h = run_exhaustion(plan, sc.victim.devices.front().profile, sc.seed).observed_mb_per_h;
  }

  std::int64_t acked_ids = 0;
  for (const auto& r : run.receipts) {
    if (r.kind == ReceiptKind::DeviceAck) acked_ids += static_cast<std::int64_t>(r.probe_ids.size());
  }
  const std::int64_t accepted = run.probes_sent - run.probes_rejected;
  m.acks_per_probe = accepted > 0 ? static_cast<double>(acked_ids) / static_cast<double>(accepted) : 0.0;
  m.observable_samples = std::count_if(run.samples.begin(), run.samples.end(),
                                       [](const RttSample& s) { return s.device_ack_at.has_value(); });
  m.ui_notifications = run.ui_notifications;
  return m;
}

MitigationEvaluation evaluate_mitigation(const Scenario& scenario, const MitigationConfig& config) {
  return {measure(scenario, MitigationConfig{}), measure(scenario, config)};
}

std::vector<NoisePoint> noise_sweep(const Scenario& scenario, const std::vector<Millis>& levels) {
  std::vector<NoisePoint> out;
  for (Millis level : levels) {
    if (level < 0) throw InvalidInput("noise level must be >= 0");
    Scenario sc = scenario;
    sc.mitigations = MitigationConfig{};
    if (level > 0) sc.mitigations.receipt_delay_noise = LatencyDistribution::uniform(0.0, static_cast<double>(level));
    const RunResult run = run_scenario(sc);
    out.push_back({level, run_state_accuracy(run, sc, sc.mitigations.receipt_delay_noise).value_or(0.0)});
  }
  return out;
}

nlohmann::json to_json(const MitigationMetrics& m) {
  auto opt = [](const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); };
  return {{"state_accuracy", opt(m.state_accuracy)},
          {"online_detect_error_s", opt(m.online_detect_error_s)},
          {"fingerprint_success", m.fingerprint_success},
          {"exhaustion_mb_per_h", m.exhaustion_mb_per_h},
          {"acks_per_probe", m.acks_per_probe},
          {"observable_samples", m.observable_samples},
          {"ui_notifications", m.ui_notifications}};
}

}  // namespace ackscope
