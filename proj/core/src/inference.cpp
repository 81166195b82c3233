#include "ackscope/inference.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <set>

#include "ackscope/errors.hpp"

namespace ackscope {
namespace {

double median_of(std::vector<double> v) {
  if (v.empty()) return 0.0;
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lo + hi);
}

double rtt_of(const RttSample& s) { return static_cast<double>(*s.device_rtt_ms()); }

std::vector<RttSample> sorted_by_send(std::vector<RttSample> v) {
  std::stable_sort(v.begin(), v.end(), [](const RttSample& a, const RttSample& b) { return a.send_at < b.send_at; });
  return v;
}

void push_segment(std::vector<Segment>& out, SimTime start, SimTime end, SegmentLabel label, double confidence) {
  if (end <= start) return;
  if (!out.empty() && out.back().label == label && out.back().end_ms == start) {
    out.back().end_ms = end;
    return;
  }
  out.push_back({start, end, label, confidence});
}

std::optional<StackingPolicy> as_policy(ObservedStacking o) {
  switch (o) {
    case ObservedStacking::Separate: return StackingPolicy::Separate;
    case ObservedStacking::Stacked: return StackingPolicy::Stacked;
    case ObservedStacking::StackedReversed: return StackingPolicy::StackedReversed;
    case ObservedStacking::StackedRandom: return StackingPolicy::StackedRandom;
    case ObservedStacking::Indeterminate: break;
  }
  return std::nullopt;
}

}  // namespace

std::string label_name(const SegmentLabel& label) {
  return std::visit([](auto v) { return std::string(to_string(v)); }, label);
}

SegmentLabel parse_label(std::string_view text) {
  for (const auto& [v, name] : EnumNames<Presence>::kNames) {
    if (name == text) return v;
  }
  return parse_enum<ActivityState>(text);
}

void check_segments(const std::vector<Segment>& segments) {
  for (std::size_t i = 0; i < segments.size(); ++i) {
    if (segments[i].end_ms < segments[i].start_ms) throw InvalidInput("segment ends before it starts");
    if (i > 0 && segments[i].start_ms < segments[i - 1].end_ms) throw InvalidInput("segments overlap");
  }
}

Millis estimate_probe_interval(const std::vector<RttSample>& stream) {
  std::set<SimTime> sends;
  for (const auto& s : stream) sends.insert(s.send_at);
  if (sends.size() < 2) return 0;
  std::vector<double> gaps;
  for (auto it = std::next(sends.begin()); it != sends.end(); ++it) {
    gaps.push_back(static_cast<double>(*it - *std::prev(it)));
  }
  return static_cast<Millis>(std::llround(median_of(gaps)));
}

std::vector<Segment> detect_online_intervals(const std::vector<RttSample>& input,
                                             std::optional<Millis> gap_threshold_ms) {
  const auto stream = sorted_by_send(input);
  if (stream.empty()) return {Segment{0, 0, Presence::Unknown, 0.0}};
  const SimTime t0 = stream.front().send_at;
  const SimTime tend = stream.back().send_at + 1;

  Millis threshold = gap_threshold_ms.value_or(3 * estimate_probe_interval(stream));
  if (threshold <= 0) threshold = 3 * kSecond;

  std::vector<double> prompt_rtts;
  for (const auto& s : stream) {
    if (s.device_ack_at && *s.device_rtt_ms() <= threshold) prompt_rtts.push_back(rtt_of(s));
  }
  const auto typical = static_cast<Millis>(std::llround(median_of(prompt_rtts)));

  std::vector<SimTime> evidence;
  for (const auto& s : stream) {
    if (!s.device_ack_at) continue;
    // A late ack only shows the device was up shortly before it arrived. Acks
    // from the tail of a backlog can still look prompt, so no ack is trusted
    // to date from its send time.
    evidence.push_back(std::max(s.send_at, *s.device_ack_at - typical));
  }
  if (evidence.empty()) return {Segment{t0, tend, Presence::Unknown, 0.0}};
  std::sort(evidence.begin(), evidence.end());

  auto first_send_after = [&](SimTime t) {
    auto it = std::upper_bound(stream.begin(), stream.end(), t,
                               [](SimTime v, const RttSample& s) { return v < s.send_at; });
    return it == stream.end() ? tend : it->send_at;
  };

  struct Span {
    SimTime start, end;
    Presence p;
  };
  std::vector<Span> spans;
  SimTime online_from = t0;
  if (evidence.front() - t0 > threshold) {
    spans.push_back({t0, evidence.front(), Presence::Offline});
    online_from = evidence.front();
  }
  for (std::size_t i = 0; i + 1 < evidence.size(); ++i) {
    if (evidence[i + 1] - evidence[i] <= threshold) continue;
    const SimTime off = std::min(first_send_after(evidence[i]), evidence[i + 1]);
    spans.push_back({online_from, off, Presence::Online});
    spans.push_back({off, evidence[i + 1], Presence::Offline});
    online_from = evidence[i + 1];
  }
  const SimTime last_send = stream.back().send_at;
  if (last_send - evidence.back() > threshold) {
    const SimTime off = std::min(first_send_after(evidence.back()), tend);
    spans.push_back({online_from, off, Presence::Online});
    spans.push_back({off, tend, Presence::Offline});
  } else {
    spans.push_back({online_from, std::max(tend, evidence.back() + 1), Presence::Online});
  }

  std::vector<Segment> out;
  for (const auto& sp : spans) {
    if (sp.end <= sp.start) continue;
    std::size_t n = 0, agree = 0;
    for (const auto& s : stream) {
      if (s.send_at < sp.start || s.send_at >= sp.end) continue;
      ++n;
      const bool prompt = s.device_ack_at && *s.device_rtt_ms() <= threshold;
      if ((sp.p == Presence::Online) == prompt) ++agree;
    }
    const double conf = n ? static_cast<double>(agree) / static_cast<double>(n) : 1.0;
    push_segment(out, sp.start, sp.end, sp.p, conf);
  }
  return out;
}

void StateClassifierModel::validate() const {
  if (smoothing_window < 1 || smoothing_window % 2 == 0) throw InvalidInput("smoothing window must be odd and >= 1");
  if (method == ClassifierMethod::ThresholdBands) {
    if (bands.empty()) throw InvalidInput("classifier has no bands");
    auto sorted = bands;
    std::sort(sorted.begin(), sorted.end(),
              [](const Band& a, const Band& b) { return a.low_ms + a.high_ms < b.low_ms + b.high_ms; });
    for (std::size_t i = 0; i < sorted.size(); ++i) {
      if (!(sorted[i].low_ms < sorted[i].high_ms)) throw InvalidInput("band with low >= high");
      if (i > 0 && sorted[i].low_ms < sorted[i - 1].high_ms) throw InvalidInput("classifier bands overlap");
    }
  } else {
    if (components.size() < 2) throw InvalidInput("mixture needs two components");
    for (const auto& c : components) {
      if (!(c.log_sd > 0) || !(c.weight > 0)) throw InvalidInput("degenerate mixture component");
    }
  }
}

std::optional<ActivityState> StateClassifierModel::label_for(double rtt_ms) const {
  if (method == ClassifierMethod::ThresholdBands) {
    for (const auto& b : bands) {
      if (rtt_ms >= b.low_ms && rtt_ms < b.high_ms) return b.label;
    }
    return std::nullopt;
  }
  const double x = std::log(std::max(rtt_ms, 1.0));
  double best = -std::numeric_limits<double>::infinity();
  std::optional<ActivityState> label;
  for (const auto& c : components) {
    const double z = (x - c.log_mean) / c.log_sd;
    const double ll = std::log(c.weight) - std::log(c.log_sd) - 0.5 * z * z;
    if (ll > best) {
      best = ll;
      label = c.label;
    }
  }
  return label;
}

const Band* StateClassifierModel::band_for(ActivityState label) const {
  for (const auto& b : bands) {
    if (b.label == label) return &b;
  }
  return nullptr;
}

StateClassifierModel StateClassifierModel::from_profile(const PlatformProfile& profile, double network_offset_ms) {
  std::vector<ActivityState> states;
  if (profile.device_class == DeviceClass::Phone) {
    states = {ActivityState::AppForeground, ActivityState::ScreenOn, ActivityState::ScreenOff};
  } else {
    states = {ActivityState::TabActive, ActivityState::TabBackground};
  }
  std::vector<std::pair<double, ActivityState>> means;
  for (auto s : states) {
    if (profile.has_state(s)) means.emplace_back(profile.delay_by_state.at(s).mean(), s);
  }
  if (means.empty()) throw InvalidInput("profile '" + profile.name + "' has no classifiable states");
  std::sort(means.begin(), means.end());

  double top = 0.0;
  for (const auto& [state, dist] : profile.delay_by_state) {
    if (state != ActivityState::Offline) top = std::max(top, dist.mean() + 6.0 * dist.stddev());
  }

  StateClassifierModel m;
  m.method = ClassifierMethod::ThresholdBands;
  double low = 0.0;
  for (std::size_t i = 0; i < means.size(); ++i) {
    const double high =
        i + 1 < means.size() ? network_offset_ms + 0.5 * (means[i].first + means[i + 1].first) : network_offset_ms + top;
    m.bands.push_back({means[i].second, low, high});
    low = high;
  }
  return m;
}

StateClassifierModel StateClassifierModel::fit_mixture(const std::vector<double>& rtts_ms, ActivityState low,
                                                       ActivityState high, int smoothing_window) {
  if (rtts_ms.size() < 4) throw InvalidInput("mixture fit needs at least 4 samples");
  std::vector<double> x;
  for (double v : rtts_ms) x.push_back(std::log(std::max(v, 1.0)));
  std::vector<double> sorted = x;
  std::sort(sorted.begin(), sorted.end());
  const double spread = std::max(sorted.back() - sorted.front(), 1e-3);
  double w[2] = {0.5, 0.5};
  double mu[2] = {sorted[sorted.size() / 4], sorted[3 * sorted.size() / 4]};
  double sd[2] = {spread / 4, spread / 4};
  const double floor_sd = 1e-3;
  std::vector<double> r(x.size());
  for (int iter = 0; iter < 200; ++iter) {
    for (std::size_t i = 0; i < x.size(); ++i) {
      double p[2];
      for (int k = 0; k < 2; ++k) {
        const double z = (x[i] - mu[k]) / sd[k];
        p[k] = w[k] / sd[k] * std::exp(-0.5 * z * z);
      }
      const double tot = p[0] + p[1];
      r[i] = tot > 0 ? p[1] / tot : (x[i] > 0.5 * (mu[0] + mu[1]) ? 1.0 : 0.0);
    }
    double n1 = std::accumulate(r.begin(), r.end(), 0.0);
    double n0 = static_cast<double>(x.size()) - n1;
    if (n0 < 1e-9 || n1 < 1e-9) break;
    double s0 = 0, s1 = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      s0 += (1 - r[i]) * x[i];
      s1 += r[i] * x[i];
    }
    mu[0] = s0 / n0;
    mu[1] = s1 / n1;
    double v0 = 0, v1 = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      v0 += (1 - r[i]) * (x[i] - mu[0]) * (x[i] - mu[0]);
      v1 += r[i] * (x[i] - mu[1]) * (x[i] - mu[1]);
    }
    sd[0] = std::max(std::sqrt(v0 / n0), floor_sd);
    sd[1] = std::max(std::sqrt(v1 / n1), floor_sd);
    w[0] = n0 / static_cast<double>(x.size());
    w[1] = n1 / static_cast<double>(x.size());
  }
  const int lo = mu[0] <= mu[1] ? 0 : 1;
  StateClassifierModel m;
  m.method = ClassifierMethod::TwoComponentMixture;
  m.smoothing_window = smoothing_window;
  m.components = {{low, w[lo], mu[lo], sd[lo]}, {high, w[1 - lo], mu[1 - lo], sd[1 - lo]}};
  return m;
}

double nominal_network_offset_ms(LinkTech victim_link) {
  const auto attacker = AccessLink::attacker_default();
  const auto victim = AccessLink::preset(victim_link);
  const auto cross = ServerTopology::whatsapp_default().default_cross_server;
  return attacker.up.mean() + attacker.down.mean() + 2.0 * cross.mean() + victim.up.mean() + victim.down.mean();
}

std::vector<double> median_filter(const std::vector<double>& values, int window) {
  if (window < 1 || window % 2 == 0) throw InvalidInput("median window must be odd and >= 1");
  const std::size_t h = static_cast<std::size_t>(window / 2);
  std::vector<double> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    const std::size_t lo = i >= h ? i - h : 0;
    const std::size_t hi = std::min(values.size(), i + h + 1);
    out[i] = median_of(std::vector<double>(values.begin() + static_cast<std::ptrdiff_t>(lo),
                                           values.begin() + static_cast<std::ptrdiff_t>(hi)));
  }
  return out;
}

std::vector<RttSample> acked_samples(const std::vector<RttSample>& stream) {
  std::vector<RttSample> out;
  for (const auto& s : stream) {
    if (s.device_ack_at && !s.rejected) out.push_back(s);
  }
  return sorted_by_send(std::move(out));
}

std::vector<std::optional<ActivityState>> label_samples(const std::vector<RttSample>& stream,
                                                        const StateClassifierModel& model) {
  model.validate();
  const auto acked = acked_samples(stream);
  std::vector<double> raw;
  for (const auto& s : acked) raw.push_back(rtt_of(s));
  const auto smooth = median_filter(raw, model.smoothing_window);
  std::vector<std::optional<ActivityState>> out;
  for (double v : smooth) out.push_back(model.label_for(v));
  return out;
}

std::vector<Segment> classify_states(const std::vector<RttSample>& stream, const StateClassifierModel& model_in,
                                     const PlatformProfile* profile_hint) {
  StateClassifierModel model = model_in;
  if (model.method == ClassifierMethod::ThresholdBands && model.bands.empty() && profile_hint) {
    const int window = model.smoothing_window;
    model = StateClassifierModel::from_profile(*profile_hint, nominal_network_offset_ms());
    model.smoothing_window = window;
  }
  model.validate();
  const auto acked = acked_samples(stream);
  if (acked.size() < static_cast<std::size_t>(model.smoothing_window)) {
    throw InvalidInput("classify_states needs at least " + std::to_string(model.smoothing_window) + " acked samples");
  }
  const auto labels = label_samples(acked, model);

  std::vector<Segment> out;
  std::size_t i = 0;
  while (i < acked.size()) {
    std::size_t j = i;
    while (j < acked.size() && labels[j] == labels[i]) ++j;
    const SimTime start = acked[i].send_at;
    const SimTime end = j < acked.size() ? acked[j].send_at : acked.back().send_at + 1;
    std::size_t agree = 0;
    for (std::size_t k = i; k < j; ++k) {
      const auto raw = model.label_for(rtt_of(acked[k]));
      if (raw == labels[i]) ++agree;
    }
    const double conf = static_cast<double>(agree) / static_cast<double>(j - i);
    SegmentLabel label = labels[i] ? SegmentLabel(*labels[i]) : SegmentLabel(Presence::Unknown);
    out.push_back({start, end, label, conf});
    i = j;
  }
  return out;
}

std::vector<std::size_t> pelt_change_points(const std::vector<double>& values, double penalty, std::size_t min_size) {
  const std::size_t n = values.size();
  min_size = std::max<std::size_t>(min_size, 1);
  if (n < 2 * min_size) return {};
  std::vector<double> s1(n + 1, 0.0), s2(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    s1[i + 1] = s1[i] + values[i];
    s2[i + 1] = s2[i] + values[i] * values[i];
  }
  auto cost = [&](std::size_t a, std::size_t b) {
    const double len = static_cast<double>(b - a);
    const double sum = s1[b] - s1[a];
    return (s2[b] - s2[a]) - sum * sum / len;
  };
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> F(n + 1, inf);
  std::vector<std::size_t> last(n + 1, 0);
  F[0] = -penalty;
  std::vector<std::size_t> candidates{0};
  for (std::size_t t = 1; t <= n; ++t) {
    double best = inf;
    std::size_t arg = 0;
    for (std::size_t s : candidates) {
      if (t - s < min_size) continue;
      const double v = F[s] + cost(s, t) + penalty;
      if (v < best) {
        best = v;
        arg = s;
      }
    }
    F[t] = best;
    last[t] = arg;
    std::vector<std::size_t> kept;
    for (std::size_t s : candidates) {
      if (t - s < min_size || F[s] + cost(s, t) <= F[t]) kept.push_back(s);
    }
    if (F[t] < inf) kept.push_back(t);
    candidates.swap(kept);
  }
  std::vector<std::size_t> cps;
  for (std::size_t t = n; t > 0; t = last[t]) {
    if (last[t] > 0) cps.push_back(last[t]);
  }
  std::reverse(cps.begin(), cps.end());
  return cps;
}

std::vector<LevelSegment> segment_levels(const std::vector<RttSample>& stream, double penalty_scale,
                                         std::size_t min_size) {
  // Acks released by a backlog flush say nothing about the level: drop every
  // ack that arrives with (or just after) one that waited too long.
  const auto all = acked_samples(stream);
  const Millis threshold = std::max<Millis>(3 * estimate_probe_interval(stream), 1);
  std::vector<SimTime> late;
  for (const auto& s : all) {
    if (*s.device_rtt_ms() > threshold) late.push_back(*s.device_ack_at);
  }
  std::sort(late.begin(), late.end());
  std::vector<RttSample> acked;
  for (const auto& s : all) {
    auto it = std::upper_bound(late.begin(), late.end(), *s.device_ack_at);
    if (it != late.begin() && *s.device_ack_at - *std::prev(it) <= kSecond) continue;
    acked.push_back(s);
  }
  std::vector<double> v;
  for (const auto& s : acked) v.push_back(rtt_of(s));
  if (v.empty()) return {};
  double sigma = 1.0;
  if (v.size() > 2) {
    std::vector<double> d;
    for (std::size_t i = 1; i < v.size(); ++i) d.push_back(v[i] - v[i - 1]);
    const double med = median_of(d);
    for (double& x : d) x = std::abs(x - med);
    sigma = std::max(median_of(d) / (0.6745 * std::sqrt(2.0)), 1.0);
  }
  const double penalty = penalty_scale * sigma * sigma * std::log(static_cast<double>(std::max<std::size_t>(v.size(), 2)));
  auto cps = pelt_change_points(v, penalty, min_size);
  cps.push_back(v.size());

  std::vector<LevelSegment> out;
  std::size_t begin = 0;
  for (std::size_t end : cps) {
    LevelSegment seg;
    seg.begin = begin;
    seg.end = end;
    seg.start_ms = acked[begin].send_at;
    seg.end_ms = end < acked.size() ? acked[end].send_at : acked.back().send_at + 1;
    const double len = static_cast<double>(end - begin);
    seg.mean_ms = std::accumulate(v.begin() + static_cast<std::ptrdiff_t>(begin),
                                  v.begin() + static_cast<std::ptrdiff_t>(end), 0.0) / len;
    double ss = 0.0;
    for (std::size_t i = begin; i < end; ++i) ss += (v[i] - seg.mean_ms) * (v[i] - seg.mean_ms);
    seg.sd_ms = len > 1 ? std::sqrt(ss / (len - 1)) : 0.0;
    out.push_back(seg);
    begin = end;
  }
  if (out.size() >= 3) {
    std::vector<double> sds, means;
    for (const auto& s : out) {
      sds.push_back(s.sd_ms);
      means.push_back(s.mean_ms);
    }
    const double med_sd = median_of(sds);
    const double med_mean = median_of(means);
    for (auto& s : out) s.high_activity = s.sd_ms <= 0.7 * med_sd && s.mean_ms < med_mean;
  }
  return out;
}

std::string OrderingRow::label() const { return app + "/" + std::string(to_string(platform)); }

const std::vector<OrderingRow>& receipt_ordering_table() {
  using P = StackingPolicy;
  static const std::vector<OrderingRow> rows = {
      {"WhatsApp", PlatformKind::Android, P::Separate, P::Stacked},
      {"WhatsApp", PlatformKind::iOS, P::Separate, P::StackedReversed},
      {"WhatsApp", PlatformKind::Web, P::Stacked, P::Stacked},
      {"WhatsApp", PlatformKind::Windows, P::Stacked, P::Stacked},
      {"WhatsApp", PlatformKind::macOS, P::StackedReversed, P::StackedReversed},
      {"Signal", PlatformKind::Android, P::Separate, P::Stacked},
      {"Signal", PlatformKind::iOS, P::Separate, P::StackedRandom},
      {"Signal", PlatformKind::Desktop, P::Stacked, P::StackedReversed},
  };
  return rows;
}

std::vector<OrderingRow> harmonized_table(StackingPolicy policy) {
  auto rows = receipt_ordering_table();
  for (auto& r : rows) r.delivery = r.read = policy;
  return rows;
}

ObservedStacking observe_stacking(const std::vector<ReceiptEvent>& flush_events, const std::vector<ProbeId>& sent_order) {
  std::map<ProbeId, std::size_t> position;
  for (std::size_t i = 0; i < sent_order.size(); ++i) position[sent_order[i]] = i;
  std::vector<std::vector<std::size_t>> events;
  std::set<std::size_t> seen;
  for (const auto& e : flush_events) {
    std::vector<std::size_t> ids;
    for (const auto& id : e.probe_ids) {
      if (auto it = position.find(id); it != position.end()) {
        ids.push_back(it->second);
        seen.insert(it->second);
      }
    }
    if (!ids.empty()) events.push_back(std::move(ids));
  }
  const std::size_t n = seen.size();
  if (n < 2) return ObservedStacking::Indeterminate;
  if (events.size() == n && std::all_of(events.begin(), events.end(), [](const auto& e) { return e.size() == 1; })) {
    return ObservedStacking::Separate;
  }
  if (events.size() != 1 || events.front().size() != n) return ObservedStacking::Indeterminate;
  // Two ids cannot tell a fixed order from a shuffle.
  if (n < 3) return ObservedStacking::Indeterminate;
  const auto& ids = events.front();
  if (std::is_sorted(ids.begin(), ids.end())) return ObservedStacking::Stacked;
  if (std::is_sorted(ids.rbegin(), ids.rend())) return ObservedStacking::StackedReversed;
  return ObservedStacking::StackedRandom;
}

PlatformFingerprint fingerprint_platform(const std::vector<ReceiptEvent>& flush_events,
                                         const std::vector<ProbeId>& sent_order, ReceiptColumn column,
                                         const std::vector<OrderingRow>& table) {
  PlatformFingerprint fp;
  fp.observed = observe_stacking(flush_events, sent_order);
  const auto policy = as_policy(fp.observed);
  for (const auto& row : table) {
    if (!policy || row.column(column) == *policy) fp.candidates.push_back(row);
  }
  return fp;
}

std::vector<BacklogFlush> find_backlog_flushes(const std::vector<ReceiptEvent>& receipts,
                                               const std::vector<RttSample>& samples,
                                               std::optional<Millis> gap_threshold_ms, Millis window_ms) {
  std::map<std::uint64_t, SimTime> sent;
  for (const auto& s : samples) sent.emplace(s.probe_id.sequence, s.send_at);
  Millis threshold = gap_threshold_ms.value_or(3 * estimate_probe_interval(samples));
  if (threshold <= 0) threshold = 3 * kSecond;

  std::vector<ReceiptEvent> acks;
  for (const auto& r : receipts) {
    if (r.kind == ReceiptKind::DeviceAck && r.device_index) acks.push_back(r);
  }
  std::stable_sort(acks.begin(), acks.end(),
                   [](const ReceiptEvent& a, const ReceiptEvent& b) { return a.observed_at < b.observed_at; });

  std::vector<BacklogFlush> out;
  std::map<DeviceIndex, std::size_t> open;
  for (const auto& r : acks) {
    bool late = false;
    for (const auto& id : r.probe_ids) {
      auto it = sent.find(id.sequence);
      if (it != sent.end() && r.observed_at - it->second > threshold) late = true;
    }
    if (!late) continue;
    auto it = open.find(*r.device_index);
    if (it != open.end() && r.observed_at - out[it->second].observed_at <= window_ms) {
      out[it->second].events.push_back(r);
    } else {
      open[*r.device_index] = out.size();
      out.push_back({*r.device_index, r.observed_at, {r}, {}});
    }
  }
  for (auto& f : out) {
    for (const auto& e : f.events) f.sent_order.insert(f.sent_order.end(), e.probe_ids.begin(), e.probe_ids.end());
    std::sort(f.sent_order.begin(), f.sent_order.end(),
              [](const ProbeId& a, const ProbeId& b) { return a.sequence < b.sequence; });
    f.sent_order.erase(std::unique(f.sent_order.begin(), f.sent_order.end()), f.sent_order.end());
  }
  return out;
}

std::vector<DirectoryEvent> track_directory_events(const std::vector<DirectorySnapshot>& snapshots) {
  std::vector<DirectoryEvent> out;
  if (snapshots.empty()) return out;
  std::set<DeviceIndex> current(snapshots.front().indices.begin(), snapshots.front().indices.end());
  std::set<DeviceIndex> removed;
  DeviceIndex max_seen = current.empty() ? -1 : *current.rbegin();
  for (std::size_t i = 1; i < snapshots.size(); ++i) {
    const auto& snap = snapshots[i];
    if (snap.at < snapshots[i - 1].at) throw InvalidInput("directory snapshots must be chronological");
    const std::set<DeviceIndex> next(snap.indices.begin(), snap.indices.end());
    for (DeviceIndex d : current) {
      if (!next.contains(d)) {
        out.push_back({snap.at, DirectoryEventKind::DeviceRemoved, d, false});
        removed.insert(d);
      }
    }
    for (DeviceIndex d : next) {
      if (current.contains(d)) continue;
      if (removed.contains(d)) throw DataIntegrityError("device index " + std::to_string(d) + " reused");
      if (d <= max_seen) {
        throw DataIntegrityError("device index " + std::to_string(d) + " is below an index already issued");
      }
      out.push_back({snap.at, DirectoryEventKind::DeviceAdded, d, true});
      max_seen = d;
    }
    current = next;
  }
  return out;
}

std::optional<Millis> estimate_server_to_victim_rtt(const RttSample& sample) {
  if (!sample.server_ack_at || !sample.device_ack_at) return std::nullopt;
  return *sample.device_ack_at - *sample.server_ack_at;
}

}  // namespace ackscope
