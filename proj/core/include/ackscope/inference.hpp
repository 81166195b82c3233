#pragma once

// Attacker-side reconstruction from receipt timings.

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "ackscope/device.hpp"
#include "ackscope/prober.hpp"

namespace ackscope {

enum class Presence { Online, Offline, Unknown };

template <>
struct EnumNames<Presence> {
  static constexpr std::array<std::pair<Presence, std::string_view>, 3> kNames{{
      {Presence::Online, "Online"},
      {Presence::Offline, "Offline"},
      {Presence::Unknown, "Unknown"},
  }};
};

using SegmentLabel = std::variant<ActivityState, Presence>;

std::string label_name(const SegmentLabel& label);
SegmentLabel parse_label(std::string_view text);

// Half-open [start_ms, end_ms).
struct Segment {
  SimTime start_ms = 0;
  SimTime end_ms = 0;
  SegmentLabel label = Presence::Unknown;
  double confidence = 0.0;
};

struct DeviceTimeline {
  DeviceIndex device_index = 0;
  std::vector<Segment> presence;
  std::vector<Segment> activity;
};

struct InferredTimeline {
  std::vector<DeviceTimeline> devices;
};

// Throws InvalidInput if segments overlap or are out of order.
void check_segments(const std::vector<Segment>& segments);

// Median spacing between consecutive send times (0 for fewer than 2).
Millis estimate_probe_interval(const std::vector<RttSample>& stream);

// Online/offline segmentation of one device's stream (sorted by send_at).
// The device counts as offline wherever consecutive ack evidence is more
// than `gap_threshold_ms` apart (default three probe intervals). Late acks
// from a backlog flush mark the reconnection. A stream without any ack
// yields a single Unknown segment.
std::vector<Segment> detect_online_intervals(const std::vector<RttSample>& stream,
                                             std::optional<Millis> gap_threshold_ms = std::nullopt);

enum class ClassifierMethod { ThresholdBands, TwoComponentMixture };

template <>
struct EnumNames<ClassifierMethod> {
  static constexpr std::array<std::pair<ClassifierMethod, std::string_view>, 2> kNames{{
      {ClassifierMethod::ThresholdBands, "ThresholdBands"},
      {ClassifierMethod::TwoComponentMixture, "TwoComponentMixture"},
  }};
};

struct Band {
  ActivityState label = ActivityState::ScreenOn;
  double low_ms = 0.0;   // inclusive
  double high_ms = 0.0;  // exclusive
};

// Gaussian component on log(rtt).
struct MixtureComponent {
  ActivityState label = ActivityState::ScreenOn;
  double weight = 0.5;
  double log_mean = 0.0;
  double log_sd = 1.0;
};

struct StateClassifierModel {
  ClassifierMethod method = ClassifierMethod::ThresholdBands;
  std::vector<Band> bands;
  std::vector<MixtureComponent> components;
  int smoothing_window = 5;

  // Throws InvalidInput (overlapping bands, even or non-positive window).
  void validate() const;
  std::optional<ActivityState> label_for(double rtt_ms) const;
  const Band* band_for(ActivityState label) const;

  // Bands split at the midpoints between the profile's state means, shifted
  // by the round-trip network offset. Phones use AppForeground / ScreenOn /
  // ScreenOff (deep sleep reads as ScreenOff); browsers and desktops use
  // TabActive / TabBackground.
  static StateClassifierModel from_profile(const PlatformProfile& profile, double network_offset_ms);
  // EM fit of two log-normal components; the faster one gets `low`.
  static StateClassifierModel fit_mixture(const std::vector<double>& rtts_ms, ActivityState low, ActivityState high,
                                          int smoothing_window = 5);
};

// Nominal device-path overhead on top of the processing delay (attacker and
// victim access links plus one cross-server hop, both directions).
double nominal_network_offset_ms(LinkTech victim_link = LinkTech::WiFi);

// Running median with a window that shrinks at the edges.
std::vector<double> median_filter(const std::vector<double>& values, int window);

// Acked samples of the stream, sorted by send_at.
std::vector<RttSample> acked_samples(const std::vector<RttSample>& stream);

// Per-sample labels for the acked samples after median filtering.
std::vector<std::optional<ActivityState>> label_samples(const std::vector<RttSample>& stream,
                                                        const StateClassifierModel& model);

// Activity segments for one device. Throws InvalidInput when fewer acked
// samples than the smoothing window are available. Samples outside every
// band are labelled Unknown.
std::vector<Segment> classify_states(const std::vector<RttSample>& stream, const StateClassifierModel& model,
                                     const PlatformProfile* profile_hint = nullptr);

struct LevelSegment {
  std::size_t begin = 0;  // sample index, inclusive
  std::size_t end = 0;    // exclusive
  SimTime start_ms = 0;
  SimTime end_ms = 0;
  double mean_ms = 0.0;
  double sd_ms = 0.0;
  // Markedly steadier and faster than the typical segment (e.g. a call).
  bool high_activity = false;
};

// Optimal-partition mean-shift segmentation (PELT) of the acked RTT series.
// `penalty_scale` multiplies sigma^2 * ln(n). Acks from backlog flushes are
// skipped; `begin`/`end` index the remaining samples.
std::vector<LevelSegment> segment_levels(const std::vector<RttSample>& stream, double penalty_scale = 3.0,
                                         std::size_t min_size = 3);

// Change-point indices for a plain series (the start index of each new segment).
std::vector<std::size_t> pelt_change_points(const std::vector<double>& values, double penalty, std::size_t min_size);

enum class ObservedStacking { Separate, Stacked, StackedReversed, StackedRandom, Indeterminate };

template <>
struct EnumNames<ObservedStacking> {
  static constexpr std::array<std::pair<ObservedStacking, std::string_view>, 5> kNames{{
      {ObservedStacking::Separate, "Separate"},
      {ObservedStacking::Stacked, "Stacked"},
      {ObservedStacking::StackedReversed, "StackedReversed"},
      {ObservedStacking::StackedRandom, "StackedRandom"},
      {ObservedStacking::Indeterminate, "Indeterminate"},
  }};
};

enum class ReceiptColumn { Delivery, Read };

struct OrderingRow {
  std::string app;
  PlatformKind platform = PlatformKind::Android;
  StackingPolicy delivery = StackingPolicy::Separate;
  StackingPolicy read = StackingPolicy::Stacked;

  std::string label() const;
  StackingPolicy column(ReceiptColumn c) const { return c == ReceiptColumn::Delivery ? delivery : read; }
  bool operator==(const OrderingRow&) const = default;
};

// Receipt stacking and ordering per client platform (8 rows).
const std::vector<OrderingRow>& receipt_ordering_table();
// Every row forced to one policy (harmonized-stacking countermeasure).
std::vector<OrderingRow> harmonized_table(StackingPolicy policy);

struct PlatformFingerprint {
  ObservedStacking observed = ObservedStacking::Indeterminate;
  std::vector<OrderingRow> candidates;
};

ObservedStacking observe_stacking(const std::vector<ReceiptEvent>& flush_events, const std::vector<ProbeId>& sent_order);

// Candidates are all table rows whose policy in `column` matches the
// observation; Indeterminate yields the whole table.
PlatformFingerprint fingerprint_platform(const std::vector<ReceiptEvent>& flush_events,
                                         const std::vector<ProbeId>& sent_order,
                                         ReceiptColumn column = ReceiptColumn::Delivery,
                                         const std::vector<OrderingRow>& table = receipt_ordering_table());

struct BacklogFlush {
  DeviceIndex device_index = 0;
  SimTime observed_at = 0;
  std::vector<ReceiptEvent> events;
  std::vector<ProbeId> sent_order;
};

// Groups late device acks (rtt above the gap threshold) into flushes. Acks
// from one device within `window_ms` of the first late ack form one flush.
std::vector<BacklogFlush> find_backlog_flushes(const std::vector<ReceiptEvent>& receipts,
                                               const std::vector<RttSample>& samples,
                                               std::optional<Millis> gap_threshold_ms = std::nullopt,
                                               Millis window_ms = 1000);

struct DirectorySnapshot {
  SimTime at = 0;
  std::vector<DeviceIndex> indices;
};

enum class DirectoryEventKind { DeviceAdded, DeviceRemoved };

template <>
struct EnumNames<DirectoryEventKind> {
  static constexpr std::array<std::pair<DirectoryEventKind, std::string_view>, 2> kNames{{
      {DirectoryEventKind::DeviceAdded, "DeviceAdded"},
      {DirectoryEventKind::DeviceRemoved, "DeviceRemoved"},
  }};
};

struct DirectoryEvent {
  SimTime at = 0;
  DirectoryEventKind kind = DirectoryEventKind::DeviceAdded;
  DeviceIndex index = 0;
  // Index above every index seen before: a newer (maybe temporary) session.
  bool newest = false;

  bool operator==(const DirectoryEvent&) const = default;
};

// Set differences between consecutive snapshots. Throws InvalidInput for
// non-chronological snapshots and DataIntegrityError when an index is reused
// or appears below the highest index already seen.
std::vector<DirectoryEvent> track_directory_events(const std::vector<DirectorySnapshot>& snapshots);

// device_rtt - server_rtt; nullopt without both acks.
std::optional<Millis> estimate_server_to_victim_rtt(const RttSample& sample);

}  // namespace ackscope
