#pragma once

// Attacker side: probe schedules, the sender-path rate limiter and raw RTT
// samples.

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ackscope/protocol.hpp"

namespace ackscope {

struct ProbeSchedule {
  ProbeKind kind = ProbeKind::InvalidRefReaction;
  Millis interval_ms = 2000;
  std::int64_t payload_bytes = 0;
  double duration_s = 0.0;
  SimTime start_at = 0;
  // Defaults to false for InvalidRefReaction and true otherwise.
  std::optional<bool> ref_valid;

  // Throws InvalidInput (interval < 50 ms, negative duration or payload).
  void validate() const;
  bool effective_ref_valid() const;
  // start_at + k * interval for every k with k * interval < duration.
  std::vector<SimTime> send_times() const;
};

enum class LimiterModel { None, QueueAboveRate };

template <>
struct EnumNames<LimiterModel> {
  static constexpr std::array<std::pair<LimiterModel, std::string_view>, 2> kNames{{
      {LimiterModel::None, "None"},
      {LimiterModel::QueueAboveRate, "QueueAboveRate"},
  }};
};

struct SenderRateLimiter {
  LimiterModel model = LimiterModel::None;
  double sustained_threshold_per_s = 0.0;
  int burst_allowance = 0;
  // Optional byte-rate ceiling on the sending path (paces large payloads).
  std::optional<double> sustained_bytes_per_s;

  static SenderRateLimiter none() { return {}; }
  // Token bucket refilled at `per_s`, holding up to `burst` messages.
  static SenderRateLimiter queue_above(double per_s, int burst, std::optional<double> bytes_per_s = std::nullopt);
  // Calibrated default for the messenger family (None for WhatsApp).
  static SenderRateLimiter preset(MessengerKind kind);

  void validate() const;
  // Long-run message rate reachable for a requested rate and message size.
  double capped_rate(double requested_per_s, std::int64_t bytes_per_message) const;
};

// FIFO departure scheduler for one sender.
class RateLimiterState {
 public:
  explicit RateLimiterState(SenderRateLimiter limiter);

  // Departure time for a message handed to the client at `requested`.
  // Requests must arrive in non-decreasing order.
  SimTime depart(SimTime requested, std::int64_t bytes);

  const SenderRateLimiter& limiter() const { return limiter_; }

 private:
  SenderRateLimiter limiter_;
  double tokens_;
  SimTime refilled_at_ = 0;
  SimTime last_departure_ = 0;
  SimTime last_requested_ = 0;
  SimTime byte_ready_at_ = 0;
  bool started_ = false;
};

// Departure times for a whole schedule.
std::vector<SimTime> departures(const ProbeSchedule& schedule, const SenderRateLimiter& limiter);

struct RttSample {
  ProbeId probe_id;
  // Absent for probes the server rejected before fanout.
  std::optional<DeviceIndex> device_index;
  SimTime send_at = 0;  // departure from the attacker client
  std::optional<SimTime> server_ack_at;
  std::optional<SimTime> device_ack_at;
  bool rejected = false;

  std::optional<Millis> server_rtt_ms() const;
  std::optional<Millis> device_rtt_ms() const;
};

// Collects samples as receipts arrive. One sample per (probe, device) in the
// directory at send time.
class SampleCollector {
 public:
  void on_sent(const ProbeId& id, SimTime send_at, const std::vector<DeviceIndex>& devices);
  void on_rejected(const ProbeId& id, SimTime send_at);
  void on_receipt(const ReceiptEvent& event);

  const std::vector<RttSample>& samples() const { return samples_; }
  const std::vector<ReceiptEvent>& receipts() const { return receipts_; }

 private:
  std::vector<RttSample> samples_;
  std::vector<ReceiptEvent> receipts_;
  std::map<std::pair<std::uint64_t, DeviceIndex>, std::size_t> by_device_;
  std::map<std::uint64_t, std::vector<std::size_t>> by_probe_;
};

// Groups samples per device index (rejected samples are dropped), each
// stream sorted by send_at.
std::map<DeviceIndex, std::vector<RttSample>> split_by_device(const std::vector<RttSample>& samples);

// Throws InvalidInput for unknown accounts.
std::vector<DeviceIndex> snapshot_device_directory(const AccountRegistry& registry, const AccountId& account);

// Sample and receipt persistence.
void write_samples_jsonl(std::ostream& out, const std::vector<RttSample>& samples);
void write_samples_csv(std::ostream& out, const std::vector<RttSample>& samples);
// Throws DataIntegrityError on malformed lines.
std::vector<RttSample> read_samples_jsonl(std::istream& in);
std::vector<RttSample> read_samples_csv(std::istream& in);
// Picks the format from the extension (.jsonl or .csv).
std::vector<RttSample> read_samples_file(const std::string& path);

void write_receipts_jsonl(std::ostream& out, const std::vector<ReceiptEvent>& receipts);
std::vector<ReceiptEvent> read_receipts_jsonl(std::istream& in);

}  // namespace ackscope
