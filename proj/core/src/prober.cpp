#include "ackscope/prober.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <nlohmann/json.hpp>
#include <ostream>
#include <sstream>

#include "ackscope/errors.hpp"

namespace ackscope {

using nlohmann::json;

void ProbeSchedule::validate() const {
  if (interval_ms < 50) throw InvalidInput("probe interval must be >= 50 ms");
  if (!(duration_s >= 0)) throw InvalidInput("probe duration must be >= 0");
  if (payload_bytes < 0) throw InvalidInput("payload_bytes must be >= 0");
  if (kind == ProbeKind::InvalidRefReaction && ref_valid.value_or(false)) {
    throw InvalidInput("InvalidRefReaction cannot reference a valid message");
  }
}

bool ProbeSchedule::effective_ref_valid() const {
  return ref_valid.value_or(kind != ProbeKind::InvalidRefReaction);
}

std::vector<SimTime> ProbeSchedule::send_times() const {
  validate();
  std::vector<SimTime> out;
  const double duration_ms = duration_s * 1000.0;
  for (Millis k = 0; static_cast<double>(k * interval_ms) < duration_ms; ++k) out.push_back(start_at + k * interval_ms);
  return out;
}

SenderRateLimiter SenderRateLimiter::queue_above(double per_s, int burst, std::optional<double> bytes_per_s) {
  SenderRateLimiter l;
  l.model = LimiterModel::QueueAboveRate;
  l.sustained_threshold_per_s = per_s;
  l.burst_allowance = burst;
  l.sustained_bytes_per_s = bytes_per_s;
  l.validate();
  return l;
}

SenderRateLimiter SenderRateLimiter::preset(MessengerKind kind) {
  if (kind == MessengerKind::SignalLike) return queue_above(1.0, 30, 100000.0);
  return none();
}

void SenderRateLimiter::validate() const {
  if (model == LimiterModel::None) return;
  if (!(sustained_threshold_per_s > 0)) throw InvalidInput("limiter threshold must be > 0");
  if (burst_allowance < 1) throw InvalidInput("limiter burst must be >= 1");
  if (sustained_bytes_per_s && !(*sustained_bytes_per_s > 0)) throw InvalidInput("limiter byte rate must be > 0");
}

double SenderRateLimiter::capped_rate(double requested_per_s, std::int64_t bytes_per_message) const {
  if (model == LimiterModel::None || requested_per_s <= 0) return std::max(requested_per_s, 0.0);
  double r = std::min(requested_per_s, sustained_threshold_per_s);
  if (sustained_bytes_per_s && bytes_per_message > 0) {
    r = std::min(r, *sustained_bytes_per_s / static_cast<double>(bytes_per_message));
  }
  return r;
}

RateLimiterState::RateLimiterState(SenderRateLimiter limiter)
    : limiter_(limiter), tokens_(static_cast<double>(limiter.burst_allowance)) {
  limiter_.validate();
}

SimTime RateLimiterState::depart(SimTime requested, std::int64_t bytes) {
  if (started_ && requested < last_requested_) throw InvalidInput("limiter requests must be chronological");
  last_requested_ = requested;
  if (limiter_.model == LimiterModel::None) {
    started_ = true;
    refilled_at_ = requested;
    return requested;
  }
  SimTime t = started_ ? std::max(requested, last_departure_) : requested;
  t = std::max(t, byte_ready_at_);
  const double per_ms = limiter_.sustained_threshold_per_s / 1000.0;
  const double cap = static_cast<double>(limiter_.burst_allowance);
  if (started_) tokens_ = std::min(cap, tokens_ + static_cast<double>(t - refilled_at_) * per_ms);
  if (tokens_ < 1.0) {
    const auto wait = static_cast<SimTime>(std::ceil((1.0 - tokens_) / per_ms - 1e-9));
    t += wait;
    tokens_ = std::min(cap, tokens_ + static_cast<double>(wait) * per_ms);
  }
  tokens_ -= 1.0;
  started_ = true;
  refilled_at_ = t;
  last_departure_ = t;
  if (limiter_.sustained_bytes_per_s && bytes > 0) {
    byte_ready_at_ = t + static_cast<SimTime>(std::llround(static_cast<double>(bytes) * 1000.0 /
                                                            *limiter_.sustained_bytes_per_s));
  }
  return t;
}

std::vector<SimTime> departures(const ProbeSchedule& schedule, const SenderRateLimiter& limiter) {
  RateLimiterState state(limiter);
  std::vector<SimTime> out;
  for (SimTime t : schedule.send_times()) out.push_back(state.depart(t, schedule.payload_bytes));
  return out;
}

std::optional<Millis> RttSample::server_rtt_ms() const {
  if (!server_ack_at) return std::nullopt;
  return *server_ack_at - send_at;
}

std::optional<Millis> RttSample::device_rtt_ms() const {
  if (!device_ack_at) return std::nullopt;
  return *device_ack_at - send_at;
}

void SampleCollector::on_sent(const ProbeId& id, SimTime send_at, const std::vector<DeviceIndex>& devices) {
  for (DeviceIndex d : devices) {
    RttSample s;
    s.probe_id = id;
    s.device_index = d;
    s.send_at = send_at;
    by_device_[{id.sequence, d}] = samples_.size();
    by_probe_[id.sequence].push_back(samples_.size());
    samples_.push_back(s);
  }
}

void SampleCollector::on_rejected(const ProbeId& id, SimTime send_at) {
  RttSample s;
  s.probe_id = id;
  s.send_at = send_at;
  s.rejected = true;
  samples_.push_back(s);
}

void SampleCollector::on_receipt(const ReceiptEvent& event) {
  receipts_.push_back(event);
  for (const auto& id : event.probe_ids) {
    if (event.kind == ReceiptKind::ServerAck) {
      if (auto it = by_probe_.find(id.sequence); it != by_probe_.end()) {
        for (std::size_t i : it->second) {
          if (!samples_[i].server_ack_at) samples_[i].server_ack_at = event.observed_at;
        }
      }
    } else if (event.kind == ReceiptKind::DeviceAck && event.device_index) {
      auto it = by_device_.find({id.sequence, *event.device_index});
      if (it != by_device_.end() && !samples_[it->second].device_ack_at) {
        samples_[it->second].device_ack_at = event.observed_at;
      }
    }
  }
}

std::map<DeviceIndex, std::vector<RttSample>> split_by_device(const std::vector<RttSample>& samples) {
  std::map<DeviceIndex, std::vector<RttSample>> out;
  for (const auto& s : samples) {
    if (s.rejected || !s.device_index) continue;
    out[*s.device_index].push_back(s);
  }
  for (auto& [d, v] : out) {
    std::stable_sort(v.begin(), v.end(), [](const RttSample& a, const RttSample& b) { return a.send_at < b.send_at; });
  }
  return out;
}

std::vector<DeviceIndex> snapshot_device_directory(const AccountRegistry& registry, const AccountId& account) {
  return registry.directory(account).indices();
}

namespace {

json opt(const std::optional<std::int64_t>& v) { return v ? json(*v) : json(nullptr); }

std::optional<std::int64_t> opt_int(const json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  return it->get<std::int64_t>();
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::optional<std::int64_t> csv_int(const std::string& cell) {
  if (cell.empty()) return std::nullopt;
  std::size_t used = 0;
  const long long v = std::stoll(cell, &used);
  if (used != cell.size()) throw std::invalid_argument(cell);
  return v;
}

}  // namespace

void write_samples_jsonl(std::ostream& out, const std::vector<RttSample>& samples) {
  for (const auto& s : samples) {
    json j;
    j["probe_id"] = s.probe_id.to_string();
    j["device_index"] = s.device_index ? json(*s.device_index) : json(nullptr);
    j["send_at"] = s.send_at;
    j["server_ack_at"] = opt(s.server_ack_at);
    j["device_ack_at"] = opt(s.device_ack_at);
    j["server_rtt_ms"] = opt(s.server_rtt_ms());
    j["device_rtt_ms"] = opt(s.device_rtt_ms());
    j["rejected"] = s.rejected;
    out << j.dump() << '\n';
  }
}

void write_samples_csv(std::ostream& out, const std::vector<RttSample>& samples) {
  out << "probe_id,device_index,send_at,server_rtt_ms,device_rtt_ms,rejected\n";
  auto cell = [](const std::optional<std::int64_t>& v) { return v ? std::to_string(*v) : std::string(); };
  for (const auto& s : samples) {
    out << s.probe_id.to_string() << ',' << (s.device_index ? std::to_string(*s.device_index) : std::string())
        << ',' << s.send_at << ',' << cell(s.server_rtt_ms()) << ',' << cell(s.device_rtt_ms()) << ','
        << (s.rejected ? "true" : "false") << '\n';
  }
}

std::vector<RttSample> read_samples_jsonl(std::istream& in) {
  std::vector<RttSample> out;
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      RttSample s;
      s.probe_id = ProbeId::parse(j.at("probe_id").get<std::string>());
      if (auto d = opt_int(j, "device_index")) s.device_index = static_cast<DeviceIndex>(*d);
      s.send_at = j.at("send_at").get<SimTime>();
      s.server_ack_at = opt_int(j, "server_ack_at");
      s.device_ack_at = opt_int(j, "device_ack_at");
      s.rejected = j.value("rejected", false);
      out.push_back(s);
    } catch (const std::exception& e) {
      throw DataIntegrityError("samples line " + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

std::vector<RttSample> read_samples_csv(std::istream& in) {
  std::vector<RttSample> out;
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (n == 1 || line.empty()) continue;
    try {
      auto cells = split_csv(line);
      if (cells.size() != 6) throw std::invalid_argument("expected 6 columns");
      RttSample s;
      s.probe_id = ProbeId::parse(cells[0]);
      if (auto d = csv_int(cells[1])) s.device_index = static_cast<DeviceIndex>(*d);
      s.send_at = csv_int(cells[2]).value();
      if (auto r = csv_int(cells[3])) s.server_ack_at = s.send_at + *r;
      if (auto r = csv_int(cells[4])) s.device_ack_at = s.send_at + *r;
      s.rejected = cells[5] == "true" || cells[5] == "1";
      out.push_back(s);
    } catch (const std::exception& e) {
      throw DataIntegrityError("samples line " + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

std::vector<RttSample> read_samples_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open " + path);
  if (path.size() >= 4 && path.compare(path.size() - 4, 4, ".csv") == 0) return read_samples_csv(in);
  return read_samples_jsonl(in);
}

void write_receipts_jsonl(std::ostream& out, const std::vector<ReceiptEvent>& receipts) {
  for (const auto& r : receipts) {
    json j;
    j["kind"] = to_string(r.kind);
    json ids = json::array();
    for (const auto& id : r.probe_ids) ids.push_back(id.to_string());
    j["probe_ids"] = ids;
    j["device_index"] = r.device_index ? json(*r.device_index) : json(nullptr);
    j["observed_at"] = r.observed_at;
    out << j.dump() << '\n';
  }
}

std::vector<ReceiptEvent> read_receipts_jsonl(std::istream& in) {
  std::vector<ReceiptEvent> out;
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      ReceiptEvent r;
      r.kind = parse_enum<ReceiptKind>(j.at("kind").get<std::string>());
      for (const auto& id : j.at("probe_ids")) r.probe_ids.push_back(ProbeId::parse(id.get<std::string>()));
      if (auto d = opt_int(j, "device_index")) r.device_index = static_cast<DeviceIndex>(*d);
      r.observed_at = j.at("observed_at").get<SimTime>();
      out.push_back(r);
    } catch (const std::exception& e) {
      throw DataIntegrityError("receipts line " + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace ackscope
