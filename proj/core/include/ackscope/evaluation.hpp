#pragma once

// Scoring attacks against ground truth, with and without countermeasures.

#include <cstdint>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "ackscope/inference.hpp"
#include "ackscope/mitigation.hpp"
#include "ackscope/simulation.hpp"

namespace ackscope {

struct StateScore {
  std::int64_t correct = 0;
  std::int64_t total = 0;
  double accuracy() const { return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total); }
};

// Per-sample agreement between the smoothed labels and the scripted state,
// over samples sent while the device was online. Unanswered samples count
// as misses.
StateScore score_states(const std::vector<RttSample>& stream, const DeviceTruth& truth,
                        const StateClassifierModel& model);

// For each scripted state change between two reachable states: distance to
// the nearest inferred boundary that enters the new state (nullopt if none).
std::vector<std::optional<Millis>> transition_lags(const DeviceTruth& truth, const std::vector<Segment>& activity);

// Bands for a profile seen through the given access link and optional
// receipt-delay noise (shifted by the noise mean, top band widened).
StateClassifierModel attacker_classifier(const PlatformProfile& profile, LinkTech link,
                                         const std::optional<LatencyDistribution>& noise = std::nullopt);

struct FingerprintTrial {
  OrderingRow truth;
  PlatformFingerprint fingerprint;
  // True row among the candidates and the candidate set smaller than the table.
  bool success = false;
};

// One device configured like `row` is offline while `backlog` probes arrive,
// then reconnects; the attacker fingerprints the flush.
FingerprintTrial run_fingerprint_trial(const OrderingRow& row, const MitigationConfig& config, std::uint64_t seed,
                                       int backlog = 5);

struct MitigationMetrics {
  std::optional<double> state_accuracy;      // mean over devices with a classifiable profile
  std::optional<double> online_detect_error_s;  // mean over presence transitions
  double fingerprint_success = 0.0;          // share of ordering-table rows
  double exhaustion_mb_per_h = 0.0;
  double acks_per_probe = 0.0;
  std::int64_t observable_samples = 0;
  std::int64_t ui_notifications = 0;
};

struct MitigationEvaluation {
  MitigationMetrics baseline;
  MitigationMetrics mitigated;
};

// Mean distance between presence changes in the truth and the detected ones.
// A change with no matching detection counts as the rest of the run.
std::optional<double> online_detect_error_s(const RunResult& run, DeviceIndex index);

MitigationMetrics measure(const Scenario& scenario, const MitigationConfig& config);

// Same scenario and seed with the scenario's own mitigations and with `config`.
MitigationEvaluation evaluate_mitigation(const Scenario& scenario, const MitigationConfig& config);

struct NoisePoint {
  Millis max_noise_ms = 0;
  double state_accuracy = 0.0;
};

// Uniform(0, level) receipt-delay noise at each level.
std::vector<NoisePoint> noise_sweep(const Scenario& scenario, const std::vector<Millis>& levels);

nlohmann::json to_json(const MitigationMetrics& m);

}  // namespace ackscope
