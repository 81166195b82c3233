#pragma once

// Offline analysis of a run directory and report emission.

#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ackscope/inference.hpp"
#include "ackscope/simulation.hpp"

namespace ackscope {

// What the attacker recorded (attacker/ below a run directory).
struct AttackerData {
  std::vector<RttSample> samples;
  std::vector<ReceiptEvent> receipts;
  std::vector<DirectorySnapshot> directory;
};

AttackerData load_attacker_data(const std::string& run_dir);
// truth/ground_truth.json; evaluation only.
std::vector<DeviceTruth> load_truth(const std::string& run_dir);

struct DeviceAnalysis {
  DeviceTimeline timeline;
  std::vector<LevelSegment> levels;
  std::vector<PlatformFingerprint> flushes;
};

struct Analysis {
  std::vector<DeviceAnalysis> devices;
  std::vector<DirectoryEvent> directory_events;
};

struct AnalysisOptions {
  // Known profile per device index; others get a two-component mixture fit.
  std::map<DeviceIndex, PlatformProfile> profiles;
  std::map<DeviceIndex, LinkTech> links;
  std::optional<Millis> gap_threshold_ms;
};

Analysis analyze(const AttackerData& data, const AnalysisOptions& options = {});

// analysis/timeline.json and analysis/segments.csv below `dir`.
void write_analysis(const Analysis& analysis, const std::string& dir);
nlohmann::json to_json(const Analysis& analysis);
void write_segments_csv(std::ostream& out, const Analysis& analysis);

enum class ReportFormat { SummaryJson, SegmentsCsv, PlotdataCsv };

// "summary-json", "segments-csv", "plotdata-csv". Throws InvalidInput otherwise.
ReportFormat parse_report_format(std::string_view text);
std::string report_file_name(ReportFormat format);

struct RunBundle {
  AttackerData attacker;
  std::vector<DeviceTruth> truth;
  nlohmann::json summary = nlohmann::json::object();
  Analysis analysis;
};

RunBundle load_run(const std::string& run_dir, const AnalysisOptions& options = {});

// plotdata-csv: one row per sample with an answer from a device.
void write_report(std::ostream& out, ReportFormat format, const RunBundle& run);

}  // namespace ackscope
