#include "ackscope/report.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>

#include "ackscope/errors.hpp"
#include "ackscope/evaluation.hpp"

namespace ackscope {
namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::ifstream open_in(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw InvalidInput("cannot read " + p.string());
  return in;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p);
  if (!out) throw std::runtime_error("cannot write " + p.string());
  return out;
}

json segments_json(const std::vector<Segment>& segs) {
  json a = json::array();
  for (const auto& s : segs) {
    a.push_back({{"start_ms", s.start_ms}, {"end_ms", s.end_ms}, {"label", label_name(s.label)},
                 {"confidence", s.confidence}});
  }
  return a;
}

std::vector<Segment> activity_for(const std::vector<RttSample>& stream, DeviceIndex idx,
                                  const AnalysisOptions& options) {
  const auto acked = acked_samples(stream);
  try {
    if (auto it = options.profiles.find(idx); it != options.profiles.end()) {
      const auto link = options.links.contains(idx) ? options.links.at(idx) : LinkTech::WiFi;
      return classify_states(stream, attacker_classifier(it->second, link));
    }
    std::vector<double> rtts;
    for (const auto& s : acked) rtts.push_back(static_cast<double>(*s.device_rtt_ms()));
    if (rtts.size() < 5) return {};
    const auto model =
        StateClassifierModel::fit_mixture(rtts, ActivityState::ScreenOn, ActivityState::ScreenOff);
    return classify_states(stream, model);
  } catch (const InvalidInput&) {
    return {};
  }
}

const Segment* segment_at(const std::vector<Segment>& segs, SimTime t) {
  for (const auto& s : segs) {
    if (t >= s.start_ms && t < s.end_ms) return &s;
  }
  return nullptr;
}

}  // namespace

AttackerData load_attacker_data(const std::string& run_dir) {
  const fs::path root = fs::path(run_dir) / "attacker";
  AttackerData d;
  const fs::path jsonl = root / "samples.jsonl";
  const fs::path csv = root / "samples.csv";
  if (fs::exists(jsonl)) d.samples = read_samples_file(jsonl.string());
  else if (fs::exists(csv)) d.samples = read_samples_file(csv.string());
  else throw InvalidInput("no attacker samples below " + run_dir);
  if (fs::exists(root / "receipts.jsonl")) {
    auto in = open_in(root / "receipts.jsonl");
    d.receipts = read_receipts_jsonl(in);
  }
  if (fs::exists(root / "directory.jsonl")) {
    auto in = open_in(root / "directory.jsonl");
    std::string line;
    int n = 0;
    while (std::getline(in, line)) {
      ++n;
      if (line.empty()) continue;
      try {
        const json j = json::parse(line);
        d.directory.push_back({j.at("at").get<SimTime>(), j.at("indices").get<std::vector<DeviceIndex>>()});
      } catch (const json::exception& e) {
        throw DataIntegrityError("directory.jsonl line " + std::to_string(n) + ": " + e.what());
      }
    }
  }
  return d;
}

std::vector<DeviceTruth> load_truth(const std::string& run_dir) {
  const fs::path p = fs::path(run_dir) / "truth" / "ground_truth.json";
  auto in = open_in(p);
  std::vector<DeviceTruth> out;
  try {
    const json j = json::parse(in);
    for (const auto& d : j.at("devices")) {
      DeviceTruth t;
      t.index = d.at("device_index").get<DeviceIndex>();
      t.profile = d.at("profile").get<std::string>();
      t.os = parse_enum<PlatformKind>(d.at("os").get<std::string>());
      t.registered_at = d.at("registered_at").get<SimTime>();
      if (!d.at("removed_at").is_null()) t.removed_at = d.at("removed_at").get<SimTime>();
      for (const auto& c : d.at("history")) {
        t.history.push_back({c.at("at").get<SimTime>(), parse_enum<ActivityState>(c.at("state").get<std::string>()),
                             parse_enum<ActivityState>(c.at("scripted").get<std::string>()),
                             parse_enum<LinkTech>(c.at("link").get<std::string>())});
      }
      out.push_back(std::move(t));
    }
  } catch (const json::exception& e) {
    throw DataIntegrityError(p.string() + ": " + e.what());
  }
  return out;
}

Analysis analyze(const AttackerData& data, const AnalysisOptions& options) {
  Analysis a;
  const auto flushes = find_backlog_flushes(data.receipts, data.samples, options.gap_threshold_ms);
  for (const auto& [idx, stream] : split_by_device(data.samples)) {
    DeviceAnalysis d;
    d.timeline.device_index = idx;
    d.timeline.presence = detect_online_intervals(stream, options.gap_threshold_ms);
    d.timeline.activity = activity_for(stream, idx, options);
    if (acked_samples(stream).size() >= 6) d.levels = segment_levels(stream);
    for (const auto& f : flushes) {
      if (f.device_index == idx) d.flushes.push_back(fingerprint_platform(f.events, f.sent_order));
    }
    a.devices.push_back(std::move(d));
  }
  a.directory_events = track_directory_events(data.directory);
  return a;
}

json to_json(const Analysis& analysis) {
  json devs = json::array();
  for (const auto& d : analysis.devices) {
    json levels = json::array();
    for (const auto& l : d.levels) {
      levels.push_back({{"start_ms", l.start_ms}, {"end_ms", l.end_ms}, {"mean_ms", l.mean_ms}, {"sd_ms", l.sd_ms},
                        {"high_activity", l.high_activity}});
    }
    json fl = json::array();
    for (const auto& f : d.flushes) {
      json cands = json::array();
      for (const auto& r : f.candidates) cands.push_back(r.label());
      fl.push_back({{"observed", to_string(f.observed)}, {"candidates", cands}});
    }
    devs.push_back({{"device_index", d.timeline.device_index},
                    {"presence", segments_json(d.timeline.presence)},
                    {"activity", segments_json(d.timeline.activity)},
                    {"levels", levels},
                    {"flushes", fl}});
  }
  json dir = json::array();
  for (const auto& e : analysis.directory_events) {
    dir.push_back({{"at", e.at}, {"kind", to_string(e.kind)}, {"device_index", e.index}, {"newest", e.newest}});
  }
  return {{"devices", devs}, {"directory_events", dir}};
}

void write_segments_csv(std::ostream& out, const Analysis& analysis) {
  out << "device_index,start_ms,end_ms,label,confidence\n";
  out << std::setprecision(6);
  for (const auto& d : analysis.devices) {
    for (const auto* segs : {&d.timeline.presence, &d.timeline.activity}) {
      for (const auto& s : *segs) {
        out << d.timeline.device_index << ',' << s.start_ms << ',' << s.end_ms << ',' << label_name(s.label) << ','
            << s.confidence << '\n';
      }
    }
  }
}

void write_analysis(const Analysis& analysis, const std::string& dir) {
  const fs::path root = fs::path(dir) / "analysis";
  fs::create_directories(root);
  {
    auto out = open_out(root / "timeline.json");
    out << to_json(analysis).dump(2) << '\n';
  }
  auto out = open_out(root / "segments.csv");
  write_segments_csv(out, analysis);
}

ReportFormat parse_report_format(std::string_view text) {
  if (text == "summary-json") return ReportFormat::SummaryJson;
  if (text == "segments-csv") return ReportFormat::SegmentsCsv;
  if (text == "plotdata-csv") return ReportFormat::PlotdataCsv;
  throw InvalidInput("unknown report format '" + std::string(text) +
                     "' (expected summary-json, segments-csv or plotdata-csv)");
}

std::string report_file_name(ReportFormat format) {
  switch (format) {
    case ReportFormat::SummaryJson:
      return "report_summary.json";
    case ReportFormat::SegmentsCsv:
      return "report_segments.csv";
    case ReportFormat::PlotdataCsv:
      return "report_plotdata.csv";
  }
  return "report";
}

RunBundle load_run(const std::string& run_dir, const AnalysisOptions& options) {
  RunBundle b;
  b.attacker = load_attacker_data(run_dir);
  if (fs::exists(fs::path(run_dir) / "truth" / "ground_truth.json")) b.truth = load_truth(run_dir);
  const fs::path summary = fs::path(run_dir) / "summary.json";
  if (fs::exists(summary)) {
    auto in = open_in(summary);
    try {
      b.summary = json::parse(in);
    } catch (const json::exception& e) {
      throw DataIntegrityError(summary.string() + ": " + e.what());
    }
  }
  b.analysis = analyze(b.attacker, options);
  return b;
}

void write_report(std::ostream& out, ReportFormat format, const RunBundle& run) {
  switch (format) {
    case ReportFormat::SummaryJson: {
      json j = run.summary;
      j["analysis"] = to_json(run.analysis);
      out << j.dump(2) << '\n';
      return;
    }
    case ReportFormat::SegmentsCsv:
      write_segments_csv(out, run.analysis);
      return;
    case ReportFormat::PlotdataCsv: {
      out << "device_index,t_ms,rtt_ms,ground_truth_label,inferred_label\n";
      const auto streams = split_by_device(run.attacker.samples);
      for (const auto& d : run.analysis.devices) {
        const DeviceTruth* truth = nullptr;
        for (const auto& t : run.truth) {
          if (t.index == d.timeline.device_index) truth = &t;
        }
        for (const auto& s : acked_samples(streams.at(d.timeline.device_index))) {
          const Segment* seg = segment_at(d.timeline.activity, s.send_at);
          out << d.timeline.device_index << ',' << s.send_at << ',' << *s.device_rtt_ms() << ','
              << (truth ? std::string(to_string(truth->scripted_at(s.send_at))) : std::string()) << ','
              << (seg ? label_name(seg->label) : std::string("Unknown")) << '\n';
        }
      }
      return;
    }
  }
}

}  // namespace ackscope
