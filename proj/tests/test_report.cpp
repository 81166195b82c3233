#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "ackscope/config.hpp"
#include "ackscope/errors.hpp"
#include "ackscope/report.hpp"
#include "test_util.hpp"

using namespace ackscope;
using ackscope::testing::scenario_path;
namespace fs = std::filesystem;

namespace {

class RunDir : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = fs::temp_directory_path() / ("ackscope_report_" + std::to_string(::getpid()));
    fs::remove_all(dir_);
    scenario_ = new Scenario(load_scenario(scenario_path("replay_multi_device.yaml")));
    result_ = new RunResult(run_scenario(*scenario_));
    write_run(*result_, *scenario_, dir_.string());
  }
  static void TearDownTestSuite() {
    fs::remove_all(dir_);
    delete result_;
    delete scenario_;
  }

  static fs::path dir_;
  static Scenario* scenario_;
  static RunResult* result_;
};

fs::path RunDir::dir_;
Scenario* RunDir::scenario_ = nullptr;
RunResult* RunDir::result_ = nullptr;

std::string first_line(const std::string& s) { return s.substr(0, s.find('\n')); }

}  // namespace

TEST_F(RunDir, AttackerDataRoundTrips) {
  auto data = load_attacker_data(dir_.string());
  EXPECT_EQ(data.samples.size(), result_->samples.size());
  EXPECT_EQ(data.receipts.size(), result_->receipts.size());
  EXPECT_EQ(data.directory.size(), result_->directory.size());
  auto truth = load_truth(dir_.string());
  ASSERT_EQ(truth.size(), 3u);
  EXPECT_EQ(truth[2].index, 9);
  EXPECT_EQ(truth[2].history.size(), result_->device(9).history.size());
}

TEST_F(RunDir, CsvFallbackWhenJsonlMissing) {
  const fs::path copy = dir_.string() + "_csv";
  fs::remove_all(copy);
  fs::create_directories(copy / "attacker");
  fs::copy_file(dir_ / "attacker" / "samples.csv", copy / "attacker" / "samples.csv");
  auto data = load_attacker_data(copy.string());
  EXPECT_EQ(data.samples.size(), result_->samples.size());
  fs::remove_all(copy);
  EXPECT_THROW(load_attacker_data((fs::temp_directory_path() / "ackscope_nothing_here").string()), InvalidInput);
}

TEST_F(RunDir, AnalysisFilesAndSegments) {
  auto data = load_attacker_data(dir_.string());
  AnalysisOptions opt;
  for (const auto& d : scenario_->victim.devices) {
    opt.profiles[d.index] = d.profile;
    opt.links[d.index] = d.link;
  }
  auto a = analyze(data, opt);
  ASSERT_EQ(a.devices.size(), 3u);
  for (const auto& d : a.devices) {
    EXPECT_NO_THROW(check_segments(d.timeline.presence));
    EXPECT_NO_THROW(check_segments(d.timeline.activity));
  }
  write_analysis(a, dir_.string());
  std::ifstream csv(dir_ / "analysis" / "segments.csv");
  std::string header;
  std::getline(csv, header);
  EXPECT_EQ(header, "device_index,start_ms,end_ms,label,confidence");
  std::ifstream js(dir_ / "analysis" / "timeline.json");
  auto j = nlohmann::json::parse(js);
  EXPECT_EQ(j["devices"].size(), 3u);
  EXPECT_TRUE(j["directory_events"].is_array());
}

TEST_F(RunDir, ReportFormats) {
  auto bundle = load_run(dir_.string());
  std::ostringstream summary, segs, plot;
  write_report(summary, ReportFormat::SummaryJson, bundle);
  auto j = nlohmann::json::parse(summary.str());
  EXPECT_EQ(j["scenario"], "replay-multi-device");
  EXPECT_TRUE(j.contains("analysis"));
  write_report(segs, ReportFormat::SegmentsCsv, bundle);
  EXPECT_EQ(first_line(segs.str()), "device_index,start_ms,end_ms,label,confidence");
  write_report(plot, ReportFormat::PlotdataCsv, bundle);
  EXPECT_EQ(first_line(plot.str()), "device_index,t_ms,rtt_ms,ground_truth_label,inferred_label");
  std::size_t rows = 0;
  for (char c : plot.str()) rows += c == '\n';
  std::size_t acked = 0;
  for (const auto& s : result_->samples) acked += s.device_ack_at.has_value();
  EXPECT_EQ(rows - 1, acked);
}

TEST(Formats, Parse) {
  EXPECT_EQ(parse_report_format("summary-json"), ReportFormat::SummaryJson);
  EXPECT_EQ(parse_report_format("segments-csv"), ReportFormat::SegmentsCsv);
  EXPECT_EQ(parse_report_format("plotdata-csv"), ReportFormat::PlotdataCsv);
  EXPECT_THROW(parse_report_format("pdf"), InvalidInput);
  EXPECT_EQ(report_file_name(ReportFormat::PlotdataCsv), "report_plotdata.csv");
}
