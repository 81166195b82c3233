#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "ackscope/config.hpp"
#include "ackscope/errors.hpp"
#include "ackscope/evaluation.hpp"
#include "ackscope/exhaustion.hpp"
#include "ackscope/report.hpp"
#include "ackscope/simulation.hpp"

namespace fs = std::filesystem;
using namespace ackscope;
using json = nlohmann::json;

namespace {

struct Globals {
  std::optional<std::uint64_t> seed;
  std::string scenario;
  std::string out;
  std::string catalog;
};

ProfileCatalog catalog_from(const Globals& g) {
  return g.catalog.empty() ? ProfileCatalog::builtin() : load_profile_catalog(g.catalog);
}

Scenario scenario_from(const Globals& g) {
  if (g.scenario.empty()) throw ValidationError("--scenario is required");
  Scenario sc = load_scenario(g.scenario, catalog_from(g));
  if (g.seed) sc.seed = *g.seed;
  return sc;
}

void emit(const json& j, const Globals& g, const std::string& file) {
  if (g.out.empty()) {
    std::cout << j.dump(2) << '\n';
    return;
  }
  fs::create_directories(g.out);
  std::ofstream out(fs::path(g.out) / file);
  if (!out) throw std::runtime_error("cannot write " + (fs::path(g.out) / file).string());
  out << j.dump(2) << '\n';
  std::cout << "wrote " << (fs::path(g.out) / file).string() << '\n';
}

AnalysisOptions options_from(const Globals& g) {
  AnalysisOptions o;
  if (g.scenario.empty()) return o;
  const Scenario sc = scenario_from(g);
  for (const auto& d : sc.victim.devices) {
    o.profiles[d.index] = d.profile;
    o.links[d.index] = d.link;
  }
  return o;
}

std::vector<Millis> parse_levels(const std::string& text) {
  std::vector<Millis> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(parse_duration(item));
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Delivery-receipt side-channel simulator and analysis toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--seed", g.seed, "Override the scenario seed");
  app.add_option("--scenario", g.scenario, "Scenario file (YAML)");
  app.add_option("--out", g.out, "Output directory");
  app.add_option("--catalog", g.catalog, "Profile catalog (defaults to the built-in one)");

  auto* simulate = app.add_subcommand("simulate", "Run a scenario and write attacker and truth traces");

  auto* analyze_cmd = app.add_subcommand("analyze", "Reconstruct timelines from a run's attacker traces");
  std::string run_dir;
  analyze_cmd->add_option("--run", run_dir, "Run directory written by simulate")->required();

  auto* fingerprint = app.add_subcommand("fingerprint", "Fingerprint platforms from backlog flushes");
  fingerprint->add_option("--run", run_dir, "Run directory written by simulate");
  std::uint64_t trials = 1;
  fingerprint->add_option("--trials", trials, "Without --run: seeds per ordering-table row")->check(CLI::PositiveNumber);

  auto* exhaust = app.add_subcommand("exhaust", "Predict and simulate a traffic/battery flood");
  std::string policy_name = "WhatsAppLike", profile_name = "iPhone13Pro-WhatsApp", kind_name = "InvalidRefReaction",
              duration = "1h";
  std::int64_t payload = 1'000'000;
  double rate = 3.7;
  bool predict_only = false;
  exhaust->add_option("--policy", policy_name, "WhatsAppLike, SignalLike or ThreemaLike");
  exhaust->add_option("--profile", profile_name, "Victim profile");
  exhaust->add_option("--kind", kind_name, "Probe kind");
  exhaust->add_option("--payload", payload, "Payload bytes per probe");
  exhaust->add_option("--rate", rate, "Requested probes per second");
  exhaust->add_option("--duration", duration, "Attack duration (e.g. 1h, 600s)");
  exhaust->add_flag("--predict-only", predict_only, "Closed form only");

  auto* mitigate = app.add_subcommand("mitigate", "Paired baseline/mitigated attacker metrics");
  std::string mitigation_file, sweep;
  mitigate->add_option("--config", mitigation_file, "Mitigation block (YAML); defaults to the scenario's");
  mitigate->add_option("--sweep", sweep, "Comma-separated noise levels, e.g. 0,1s,2s,5s,10s");

  auto* report = app.add_subcommand("report", "Emit summary-json, segments-csv or plotdata-csv");
  std::string format;
  report->add_option("--run", run_dir, "Run directory written by simulate")->required();
  report->add_option("--format", format, "summary-json | segments-csv | plotdata-csv")->required();

  auto* profiles = app.add_subcommand("profiles", "Inspect the profile catalog");
  profiles->require_subcommand(1);
  auto* plist = profiles->add_subcommand("list", "List profile names");
  auto* pshow = profiles->add_subcommand("show", "Print one profile as YAML");
  std::string show_name;
  pshow->add_option("name", show_name, "Profile name")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (simulate->parsed()) {
      const Scenario sc = scenario_from(g);
      const RunResult r = run_scenario(sc);
      const std::string out = g.out.empty() ? "out" : g.out;
      write_run(r, sc, out);
      std::cout << run_summary(r, sc).dump(2) << '\n';
    } else if (analyze_cmd->parsed()) {
      const Analysis a = analyze(load_attacker_data(run_dir), options_from(g));
      const std::string out = g.out.empty() ? run_dir : g.out;
      write_analysis(a, out);
      std::cout << "wrote " << (fs::path(out) / "analysis").string() << '\n';
    } else if (fingerprint->parsed()) {
      json j;
      if (!run_dir.empty()) {
        const AttackerData data = load_attacker_data(run_dir);
        j["flushes"] = json::array();
        for (const auto& f : find_backlog_flushes(data.receipts, data.samples)) {
          const auto fp = fingerprint_platform(f.events, f.sent_order);
          json cands = json::array();
          for (const auto& r : fp.candidates) cands.push_back(r.label());
          j["flushes"].push_back({{"device_index", f.device_index},
                                  {"observed_at", f.observed_at},
                                  {"observed", to_string(fp.observed)},
                                  {"candidates", cands}});
        }
      } else {
        const MitigationConfig cfg = g.scenario.empty() ? MitigationConfig{} : scenario_from(g).mitigations;
        const std::uint64_t base = g.seed.value_or(1);
        j["rows"] = json::array();
        for (const auto& row : receipt_ordering_table()) {
          std::uint64_t hits = 0;
          std::size_t size = 0;
          for (std::uint64_t s = 0; s < trials; ++s) {
            const auto t = run_fingerprint_trial(row, cfg, base + s);
            hits += t.success ? 1 : 0;
            size = t.fingerprint.candidates.size();
          }
          j["rows"].push_back({{"row", row.label()}, {"trials", trials}, {"success", hits}, {"candidates", size}});
        }
      }
      emit(j, g, "fingerprint.json");
    } else if (exhaust->parsed()) {
      ExhaustionPlan plan;
      plan.policy = parse_enum<MessengerKind>(policy_name);
      plan.kind = parse_enum<ProbeKind>(kind_name);
      plan.payload_bytes = payload;
      plan.rate_per_s = rate;
      plan.duration_s = static_cast<double>(parse_duration(duration)) / 1000.0;
      const auto pred = predict_traffic(plan);
      json j = {{"policy", policy_name}, {"payload_bytes", payload}, {"requested_rate_per_s", rate},
                {"rate_per_s", pred.rate_per_s}, {"bytes_per_s", pred.bytes_per_s}, {"mb_per_h", pred.mb_per_h}};
      if (!predict_only) {
        const auto catalog = catalog_from(g);
        const auto r = run_exhaustion(plan, catalog.find(profile_name), g.seed.value_or(1));
        j["simulated"] = {{"profile", profile_name},
                          {"probes_sent", r.probes_sent},
                          {"rx_bytes", r.rx_bytes},
                          {"mb_per_h", r.observed_mb_per_h},
                          {"battery_delta_pct", r.battery_delta_pct},
                          {"ui_notifications", r.ui_notifications}};
      }
      emit(j, g, "exhaustion.json");
    } else if (mitigate->parsed()) {
      const Scenario sc = scenario_from(g);
      json j;
      if (!sweep.empty()) {
        j["noise_sweep"] = json::array();
        for (const auto& p : noise_sweep(sc, parse_levels(sweep))) {
          j["noise_sweep"].push_back({{"max_noise_ms", p.max_noise_ms}, {"state_accuracy", p.state_accuracy}});
        }
      } else {
        MitigationConfig cfg = sc.mitigations;
        if (!mitigation_file.empty()) {
          std::ifstream in(mitigation_file);
          if (!in) throw InvalidInput("cannot open " + mitigation_file);
          std::stringstream ss;
          ss << in.rdbuf();
          cfg = parse_mitigations(ss.str());
        }
        const auto ev = evaluate_mitigation(sc, cfg);
        j = {{"scenario", sc.name}, {"seed", sc.seed}, {"baseline", to_json(ev.baseline)},
             {"mitigated", to_json(ev.mitigated)}};
      }
      emit(j, g, "mitigation.json");
    } else if (report->parsed()) {
      const ReportFormat f = parse_report_format(format);
      const RunBundle b = load_run(run_dir, options_from(g));
      if (g.out.empty()) {
        write_report(std::cout, f, b);
      } else {
        fs::create_directories(g.out);
        const fs::path p = fs::path(g.out) / report_file_name(f);
        std::ofstream out(p);
        if (!out) throw std::runtime_error("cannot write " + p.string());
        write_report(out, f, b);
        std::cout << "wrote " << p.string() << '\n';
      }
    } else if (plist->parsed()) {
      const auto catalog = catalog_from(g);
      for (const auto& p : catalog.profiles()) {
        std::cout << p.name << '\t' << p.app << '\t' << to_string(p.os) << '\t' << to_string(p.device_class) << '\n';
      }
    } else if (pshow->parsed()) {
      const auto catalog = catalog_from(g);
      std::cout << profile_to_yaml(catalog.find(show_name));
    }
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << '\n';
    return 1;
  } catch (const InvalidInput& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
