#include "freight/freight.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <string>

namespace {

using namespace freight;

// Exit codes: 0 success, 1 fatal configuration or I/O, 2 insufficient data
// with fallback disabled.
int run_guarded(const char* stage, const std::function<void()>& fn) {
  try {
    fn();
    return 0;
  } catch (const insufficient_data_error& e) {
    std::cerr << stage << ": " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << stage << ": " << e.what() << '\n';
    return 1;
  }
}

run_config load(const std::string& path, std::optional<std::size_t> workers) {
  auto cfg = load_run_config(path);
  if (workers) cfg.workers = *workers;
  return cfg;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Freight trip-end identification from truck GPS trajectories"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::size_t> workers;

  auto add_stage = [&](const char* name, const char* help) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "Run configuration file")->required()->check(CLI::ExistingFile);
    sub->add_option("--workers", workers, "Worker threads; 0 uses all hardware threads");
    return sub;
  };
  auto* ingest = add_stage("ingest", "Parse and clean raw GPS records");
  auto* calibrate = add_stage("calibrate", "Detect the speed and dwell thresholds and the POI radii");
  auto* extract = add_stage("extract", "Detect stops, select trip ends and chain trips");
  auto* stats = add_stage("stats", "Aggregate trips into OD, category, time and distance statistics");
  auto* all = add_stage("run", "Run ingest, calibrate, extract and stats in order");

  std::string plan_path, synth_out;
  std::optional<std::uint64_t> seed;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic fleet with ground-truth labels");
  synth_cmd->add_option("--plan", plan_path, "Fleet plan file; built-in defaults when omitted")
      ->check(CLI::ExistingFile);
  synth_cmd->add_option("--seed", seed, "Override the plan seed");
  synth_cmd->add_option("--output", synth_out, "Output directory")->required();
  synth_cmd->add_option("--workers", workers, "Worker threads; 0 uses all hardware threads");

  std::string predictions, truth, score_out;
  synth::match_rule rule;
  auto* score_cmd = app.add_subcommand("score", "Score predicted trip ends against ground truth");
  score_cmd->add_option("--predictions", predictions, "trip_ends.csv from extract")
      ->required()
      ->check(CLI::ExistingFile);
  score_cmd->add_option("--truth", truth, "truth.csv from synth")->required()->check(CLI::ExistingFile);
  score_cmd->add_option("--radius", rule.radius_m, "Match radius in meters")->capture_default_str();
  score_cmd->add_option("--window", rule.window_s, "Match time window in seconds")->capture_default_str();
  score_cmd->add_option("--output", score_out, "Also write the score to this file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    // Help and version exit 0; every usage error is a configuration error.
    return app.exit(e) == 0 ? 0 : 1;
  }

  if (ingest->parsed())
    return run_guarded("ingest", [&] { pipeline::run_ingest(load(config_path, workers), std::cerr); });
  if (calibrate->parsed())
    return run_guarded("calibrate", [&] { pipeline::run_calibrate(load(config_path, workers), std::cerr); });
  if (extract->parsed())
    return run_guarded("extract", [&] { pipeline::run_extract(load(config_path, workers), std::cerr); });
  if (stats->parsed())
    return run_guarded("stats", [&] { pipeline::run_stats(load(config_path, workers), std::cerr); });
  if (all->parsed())
    return run_guarded("run", [&] {
      auto cfg = load(config_path, workers);
      pipeline::run_ingest(cfg, std::cerr);
      pipeline::run_calibrate(cfg, std::cerr);
      if (cfg.calibration_report.empty()) cfg.calibration_report = cfg.out("calibration.ini");
      pipeline::run_extract(cfg, std::cerr);
      pipeline::run_stats(cfg, std::cerr);
    });
  if (synth_cmd->parsed())
    return run_guarded("synth", [&] {
      auto plan = plan_path.empty() ? synth::fleet_plan{} : load_fleet_plan(plan_path);
      if (seed) plan.seed = *seed;
      plan.validate();
      const auto f = synth::generate_fleet(plan, workers.value_or(0));
      pipeline::write_fleet(f, plan, synth_out);
      std::cerr << "synth: " << plan.n_trucks << " trucks, " << f.records.size() << " records, " << f.pois.size()
                << " POIs, " << f.roads.size() << " road segments, " << f.cities.size() << " cities, "
                << f.truth.size() << " labelled visits\n";
    });
  if (score_cmd->parsed())
    return run_guarded("score", [&] {
      const auto preds = pipeline::read_predictions(predictions);
      auto truth_in = pipeline::open_in(truth, "truth");
      const auto labels = synth::read_truth(truth_in);
      const auto s = synth::score_trip_ends(preds, labels, rule);
      pipeline::write_score(std::cout, s);
      if (!score_out.empty()) {
        auto out = pipeline::open_out(score_out);
        pipeline::write_score(out, s);
        pipeline::finish(out, score_out);
      }
    });
  return 0;
}
