#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

#include "faircv/config.hpp"
#include "faircv/metrics.hpp"
#include "faircv/scenarios.hpp"

namespace faircv::exp {

// runs/<bias_axis>/<scenario>/<seed>/
std::filesystem::path run_dir(const std::filesystem::path& root, BiasAxis axis, scen::ScenarioId scenario,
                              uint64_t seed);

void write_history_csv(const std::filesystem::path& path, const nn::TrainHistory& history);
void write_predictions_csv(const std::filesystem::path& path, const std::vector<metrics::Prediction>& predictions);
std::vector<metrics::Prediction> read_predictions_csv(const std::filesystem::path& path);
void write_leakage_csv(const std::filesystem::path& path, const std::vector<sens::LeakagePoint>& trace);

struct GenerateArgs {
    int profiles = 24000;
    uint64_t seed = 0;
    std::filesystem::path out;
};

// Writes the dataset CSV plus the resolved config at <out>.config.ini.
void execute_generate(const GenerateArgs& args, const cfg::ExperimentConfig& config);

struct RunArgs {
    std::filesystem::path data;
    std::vector<scen::ScenarioId> scenarios;
    BiasAxis bias_axis = BiasAxis::Gender;
    std::vector<uint64_t> seeds;
    std::filesystem::path out;
    int jobs = 1;
};

// Trains every requested (scenario, seed) pair and writes per-run artifacts:
// history.csv, predictions.csv, model.bin (+ transform.bin, leakage.csv for
// agnostic runs), plus resolved_config.ini at the output root. Per-run
// failures are reported on `progress` without aborting the remaining runs.
// Returns the number of failed runs.
int execute_run(const RunArgs& args, const cfg::ExperimentConfig& config, std::ostream& progress);

struct AuditArgs {
    std::filesystem::path runs;
    std::filesystem::path data;
    std::filesystem::path out;
    int top_k = 100;
};

// Consolidates every run found under args.runs into bias_report.json plus
// per-scenario histogram plot data, and runs the probe leakage audit against
// any agnostic transforms found.
nlohmann::ordered_json execute_audit(const AuditArgs& args, const cfg::ExperimentConfig& config);

double median(std::vector<double> values);

}  // namespace faircv::exp
