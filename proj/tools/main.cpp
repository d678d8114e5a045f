// faircv: synthesize biased resume-scoring datasets, train scorers under
// controlled input scenarios, and audit demographic bias in the results.

#include <cstdlib>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "faircv/config.hpp"
#include "faircv/experiment.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumerical = 3;

std::vector<uint64_t> parse_seed_list(const std::string& list) {
    std::vector<uint64_t> seeds;
    std::stringstream ss(list);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        size_t pos = 0;
        const uint64_t seed = std::stoull(item, &pos);
        if (pos != item.size()) throw faircv::ConfigError("invalid seed '" + item + "'");
        seeds.push_back(seed);
    }
    if (seeds.empty()) throw faircv::ConfigError("empty seed list");
    return seeds;
}

std::vector<faircv::scen::ScenarioId> parse_scenarios(const std::string& value) {
    if (value == "all") return {faircv::scen::kAllScenarios.begin(), faircv::scen::kAllScenarios.end()};
    return {faircv::scen::scenario_from_string(value)};
}

faircv::BiasAxis parse_axis(const std::string& value) {
    if (value == "gender") return faircv::BiasAxis::Gender;
    if (value == "ethnicity") return faircv::BiasAxis::Ethnicity;
    throw faircv::ConfigError("unknown bias axis '" + value + "' (expected gender|ethnicity)");
}

faircv::cfg::ExperimentConfig resolve_config(const std::string& config_path) {
    if (config_path.empty()) return {};
    return faircv::cfg::load_config(config_path);
}

std::string default_out_root() {
    const char* env = std::getenv("FAIRCV_OUT_ROOT");
    return env != nullptr ? env : ".";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Synthetic testbed for measuring and removing demographic bias in automated resume scoring"};
    app.require_subcommand(1);

    std::string config_path;

    auto* gen = app.add_subcommand("gen", "Generate a synthetic scored dataset");
    int gen_profiles = 24000;
    uint64_t gen_seed = 0;
    std::string gen_out;
    gen->add_option("--profiles", gen_profiles, "Number of profiles (divisible by 6)")->capture_default_str();
    gen->add_option("--seed", gen_seed, "Generation seed")->capture_default_str();
    gen->add_option("--config", config_path, "Config file");
    gen->add_option("--out", gen_out, "Output CSV path")->required();

    auto* run = app.add_subcommand("run", "Train scenario scorers and write run artifacts");
    std::string run_data, run_scenario = "all", run_bias = "gender", run_seeds = "1", run_out;
    int run_jobs = 1;
    run->add_option("--data", run_data, "Dataset CSV from 'gen'")->required();
    run->add_option("--scenario", run_scenario, "1|2|3|4|agnostic|all")->capture_default_str();
    run->add_option("--bias", run_bias, "gender|ethnicity")->capture_default_str();
    run->add_option("--seeds", run_seeds, "Comma-separated seed list")->capture_default_str();
    run->add_option("--config", config_path, "Config file");
    run->add_option("--out", run_out, "Output directory (default $FAIRCV_OUT_ROOT/runs)");
    run->add_option("--jobs", run_jobs, "Concurrent runs")->capture_default_str();

    auto* audit = app.add_subcommand("audit", "Consolidate runs into a bias report");
    std::string audit_runs, audit_data, audit_out;
    int audit_top_k = 100;
    bool audit_print = false;
    audit->add_option("--runs", audit_runs, "Runs directory from 'run'")->required();
    audit->add_option("--data", audit_data, "Dataset CSV from 'gen'")->required();
    audit->add_option("--top-k", audit_top_k, "Screening pool size")->capture_default_str();
    audit->add_option("--config", config_path, "Config file");
    audit->add_option("--out", audit_out, "Report directory (default $FAIRCV_OUT_ROOT/audit)");
    audit->add_flag("--print-report", audit_print, "Print the report JSON to stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        const auto config = resolve_config(config_path);
        if (gen->parsed()) {
            if (gen_profiles <= 0 || gen_profiles % 6 != 0) {
                throw faircv::ConfigError("--profiles must be a positive multiple of 6 (got " +
                                          std::to_string(gen_profiles) + ")");
            }
            faircv::exp::execute_generate({gen_profiles, gen_seed, gen_out}, config);
            std::cerr << "wrote " << gen_out << " (" << gen_profiles << " profiles)\n";
        } else if (run->parsed()) {
            faircv::exp::RunArgs args;
            args.data = run_data;
            args.scenarios = parse_scenarios(run_scenario);
            args.bias_axis = parse_axis(run_bias);
            args.seeds = parse_seed_list(run_seeds);
            args.out = run_out.empty() ? std::filesystem::path(default_out_root()) / "runs"
                                       : std::filesystem::path(run_out);
            args.jobs = run_jobs;
            const int failures = faircv::exp::execute_run(args, config, std::cerr);
            if (failures > 0) {
                std::cerr << failures << " run(s) failed\n";
                return kExitNumerical;
            }
        } else if (audit->parsed()) {
            faircv::exp::AuditArgs args;
            args.runs = audit_runs;
            args.data = audit_data;
            args.top_k = audit_top_k;
            args.out = audit_out.empty() ? std::filesystem::path(default_out_root()) / "audit"
                                         : std::filesystem::path(audit_out);
            const auto report = faircv::exp::execute_audit(args, config);
            std::cerr << "wrote " << (args.out / "bias_report.json").string() << "\n";
            if (audit_print) std::cout << report.dump(2) << "\n";
        }
    } catch (const faircv::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const faircv::NumericalError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const faircv::DataError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
    return kExitOk;
}
