#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "faircv/experiment.hpp"

using namespace faircv;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    explicit TempDir(const char* name) : path(fs::temp_directory_path() / name) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("median: odd, even, and error cases") {
    CHECK(exp::median({3.0, 1.0, 2.0}) == 2.0);
    CHECK(exp::median({4.0, 1.0, 2.0, 3.0}) == 2.5);
    CHECK(exp::median({7.0}) == 7.0);
    CHECK_THROWS_AS((void)exp::median({}), DataError);
}

TEST_CASE("run_dir follows the documented layout") {
    CHECK(exp::run_dir("root", BiasAxis::Gender, scen::ScenarioId::S2, 7) == fs::path("root/gender/s2/7"));
    CHECK(exp::run_dir("root", BiasAxis::Ethnicity, scen::ScenarioId::Agnostic, 12) ==
          fs::path("root/ethnicity/agnostic/12"));
}

TEST_CASE("predictions csv round-trips") {
    TempDir tmp("faircv_exp_pred");
    const std::vector<metrics::Prediction> predictions = {{0, 0.5}, {7, 0.123456789}, {12, 1.0}};
    exp::write_predictions_csv(tmp.path / "p.csv", predictions);
    const auto loaded = exp::read_predictions_csv(tmp.path / "p.csv");
    REQUIRE(loaded.size() == predictions.size());
    for (size_t i = 0; i < loaded.size(); ++i) {
        CHECK(loaded[i].first == predictions[i].first);
        CHECK(loaded[i].second == doctest::Approx(predictions[i].second).epsilon(1e-9));
    }
    CHECK_THROWS_AS((void)exp::read_predictions_csv(tmp.path / "absent.csv"), DataError);
}

TEST_CASE("execute_generate then execute_run then execute_audit end to end") {
    TempDir tmp("faircv_exp_e2e");
    cfg::ExperimentConfig config;

    exp::execute_generate({600, 9, tmp.path / "d.csv"}, config);
    CHECK(fs::exists(tmp.path / "d.csv"));
    CHECK(fs::exists(tmp.path / "d.csv.config.ini"));
    const auto loaded_cfg = cfg::load_config(tmp.path / "d.csv.config.ini");
    CHECK(loaded_cfg.weights.gender_penalty == config.weights.gender_penalty);

    exp::RunArgs run_args;
    run_args.data = tmp.path / "d.csv";
    run_args.scenarios = {scen::ScenarioId::S1, scen::ScenarioId::S2};
    run_args.bias_axis = BiasAxis::Gender;
    run_args.seeds = {1};
    run_args.out = tmp.path / "runs";
    std::ostringstream progress;
    CHECK(exp::execute_run(run_args, config, progress) == 0);
    CHECK(progress.str().find("gender/s1/1 epoch 10") != std::string::npos);

    exp::AuditArgs audit_args;
    audit_args.runs = tmp.path / "runs";
    audit_args.data = tmp.path / "d.csv";
    audit_args.out = tmp.path / "audit";
    audit_args.top_k = 20;
    const auto report = exp::execute_audit(audit_args, config);

    CHECK(report["top_k"] == 20);
    const auto& gender = report["axes"]["gender"]["scenarios"];
    REQUIRE(gender.contains("s1"));
    REQUIRE(gender.contains("s2"));
    CHECK(gender["s1"]["seeds"].contains("1"));
    CHECK(gender["s1"]["seeds"]["1"]["screening"]["rates"].contains("M"));
    CHECK(gender["s1"]["median_kl"].get<double>() >= 0.0);
    // screening percentages over the audited axis sum to 100
    double pct = 0.0;
    for (const auto& [group, rate] : gender["s2"]["seeds"]["1"]["screening"]["rates"].items()) {
        pct += rate["percentage"].get<double>();
    }
    CHECK(pct == doctest::Approx(100.0));
    CHECK(fs::exists(tmp.path / "audit" / "bias_report.json"));
}

TEST_CASE("execute_run validates the config and the dataset path upfront") {
    TempDir tmp("faircv_exp_fail");
    cfg::ExperimentConfig config;
    exp::execute_generate({600, 2, tmp.path / "d.csv"}, config);

    exp::RunArgs run_args;
    run_args.data = tmp.path / "d.csv";
    run_args.scenarios = {scen::ScenarioId::S3};
    run_args.bias_axis = BiasAxis::Gender;
    run_args.seeds = {1};
    run_args.out = tmp.path / "runs";
    std::ostringstream progress;

    auto bad_config = config;
    bad_config.agnostic.lambda = -1.0;
    CHECK_THROWS_AS((void)exp::execute_run(run_args, bad_config, progress), ConfigError);

    auto missing = run_args;
    missing.data = tmp.path / "absent.csv";
    CHECK_THROWS_AS((void)exp::execute_run(missing, config, progress), DataError);

    auto no_seeds = run_args;
    no_seeds.seeds = {};
    CHECK_THROWS_AS((void)exp::execute_run(no_seeds, config, progress), ConfigError);
}
