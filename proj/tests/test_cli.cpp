#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"

namespace fs = std::filesystem;

namespace {

int run_cli(const std::string& args) {
    const std::string cmd = std::string(FAIRCV_CLI_PATH) + " " + args + " 2>/dev/null >/dev/null";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

size_t line_count(const fs::path& path) {
    std::ifstream in(path);
    size_t lines = 0;
    std::string line;
    while (std::getline(in, line)) ++lines;
    return lines;
}

struct TempDir {
    fs::path path;
    TempDir() : path(fs::temp_directory_path() / "faircv_cli_test") {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("cli: gen writes the dataset plus the resolved config archive") {
    TempDir tmp;
    const auto data = tmp.path / "d.csv";
    CHECK(run_cli("gen --profiles 600 --seed 7 --out " + data.string()) == 0);
    CHECK(line_count(data) == 601);  // header + one row per profile
    CHECK(fs::exists(tmp.path / "d.csv.config.ini"));
}

TEST_CASE("cli: exit codes follow the usage/data split") {
    TempDir tmp;
    // usage errors
    CHECK(run_cli("gen --profiles 100 --out " + (tmp.path / "x.csv").string()) == 1);
    CHECK(run_cli("gen --bogus-flag 1 --out " + (tmp.path / "x.csv").string()) == 1);
    CHECK(run_cli("run --data missing.csv --scenario 9 --out " + tmp.path.string()) == 1);
    CHECK(run_cli("nosuchcommand") == 1);
    // data errors
    CHECK(run_cli("run --data " + (tmp.path / "missing.csv").string() + " --out " + tmp.path.string()) == 2);
    fs::create_directories(tmp.path / "empty_runs");
    CHECK(run_cli("audit --runs " + (tmp.path / "empty_runs").string() + " --data " + (tmp.path / "missing.csv").string() +
                  " --out " + tmp.path.string()) == 2);
    // help is not an error
    CHECK(run_cli("--help") == 0);
}

TEST_CASE("cli: gen, run, audit pipeline produces the documented artifacts") {
    TempDir tmp;
    const auto data = tmp.path / "d.csv";
    const auto runs = tmp.path / "runs";
    const auto audit = tmp.path / "audit";
    REQUIRE(run_cli("gen --profiles 600 --seed 3 --out " + data.string()) == 0);
    REQUIRE(run_cli("run --data " + data.string() + " --scenario 3 --bias gender --seeds 1,2 --out " + runs.string()) ==
            0);

    for (const int seed : {1, 2}) {
        const auto dir = runs / "gender" / "s3" / std::to_string(seed);
        CHECK(fs::exists(dir / "history.csv"));
        CHECK(fs::exists(dir / "predictions.csv"));
        CHECK(fs::exists(dir / "model.bin"));
        CHECK(line_count(dir / "predictions.csv") == 121);  // header + 120 validation rows
        CHECK(line_count(dir / "history.csv") == 11);       // header + 10 epochs
    }
    CHECK(fs::exists(runs / "resolved_config.ini"));

    REQUIRE(run_cli("audit --runs " + runs.string() + " --data " + data.string() + " --top-k 20 --out " +
                    audit.string()) == 0);
    CHECK(fs::exists(audit / "bias_report.json"));
    CHECK(fs::exists(audit / "gender" / "hist_s3_male.csv"));
    CHECK(fs::exists(audit / "gender" / "hist_s3_female.csv"));
    CHECK(line_count(audit / "gender" / "hist_s3_male.csv") == 51);  // header + 50 bins

    // audit with --top-k above the prediction count is a data error
    CHECK(run_cli("audit --runs " + runs.string() + " --data " + data.string() + " --top-k 5000 --out " +
                  audit.string()) == 2);

    // --print-report puts the JSON (and nothing else) on stdout
    const auto captured = tmp.path / "stdout.json";
    const std::string cmd = std::string(FAIRCV_CLI_PATH) + " audit --runs " + runs.string() + " --data " +
                            data.string() + " --top-k 20 --print-report --out " + audit.string() +
                            " 2>/dev/null > " + captured.string();
    REQUIRE(std::system(cmd.c_str()) == 0);
    std::ifstream in(captured);
    std::stringstream buffer;
    buffer << in.rdbuf();
    CHECK(buffer.str().front() == '{');
    CHECK(buffer.str().find("\"top_k\": 20") != std::string::npos);
}

TEST_CASE("cli: agnostic runs write transform and leakage artifacts") {
    TempDir tmp;
    const auto data = tmp.path / "d.csv";
    const auto runs = tmp.path / "runs";
    REQUIRE(run_cli("gen --profiles 600 --seed 5 --out " + data.string()) == 0);
    REQUIRE(run_cli("run --data " + data.string() + " --scenario agnostic --bias ethnicity --seeds 4 --out " +
                    runs.string()) == 0);
    const auto dir = runs / "ethnicity" / "agnostic" / "4";
    CHECK(fs::exists(dir / "model.bin"));
    CHECK(fs::exists(dir / "transform.bin"));
    CHECK(fs::exists(dir / "leakage.csv"));
    CHECK(line_count(dir / "leakage.csv") == 21);  // header + 10 epochs x 2 attributes
}
