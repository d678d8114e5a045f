#include "faircv/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <ostream>

namespace faircv::exp {

namespace fs = std::filesystem;

std::filesystem::path run_dir(const std::filesystem::path& root, BiasAxis axis, scen::ScenarioId scenario,
                              uint64_t seed) {
    return root / to_string(axis) / scen::to_string(scenario) / std::to_string(seed);
}

namespace {

std::string format_real(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

std::ofstream open_out(const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open file for writing: " + path.string());
    return out;
}

}  // namespace

void write_history_csv(const std::filesystem::path& path, const nn::TrainHistory& history) {
    auto out = open_out(path);
    out << "epoch,train_loss,val_loss\n";
    for (size_t e = 0; e < history.train_loss.size(); ++e) {
        out << (e + 1) << ',' << format_real(history.train_loss[e]) << ',' << format_real(history.val_loss[e]) << '\n';
    }
}

void write_predictions_csv(const std::filesystem::path& path, const std::vector<metrics::Prediction>& predictions) {
    auto out = open_out(path);
    out << "id,score\n";
    for (const auto& [id, score] : predictions) out << id << ',' << format_real(score) << '\n';
}

std::vector<metrics::Prediction> read_predictions_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open predictions file: " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw DataError("predictions file is empty: " + path.string());
    std::vector<metrics::Prediction> predictions;
    size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos) {
            throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected 'id,score'");
        }
        int64_t id = 0;
        double score = 0.0;
        const auto id_res = std::from_chars(line.data(), line.data() + comma, id);
        const auto score_res = std::from_chars(line.data() + comma + 1, line.data() + line.size(), score);
        if (id_res.ec != std::errc{} || score_res.ec != std::errc{}) {
            throw DataError(path.string() + ":" + std::to_string(line_no) + ": malformed row");
        }
        predictions.emplace_back(id, score);
    }
    return predictions;
}

void write_leakage_csv(const std::filesystem::path& path, const std::vector<sens::LeakagePoint>& trace) {
    auto out = open_out(path);
    out << "epoch,attr,probe_accuracy\n";
    for (const auto& point : trace) {
        out << (point.epoch + 1) << ',' << embed::to_string(point.attribute) << ',' << format_real(point.probe_accuracy)
            << '\n';
    }
}

void execute_generate(const GenerateArgs& args, const cfg::ExperimentConfig& config) {
    config.validate();
    const auto profiles =
        data::generate_dataset(args.profiles, config.weights, config.distributions, config.embedding, args.seed);
    if (args.out.has_parent_path()) fs::create_directories(args.out.parent_path());
    data::save_dataset(profiles, args.out);
    cfg::save_config(config, args.out.string() + ".config.ini");
}

int execute_run(const RunArgs& args, const cfg::ExperimentConfig& config, std::ostream& progress) {
    config.validate();
    if (args.seeds.empty()) throw ConfigError("run: at least one seed required");
    if (args.scenarios.empty()) throw ConfigError("run: at least one scenario required");
    if (!fs::exists(args.data)) throw DataError("dataset not found: " + args.data.string());

    const auto profiles = data::load_dataset(args.data);
    const auto split = data::split_dataset(profiles, config.split.ratio, config.split.seed);

    scen::RunAllOptions options;
    options.scenarios = args.scenarios;
    options.agnostic = config.agnostic;
    options.training = config.training;
    options.jobs = args.jobs;

    fs::create_directories(args.out);
    cfg::save_config(config, args.out / "resolved_config.ini");

    const auto outcomes = scen::run_all(split, args.bias_axis, args.seeds, options);

    int failures = 0;
    for (const auto& outcome : outcomes) {
        const std::string tag = to_string(args.bias_axis) + "/" + scen::to_string(outcome.scenario.id) + "/" +
                                std::to_string(outcome.seed);
        if (!outcome.result.has_value()) {
            ++failures;
            progress << tag << " FAILED: " << outcome.error << "\n";
            continue;
        }
        const auto dir = run_dir(args.out, args.bias_axis, outcome.scenario.id, outcome.seed);
        fs::create_directories(dir);
        write_history_csv(dir / "history.csv", outcome.result->history);
        write_predictions_csv(dir / "predictions.csv", outcome.result->val_predictions);
        nn::save_model(outcome.result->model, dir / "model.bin");
        if (outcome.agnostic.has_value()) {
            nn::save_model(outcome.agnostic->transform.net, dir / "transform.bin");
            write_leakage_csv(dir / "leakage.csv", outcome.agnostic->trace);
        }
        const auto& history = outcome.result->history;
        for (size_t e = 0; e < history.train_loss.size(); ++e) {
            progress << tag << " epoch " << (e + 1) << " train=" << format_real(history.train_loss[e])
                     << " val=" << format_real(history.val_loss[e]) << "\n";
        }
    }
    return failures;
}

double median(std::vector<double> values) {
    if (values.empty()) throw DataError("median: empty input");
    std::sort(values.begin(), values.end());
    const size_t n = values.size();
    return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

namespace {

struct GroupedScores {
    std::vector<std::string> names;          // lowercase group names along the axis
    std::vector<std::vector<double>> scores; // one score list per group
};

GroupedScores group_scores(const std::vector<metrics::Prediction>& predictions,
                           const metrics::DemographicsLookup& demographics, BiasAxis axis) {
    GroupedScores grouped;
    if (axis == BiasAxis::Gender) {
        grouped.names = {"male", "female"};
        grouped.scores.resize(2);
    } else {
        grouped.names = {"g1", "g2", "g3"};
        grouped.scores.resize(3);
    }
    for (const auto& [id, score] : predictions) {
        const auto it = demographics.find(id);
        if (it == demographics.end()) throw DataError("audit: no demographics for profile id " + std::to_string(id));
        const int g = axis == BiasAxis::Gender ? static_cast<int>(it->second.gender)
                                               : static_cast<int>(it->second.ethnicity);
        grouped.scores[static_cast<size_t>(g)].push_back(score);
    }
    return grouped;
}

std::vector<uint64_t> sorted_seed_dirs(const fs::path& scenario_dir) {
    std::vector<uint64_t> seeds;
    for (const auto& entry : fs::directory_iterator(scenario_dir)) {
        if (!entry.is_directory()) continue;
        uint64_t seed = 0;
        const std::string name = entry.path().filename().string();
        const auto [ptr, ec] = std::from_chars(name.data(), name.data() + name.size(), seed);
        if (ec == std::errc{} && ptr == name.data() + name.size()) seeds.push_back(seed);
    }
    std::sort(seeds.begin(), seeds.end());
    return seeds;
}

nlohmann::ordered_json screening_json(const metrics::ScreeningReport& report) {
    nlohmann::ordered_json j;
    j["k"] = report.k;
    nlohmann::ordered_json rates;
    for (const auto& rate : report.rates) {
        rates[rate.group] = {{"count", rate.count}, {"percentage", rate.percentage}};
    }
    j["rates"] = rates;
    j["delta"] = report.delta;
    return j;
}

}  // namespace

nlohmann::ordered_json execute_audit(const AuditArgs& args, const cfg::ExperimentConfig& config) {
    config.validate();
    if (!fs::exists(args.data)) throw DataError("dataset not found: " + args.data.string());
    if (!fs::exists(args.runs)) throw DataError("runs directory not found: " + args.runs.string());

    const auto profiles = data::load_dataset(args.data);
    metrics::DemographicsLookup demographics;
    for (const auto& p : profiles) demographics[p.id] = p.demographics;

    nlohmann::ordered_json report;
    report["top_k"] = args.top_k;
    report["histogram_bins"] = config.metrics.bins;
    report["histogram_epsilon"] = config.metrics.epsilon;
    nlohmann::ordered_json axes_json;

    bool any_runs = false;
    for (const BiasAxis axis : {BiasAxis::Gender, BiasAxis::Ethnicity}) {
        const fs::path axis_dir = args.runs / to_string(axis);
        if (!fs::exists(axis_dir)) continue;

        nlohmann::ordered_json axis_json;
        nlohmann::ordered_json scenarios_json;
        nlohmann::ordered_json table_json = nlohmann::ordered_json::array();

        for (const scen::ScenarioId scenario : scen::kAllScenarios) {
            const fs::path scenario_dir = axis_dir / scen::to_string(scenario);
            if (!fs::exists(scenario_dir)) continue;
            const auto seeds = sorted_seed_dirs(scenario_dir);
            if (seeds.empty()) continue;

            nlohmann::ordered_json per_seed;
            std::vector<double> kls;
            std::vector<double> deltas;
            std::map<std::string, std::vector<double>> group_percentages;

            for (const uint64_t seed : seeds) {
                const fs::path dir = scenario_dir / std::to_string(seed);
                const auto predictions = read_predictions_csv(dir / "predictions.csv");
                if (predictions.empty()) throw DataError("audit: no predictions in " + dir.string());
                any_runs = true;

                const auto grouped = group_scores(predictions, demographics, axis);
                std::vector<metrics::ScoreHistogram> hists;
                for (const auto& scores : grouped.scores) {
                    if (scores.empty()) throw DataError("audit: a demographic group has no predictions in " + dir.string());
                    hists.push_back(
                        metrics::ScoreHistogram::from_scores(scores, config.metrics.bins, config.metrics.epsilon));
                }

                nlohmann::ordered_json seed_json;
                double kl = 0.0;
                if (axis == BiasAxis::Gender) {
                    kl = metrics::kl_divergence(hists[0], hists[1]);  // P = male, Q = female
                } else {
                    kl = metrics::pairwise_mean_kl(hists);
                    nlohmann::ordered_json matrix = nlohmann::ordered_json::array();
                    for (size_t i = 0; i < hists.size(); ++i) {
                        nlohmann::ordered_json row = nlohmann::ordered_json::array();
                        for (size_t j = 0; j < hists.size(); ++j) {
                            row.push_back(i == j ? 0.0 : metrics::kl_divergence(hists[i], hists[j]));
                        }
                        matrix.push_back(row);
                    }
                    seed_json["pairwise_kl"] = matrix;
                }
                seed_json["kl"] = kl;
                kls.push_back(kl);

                const auto screening = metrics::top_k_rates(predictions, demographics, axis, args.top_k);
                seed_json["screening"] = screening_json(screening);
                deltas.push_back(screening.delta);
                for (const auto& rate : screening.rates) group_percentages[rate.group].push_back(rate.percentage);

                per_seed[std::to_string(seed)] = seed_json;

                // Plot data mirrors the score-distribution figures; one file
                // per scenario/group from the lowest seed.
                if (seed == seeds.front()) {
                    for (size_t g = 0; g < hists.size(); ++g) {
                        const fs::path hist_dir = args.out / to_string(axis);
                        fs::create_directories(hist_dir);
                        auto out = open_out(hist_dir /
                                            ("hist_" + scen::to_string(scenario) + "_" + grouped.names[g] + ".csv"));
                        out << "bin_center,mass\n";
                        for (int b = 0; b < hists[g].bin_count; ++b) {
                            out << format_real(hists[g].bin_center(b)) << ','
                                << format_real(hists[g].probabilities[static_cast<size_t>(b)]) << '\n';
                        }
                    }
                }
            }

            nlohmann::ordered_json scenario_json;
            scenario_json["seeds"] = per_seed;
            scenario_json["median_kl"] = median(kls);
            scenario_json["median_delta"] = median(deltas);
            scenarios_json[scen::to_string(scenario)] = scenario_json;

            nlohmann::ordered_json table_row;
            table_row["scenario"] = scen::to_string(scenario);
            nlohmann::ordered_json groups;
            for (const auto& [group, percentages] : group_percentages) groups[group] = median(percentages);
            table_row["median_percentages"] = groups;
            table_row["median_delta"] = median(deltas);
            table_json.push_back(table_row);
        }

        axis_json["scenarios"] = scenarios_json;
        axis_json["screening_table"] = table_json;

        // Probe leakage audit against any agnostic transforms found.
        const fs::path agnostic_dir = axis_dir / "agnostic";
        if (fs::exists(agnostic_dir)) {
            nlohmann::ordered_json leakage_json;
            std::map<std::string, std::vector<double>> before_acc, after_acc;
            for (const uint64_t seed : sorted_seed_dirs(agnostic_dir)) {
                const fs::path transform_path = agnostic_dir / std::to_string(seed) / "transform.bin";
                if (!fs::exists(transform_path)) continue;
                sens::AgnosticTransform transform;
                transform.net = nn::load_model(transform_path);
                const auto audits = sens::audit_leakage(transform, profiles, seed);
                nlohmann::ordered_json seed_json;
                for (const auto& audit : audits) {
                    const std::string name = embed::to_string(audit.attribute);
                    seed_json[name] = {{"before", audit.before}, {"after", audit.after}};
                    before_acc[name].push_back(audit.before);
                    after_acc[name].push_back(audit.after);
                }
                leakage_json["seeds"][std::to_string(seed)] = seed_json;
            }
            if (!before_acc.empty()) {
                nlohmann::ordered_json medians;
                for (const auto& [name, values] : before_acc) {
                    medians[name] = {{"before", median(values)}, {"after", median(after_acc[name])}};
                }
                leakage_json["median"] = medians;
                axis_json["leakage"] = leakage_json;
            }
        }

        axes_json[to_string(axis)] = axis_json;
    }

    if (!any_runs) throw DataError("audit: no runs found under " + args.runs.string());
    report["axes"] = axes_json;

    fs::create_directories(args.out);
    auto out = open_out(args.out / "bias_report.json");
    out << report.dump(2) << '\n';
    return report;
}

}  // namespace faircv::exp
