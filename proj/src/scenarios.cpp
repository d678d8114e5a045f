#include "faircv/scenarios.hpp"

#include <algorithm>
#include <atomic>
#include <thread>

namespace faircv::scen {

std::string to_string(ScenarioId id) {
    switch (id) {
        case ScenarioId::S1: return "s1";
        case ScenarioId::S2: return "s2";
        case ScenarioId::S3: return "s3";
        case ScenarioId::S4: return "s4";
        case ScenarioId::Agnostic: return "agnostic";
    }
    return "?";
}

ScenarioId scenario_from_string(const std::string& name) {
    std::string lower = name;
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    if (lower == "1" || lower == "s1") return ScenarioId::S1;
    if (lower == "2" || lower == "s2") return ScenarioId::S2;
    if (lower == "3" || lower == "s3") return ScenarioId::S3;
    if (lower == "4" || lower == "s4") return ScenarioId::S4;
    if (lower == "agnostic") return ScenarioId::Agnostic;
    throw ConfigError("unknown scenario '" + name + "' (expected 1|2|3|4|agnostic)");
}

std::vector<double> assemble_input(const data::Profile& profile, const ScenarioConfig& cfg,
                                   const sens::AgnosticTransform* transform) {
    std::vector<double> input;
    input.reserve(static_cast<size_t>(cfg.input_dim()));
    input.insert(input.end(), profile.competencies.values.begin(), profile.competencies.values.end());
    if (cfg.includes_demographics()) {
        input.push_back(profile.demographics.gender == Gender::Male ? 1.0 : 0.0);
        for (int g = 0; g < 3; ++g) {
            input.push_back(static_cast<int>(profile.demographics.ethnicity) == g ? 1.0 : 0.0);
        }
    }
    switch (cfg.embedding_use()) {
        case EmbeddingUse::None:
            break;
        case EmbeddingUse::Raw:
            input.insert(input.end(), profile.embedding.values.begin(), profile.embedding.values.end());
            break;
        case EmbeddingUse::Agnostic: {
            if (transform == nullptr) {
                throw DataError("assemble_input: Agnostic scenario requested without a fitted transform");
            }
            const FaceEmbedding t = transform->apply(profile.embedding);
            input.insert(input.end(), t.values.begin(), t.values.end());
            break;
        }
    }
    return input;
}

double target_score(const data::Profile& profile, const ScenarioConfig& cfg) {
    if (!cfg.target_biased()) return profile.score_unbiased;
    return cfg.bias_axis == BiasAxis::Gender ? profile.score_gender_biased : profile.score_ethnicity_biased;
}

namespace {

void fill_design(const std::vector<data::Profile>& profiles, const ScenarioConfig& cfg,
                 const sens::AgnosticTransform* transform, nn::Matrix& x, nn::Matrix& y) {
    x = nn::Matrix(static_cast<int>(profiles.size()), cfg.input_dim());
    y = nn::Matrix(static_cast<int>(profiles.size()), 1);
    for (size_t i = 0; i < profiles.size(); ++i) {
        const auto input = assemble_input(profiles[i], cfg, transform);
        std::copy(input.begin(), input.end(), x.row(static_cast<int>(i)).begin());
        y.at(static_cast<int>(i), 0) = target_score(profiles[i], cfg);
    }
}

}  // namespace

RunResult run_scenario(const data::DatasetSplit& split, const ScenarioConfig& cfg, uint64_t seed,
                       const sens::AgnosticTransform* transform, const nn::TrainOptions& training) {
    if (split.train.empty() || split.validation.empty()) throw DataError("run_scenario: empty split");
    if (cfg.embedding_use() == EmbeddingUse::Agnostic && transform == nullptr) {
        throw DataError("run_scenario: Agnostic scenario requested without a fitted transform");
    }

    nn::Matrix x_train, y_train, x_val, y_val;
    fill_design(split.train, cfg, transform, x_train, y_train);
    fill_design(split.validation, cfg, transform, x_val, y_val);

    RunResult result;
    result.scenario = cfg;
    result.seed = seed;

    Rng rng(seed);
    result.model = nn::make_mlp(cfg.input_dim(), {10, 10, 1},
                                {nn::Activation::ReLU, nn::Activation::ReLU, nn::Activation::Sigmoid}, rng);
    nn::TrainOptions options = training;
    options.seed = rng.next_u64();
    result.history = nn::train_regression(result.model, x_train, y_train, x_val, y_val, options);

    const nn::Matrix predictions = nn::predict(result.model, x_val);
    result.val_predictions.reserve(split.validation.size());
    for (size_t i = 0; i < split.validation.size(); ++i) {
        result.val_predictions.emplace_back(split.validation[i].id, predictions.at(static_cast<int>(i), 0));
    }
    return result;
}

std::vector<RunOutcome> run_all(const data::DatasetSplit& split, BiasAxis bias_axis,
                                const std::vector<uint64_t>& seeds, const RunAllOptions& options) {
    if (seeds.empty()) throw DataError("run_all: at least one seed required");

    std::vector<RunOutcome> outcomes(seeds.size() * options.scenarios.size());
    size_t index = 0;
    for (const uint64_t seed : seeds) {
        for (const ScenarioId id : options.scenarios) {
            outcomes[index].scenario = {id, bias_axis};
            outcomes[index].seed = seed;
            ++index;
        }
    }

    auto execute = [&](RunOutcome& outcome) {
        try {
            const sens::AgnosticTransform* transform = nullptr;
            if (outcome.scenario.embedding_use() == EmbeddingUse::Agnostic) {
                sens::AgnosticTrainConfig agnostic_cfg = options.agnostic;
                agnostic_cfg.target_axis = bias_axis;
                outcome.agnostic = sens::train_agnostic(split.train, agnostic_cfg, outcome.seed);
                transform = &outcome.agnostic->transform;
            }
            outcome.result = run_scenario(split, outcome.scenario, outcome.seed, transform, options.training);
        } catch (const std::exception& e) {
            outcome.result.reset();
            outcome.error = e.what();
        }
    };

    const int jobs = std::max(1, options.jobs);
    if (jobs == 1) {
        for (auto& outcome : outcomes) execute(outcome);
    } else {
        std::atomic<size_t> next{0};
        auto worker = [&] {
            for (size_t i = next.fetch_add(1); i < outcomes.size(); i = next.fetch_add(1)) execute(outcomes[i]);
        };
        std::vector<std::thread> pool;
        const int n_threads = std::min<int>(jobs, static_cast<int>(outcomes.size()));
        pool.reserve(static_cast<size_t>(n_threads));
        for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    return outcomes;
}

}  // namespace faircv::scen
