#pragma once

#include <filesystem>
#include <string>

#include "faircv/dataset.hpp"
#include "faircv/embedding.hpp"
#include "faircv/nn.hpp"
#include "faircv/sensinets.hpp"

namespace faircv::cfg {

struct MetricsConfig {
    int bins = 50;
    double epsilon = 1e-6;
    int top_k = 100;

    void validate() const;
};

struct SplitConfig {
    double ratio = 0.8;
    uint64_t seed = 1;
};

// Resolved configuration for a whole experiment. Serializable to a sectioned
// text file; a run's resolved config is archived alongside its outputs.
struct ExperimentConfig {
    data::ScoringWeights weights = data::ScoringWeights::defaults();
    data::BlockDistributions distributions = data::BlockDistributions::defaults();
    embed::EmbeddingGenConfig embedding;
    sens::AgnosticTrainConfig agnostic;
    nn::TrainOptions training;  // seed field unused here; set per run
    MetricsConfig metrics;
    SplitConfig split;

    void validate() const;
};

// Parses the sectioned key = value format. Unknown sections or keys are
// rejected; missing entries keep their defaults.
ExperimentConfig parse_config(const std::string& text, const std::string& origin);
ExperimentConfig load_config(const std::filesystem::path& path);

std::string serialize_config(const ExperimentConfig& config);
void save_config(const ExperimentConfig& config, const std::filesystem::path& path);

}  // namespace faircv::cfg
