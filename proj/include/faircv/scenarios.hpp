#pragma once

#include <optional>
#include <string>
#include <vector>

#include "faircv/dataset.hpp"
#include "faircv/metrics.hpp"
#include "faircv/nn.hpp"
#include "faircv/sensinets.hpp"

namespace faircv::scen {

enum class ScenarioId : uint8_t { S1 = 0, S2 = 1, S3 = 2, S4 = 3, Agnostic = 4 };

inline constexpr std::array<ScenarioId, 5> kAllScenarios = {ScenarioId::S1, ScenarioId::S2, ScenarioId::S3,
                                                            ScenarioId::S4, ScenarioId::Agnostic};

std::string to_string(ScenarioId id);
ScenarioId scenario_from_string(const std::string& name);

enum class EmbeddingUse : uint8_t { None, Raw, Agnostic };

// Which inputs the scorer sees and which target it learns:
//   S1: unbiased target, merits + demographics
//   S2: biased target,  merits + demographics
//   S3: biased target,  merits only
//   S4: biased target,  merits + raw embedding
//   Agnostic: biased target, merits + agnostic-transformed embedding
struct ScenarioConfig {
    ScenarioId id = ScenarioId::S1;
    BiasAxis bias_axis = BiasAxis::Gender;

    bool target_biased() const { return id != ScenarioId::S1; }
    bool includes_demographics() const { return id == ScenarioId::S1 || id == ScenarioId::S2; }
    EmbeddingUse embedding_use() const {
        if (id == ScenarioId::S4) return EmbeddingUse::Raw;
        if (id == ScenarioId::Agnostic) return EmbeddingUse::Agnostic;
        return EmbeddingUse::None;
    }
    int input_dim() const {
        return kCompetencyCount + (includes_demographics() ? 4 : 0) +
               (embedding_use() == EmbeddingUse::None ? 0 : kEmbeddingDim);
    }
};

// Concatenates: 12 merits; if demographics, gender (Male=1) plus ethnicity
// one-hot; if embedding, 20 raw or transformed values. Throws DataError when
// the Agnostic scenario is requested without a fitted transform.
std::vector<double> assemble_input(const data::Profile& profile, const ScenarioConfig& cfg,
                                   const sens::AgnosticTransform* transform = nullptr);

double target_score(const data::Profile& profile, const ScenarioConfig& cfg);

struct RunResult {
    ScenarioConfig scenario;
    uint64_t seed = 0;
    nn::TrainHistory history;
    std::vector<metrics::Prediction> val_predictions;  // one per validation profile, in id order
    nn::MLP model;
};

// Trains a fresh input_dim -> 10 -> 10 -> 1 (ReLU, ReLU, sigmoid) scorer on
// the configured target with the standard protocol, then predicts the
// validation set.
RunResult run_scenario(const data::DatasetSplit& split, const ScenarioConfig& cfg, uint64_t seed,
                       const sens::AgnosticTransform* transform = nullptr,
                       const nn::TrainOptions& training = {});

struct RunOutcome {
    ScenarioConfig scenario;
    uint64_t seed = 0;
    std::optional<RunResult> result;                // empty when the run failed
    std::optional<sens::AgnosticResult> agnostic;   // transform artifacts for Agnostic runs
    std::string error;                              // failure description when result is empty
};

struct RunAllOptions {
    std::vector<ScenarioId> scenarios{kAllScenarios.begin(), kAllScenarios.end()};
    sens::AgnosticTrainConfig agnostic;  // target_axis follows the run's bias axis
    nn::TrainOptions training;           // seed is overridden per run
    int jobs = 1;
};

// Runs every (scenario, seed) pair over the shared immutable split. Failed
// runs are reported in their outcome without aborting the rest. Results are
// deterministic and independent of the job count.
std::vector<RunOutcome> run_all(const data::DatasetSplit& split, BiasAxis bias_axis,
                                const std::vector<uint64_t>& seeds, const RunAllOptions& options = {});

}  // namespace faircv::scen
