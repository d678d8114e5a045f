#pragma once

#include <filesystem>
#include <vector>

#include "faircv/common.hpp"
#include "faircv/embedding.hpp"
#include "faircv/types.hpp"

namespace faircv::data {

// Linear scoring weights plus the bias-injection knobs. alpha must sum to 1
// so that noiseless unbiased scores stay in [0,1].
struct ScoringWeights {
    std::array<double, kCompetencyCount> alpha{};
    double noise_sigma = 0.02;
    double gender_penalty = 0.15;
    std::array<double, 3> ethnicity_penalty{0.0, 0.075, 0.15};  // G1 is the reference group

    static ScoringWeights defaults();
    void validate() const;
};

// One discrete distribution: levels in [0,1] with matching probabilities.
struct DiscreteDistribution {
    std::vector<double> levels;
    std::vector<double> probabilities;

    void validate(const std::string& name) const;
    double sample(Rng& rng) const;
    bool contains_level(double value) const;
};

// Per-block competency distributions. The language block uses one shared
// distribution for languages 2..8; the first language has its own (the
// default conditions it on at least basic proficiency).
struct BlockDistributions {
    DiscreteDistribution education;
    DiscreteDistribution experience;
    DiscreteDistribution availability;
    DiscreteDistribution recommendation;
    DiscreteDistribution first_language;
    DiscreteDistribution language;

    static BlockDistributions defaults();
    void validate() const;
};

struct Profile {
    int64_t id = 0;
    DemographicAttributes demographics;
    CompetencyVector competencies;
    FaceEmbedding embedding;
    double score_unbiased = 0.0;
    double score_gender_biased = 0.0;
    double score_ethnicity_biased = 0.0;

    bool operator==(const Profile&) const = default;
};

struct DatasetSplit {
    std::vector<Profile> train;
    std::vector<Profile> validation;
};

// One draw per feature, independent, deterministic given the rng state.
CompetencyVector sample_competencies(Rng& rng, const BlockDistributions& dists);

// clamp(noise + sum_i alpha_i * c_i, 0, 1). Noise is passed explicitly so the
// scoring rule stays a total deterministic function.
double compute_unbiased_score(const CompetencyVector& c, const ScoringWeights& w, double noise);

// Gender axis: Female loses gender_penalty, Male unchanged. Ethnicity axis:
// subtract the group's penalty. Results clamp at 0.
double apply_bias_penalty(double score, const DemographicAttributes& d, const ScoringWeights& w, BiasAxis axis);

// n profiles, exactly n/6 per demographic group, fully reproducible from the
// seed. Throws DataError when n is not divisible by 6.
std::vector<Profile> generate_dataset(int n, const ScoringWeights& weights, const BlockDistributions& dists,
                                      const embed::EmbeddingGenConfig& embed_cfg, uint64_t seed);

// Stratified split preserving exact group balance in both partitions.
DatasetSplit split_dataset(const std::vector<Profile>& profiles, double ratio, uint64_t seed);

// CSV with header id,gender,ethnicity,c01..c12,e01..e20,t_u,t_g,t_e.
// Reals are written with 9 significant digits.
void save_dataset(const std::vector<Profile>& profiles, const std::filesystem::path& path);
std::vector<Profile> load_dataset(const std::filesystem::path& path);

}  // namespace faircv::data
