#include <cmath>
#include <numeric>

#include "doctest.h"
#include "faircv/dataset.hpp"
#include "faircv/embedding.hpp"

using namespace faircv;
using embed::Attribute;
using embed::DemographicDirections;
using embed::EmbeddingGenConfig;

namespace {

double dot20(const std::array<double, kEmbeddingDim>& a, const std::array<double, kEmbeddingDim>& b) {
    return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

struct LabeledEmbeddings {
    std::vector<FaceEmbedding> embeddings;
    std::vector<int> gender_labels;
    std::vector<int> ethnicity_labels;
};

LabeledEmbeddings sample_population(int n, const EmbeddingGenConfig& cfg, uint64_t seed) {
    const auto dirs = DemographicDirections::derive(cfg.direction_seed);
    Rng rng(seed);
    LabeledEmbeddings pop;
    for (int i = 0; i < n; ++i) {
        const DemographicAttributes d = group_attributes(i % kGroupCount);
        pop.embeddings.push_back(embed::generate_embedding(rng, d, cfg, dirs));
        pop.gender_labels.push_back(static_cast<int>(d.gender));
        pop.ethnicity_labels.push_back(static_cast<int>(d.ethnicity));
    }
    return pop;
}

}  // namespace

TEST_CASE("directions: orthonormal and deterministic") {
    const auto dirs = DemographicDirections::derive(977);
    CHECK(std::abs(dot20(dirs.gender_axis, dirs.gender_axis) - 1.0) < 1e-12);
    for (const auto& m : dirs.ethnicity_axes) {
        CHECK(std::abs(dot20(m, m) - 1.0) < 1e-12);
        CHECK(std::abs(dot20(dirs.gender_axis, m)) < 1e-9);
    }
    CHECK(std::abs(dot20(dirs.ethnicity_axes[0], dirs.ethnicity_axes[1])) < 1e-9);
    CHECK(std::abs(dot20(dirs.ethnicity_axes[0], dirs.ethnicity_axes[2])) < 1e-9);
    CHECK(std::abs(dot20(dirs.ethnicity_axes[1], dirs.ethnicity_axes[2])) < 1e-9);

    const auto again = DemographicDirections::derive(977);
    CHECK(again.gender_axis == dirs.gender_axis);
    const auto other = DemographicDirections::derive(978);
    CHECK(other.gender_axis != dirs.gender_axis);
}

TEST_CASE("generate_embedding: noiseless limit is the pure planted signal") {
    EmbeddingGenConfig cfg;
    cfg.noise_sigma = 1e-300;  // config requires sigma > 0; this is the noiseless limit
    const auto dirs = DemographicDirections::derive(cfg.direction_seed);
    Rng rng(4);
    const auto e = embed::generate_embedding(rng, {Gender::Male, Ethnicity::G1}, cfg, dirs);
    for (int i = 0; i < kEmbeddingDim; ++i) {
        const double expected = cfg.gender_strength * dirs.gender_axis[static_cast<size_t>(i)] +
                                cfg.ethnicity_strength * dirs.ethnicity_axes[0][static_cast<size_t>(i)];
        CHECK(e[i] == doctest::Approx(expected).epsilon(1e-9));
    }
}

TEST_CASE("generate_embedding: male projection onto the gender axis has mean +2") {
    const EmbeddingGenConfig cfg;
    const auto dirs = DemographicDirections::derive(cfg.direction_seed);
    Rng rng(12);
    double mean = 0.0;
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
        const auto e = embed::generate_embedding(rng, {Gender::Male, group_attributes(i % kGroupCount).ethnicity}, cfg, dirs);
        mean += dot20(e.values, dirs.gender_axis);
    }
    mean /= n;
    CHECK(std::abs(mean - cfg.gender_strength) < 0.05);
}

TEST_CASE("fit_probe: strong gender and ethnicity leakage on raw embeddings") {
    const auto pop = sample_population(12000, {}, 31);
    const auto gender = embed::fit_probe(pop.embeddings, pop.gender_labels, Attribute::Gender, 7);
    CHECK(gender.heldout_accuracy >= 0.95);
    const auto ethnicity = embed::fit_probe(pop.embeddings, pop.ethnicity_labels, Attribute::Ethnicity, 7);
    CHECK(ethnicity.heldout_accuracy >= 0.85);
}

TEST_CASE("fit_probe: no signal means chance-level accuracy") {
    EmbeddingGenConfig cfg;
    cfg.gender_strength = 0.0;
    const auto pop = sample_population(6000, cfg, 32);
    const auto fit = embed::fit_probe(pop.embeddings, pop.gender_labels, Attribute::Gender, 8);
    CHECK(fit.heldout_accuracy <= 0.55);
}

TEST_CASE("fit_probe: single-class input rejected") {
    const auto pop = sample_population(600, {}, 33);
    std::vector<int> constant(pop.embeddings.size(), 0);
    CHECK_THROWS_AS((void)embed::fit_probe(pop.embeddings, constant, Attribute::Gender, 1), DataError);
}

TEST_CASE("probe_accuracy: uniform probe resolves ties to class 0") {
    embed::LinearProbe probe;
    Rng rng(5);
    probe.net = nn::make_mlp(kEmbeddingDim, {2}, {nn::Activation::Softmax}, rng);
    for (auto& layer : probe.net.layers) {
        std::fill(layer.weights.data.begin(), layer.weights.data.end(), 0.0);
        std::fill(layer.bias.data.begin(), layer.bias.data.end(), 0.0);
    }
    const auto pop = sample_population(600, {}, 34);
    // balanced labels -> accuracy is exactly the class-0 share
    CHECK(embed::probe_accuracy(probe, pop.embeddings, pop.gender_labels) == doctest::Approx(0.5));
    CHECK_THROWS_AS((void)embed::probe_accuracy(probe, {}, {}), DataError);
}

TEST_CASE("probe_accuracy: perfectly separable toy set") {
    const auto dirs = DemographicDirections::derive(977);
    std::vector<FaceEmbedding> embeddings(4);
    std::vector<int> labels = {0, 0, 1, 1};
    for (int i = 0; i < 4; ++i) {
        const double sign = labels[static_cast<size_t>(i)] == 0 ? 1.0 : -1.0;
        for (int j = 0; j < kEmbeddingDim; ++j) {
            embeddings[static_cast<size_t>(i)][j] = sign * (1.0 + 0.1 * i) * dirs.gender_axis[static_cast<size_t>(j)];
        }
    }
    embed::LinearProbe probe;
    probe.net.input_dim = kEmbeddingDim;
    nn::Layer layer;
    layer.activation = nn::Activation::Softmax;
    layer.weights = nn::Matrix(kEmbeddingDim, 2);
    layer.bias = nn::Matrix(1, 2);
    for (int j = 0; j < kEmbeddingDim; ++j) {
        layer.weights.at(j, 0) = dirs.gender_axis[static_cast<size_t>(j)];
        layer.weights.at(j, 1) = -dirs.gender_axis[static_cast<size_t>(j)];
    }
    probe.net.layers.push_back(std::move(layer));
    CHECK(embed::probe_accuracy(probe, embeddings, labels) == doctest::Approx(1.0));
}

TEST_CASE("leakage is monotone in gender signal strength") {
    double previous = -1.0;
    for (const double strength : {0.0, 0.5, 1.0, 2.0, 4.0}) {
        EmbeddingGenConfig cfg;
        cfg.gender_strength = strength;
        const auto pop = sample_population(10000, cfg, 55);
        const auto fit = embed::fit_probe(pop.embeddings, pop.gender_labels, Attribute::Gender, 56);
        CHECK(fit.heldout_accuracy >= previous);
        previous = fit.heldout_accuracy;
    }
}

TEST_CASE("embeddings carry no competency information") {
    const auto profiles = data::generate_dataset(24000, data::ScoringWeights::defaults(),
                                                 data::BlockDistributions::defaults(), {}, 77);
    const int n = static_cast<int>(profiles.size());
    for (int e = 0; e < kEmbeddingDim; ++e) {
        for (int c = 0; c < kCompetencyCount; ++c) {
            double sx = 0.0, sy = 0.0, sxx = 0.0, syy = 0.0, sxy = 0.0;
            for (const auto& p : profiles) {
                const double x = p.embedding[e];
                const double y = p.competencies[c];
                sx += x;
                sy += y;
                sxx += x * x;
                syy += y * y;
                sxy += x * y;
            }
            const double cov = sxy / n - (sx / n) * (sy / n);
            const double vx = sxx / n - (sx / n) * (sx / n);
            const double vy = syy / n - (sy / n) * (sy / n);
            const double r = cov / std::sqrt(vx * vy);
            CHECK(std::abs(r) < 0.03);
        }
    }
}
