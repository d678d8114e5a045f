#include "faircv/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace faircv::embed {

void EmbeddingGenConfig::validate() const {
    if (gender_strength < 0.0 || ethnicity_strength < 0.0) {
        throw ConfigError("embedding: signal strengths must be nonnegative");
    }
    if (noise_sigma <= 0.0) throw ConfigError("embedding: noise_sigma must be positive");
}

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
    return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

void normalize(std::array<double, kEmbeddingDim>& v) {
    const double norm = std::sqrt(dot(v, v));
    for (double& x : v) x /= norm;
}

}  // namespace

DemographicDirections DemographicDirections::derive(uint64_t direction_seed) {
    Rng rng(direction_seed);
    std::array<std::array<double, kEmbeddingDim>, 4> basis;
    for (auto& v : basis)
        for (double& x : v) x = rng.gaussian();

    // Modified Gram-Schmidt, run twice for orthogonality well below 1e-9.
    for (int pass = 0; pass < 2; ++pass) {
        for (size_t i = 0; i < basis.size(); ++i) {
            for (size_t j = 0; j < i; ++j) {
                const double proj = dot(basis[i], basis[j]);
                for (int k = 0; k < kEmbeddingDim; ++k) basis[i][static_cast<size_t>(k)] -= proj * basis[j][static_cast<size_t>(k)];
            }
            normalize(basis[i]);
        }
    }

    DemographicDirections dirs;
    dirs.gender_axis = basis[0];
    dirs.ethnicity_axes = {basis[1], basis[2], basis[3]};
    return dirs;
}

FaceEmbedding generate_embedding(Rng& rng, const DemographicAttributes& d, const EmbeddingGenConfig& cfg,
                                 const DemographicDirections& dirs) {
    const double gender_sign = d.gender == Gender::Male ? 1.0 : -1.0;
    const auto& eth_axis = dirs.ethnicity_axes[static_cast<size_t>(d.ethnicity)];
    FaceEmbedding e;
    for (int i = 0; i < kEmbeddingDim; ++i) {
        e[i] = rng.gaussian(0.0, cfg.noise_sigma) + cfg.gender_strength * gender_sign * dirs.gender_axis[static_cast<size_t>(i)] +
               cfg.ethnicity_strength * eth_axis[static_cast<size_t>(i)];
    }
    return e;
}

nn::Matrix embeddings_to_matrix(const std::vector<FaceEmbedding>& embeddings) {
    nn::Matrix m(static_cast<int>(embeddings.size()), kEmbeddingDim);
    for (size_t r = 0; r < embeddings.size(); ++r) {
        std::copy(embeddings[r].values.begin(), embeddings[r].values.end(), m.row(static_cast<int>(r)).begin());
    }
    return m;
}

ProbeFit fit_probe(const std::vector<FaceEmbedding>& embeddings, const std::vector<int>& labels, Attribute attr,
                   uint64_t seed, const ProbeFitOptions& options) {
    if (embeddings.size() != labels.size()) throw DataError("fit_probe: one label per embedding required");
    const int k = class_count(attr);
    std::vector<int> counts(static_cast<size_t>(k), 0);
    for (int label : labels) {
        if (label < 0 || label >= k) throw DataError("fit_probe: label out of range for attribute");
        counts[static_cast<size_t>(label)]++;
    }
    for (int c = 0; c < k; ++c) {
        if (counts[static_cast<size_t>(c)] < 2) {
            throw DataError("fit_probe: class " + std::to_string(c) + " has fewer than 2 examples");
        }
    }

    Rng rng(seed);
    std::vector<size_t> order(embeddings.size());
    std::iota(order.begin(), order.end(), size_t{0});
    rng.shuffle(order);
    const size_t n_train = (embeddings.size() * 4) / 5;

    nn::Matrix x_train(static_cast<int>(n_train), kEmbeddingDim);
    nn::Matrix x_val(static_cast<int>(embeddings.size() - n_train), kEmbeddingDim);
    std::vector<int> y_train, y_val;
    for (size_t i = 0; i < order.size(); ++i) {
        const auto& e = embeddings[order[i]];
        if (i < n_train) {
            std::copy(e.values.begin(), e.values.end(), x_train.row(static_cast<int>(i)).begin());
            y_train.push_back(labels[order[i]]);
        } else {
            std::copy(e.values.begin(), e.values.end(), x_val.row(static_cast<int>(i - n_train)).begin());
            y_val.push_back(labels[order[i]]);
        }
    }
    if (y_val.empty()) throw DataError("fit_probe: too few examples for an internal 80/20 split");

    ProbeFit fit;
    fit.probe.net = nn::make_mlp(kEmbeddingDim, {k}, {nn::Activation::Softmax}, rng);
    fit.history = nn::train_classifier(fit.probe.net, x_train, y_train, x_val, y_val,
                                       {.epochs = options.epochs, .batch_size = options.batch_size, .lr = options.lr,
                                        .seed = rng.next_u64()});
    fit.heldout_accuracy = nn::accuracy(nn::predict(fit.probe.net, x_val), y_val);
    return fit;
}

double probe_accuracy(const LinearProbe& probe, const std::vector<FaceEmbedding>& embeddings,
                      const std::vector<int>& labels) {
    if (embeddings.empty()) throw DataError("probe_accuracy: empty input");
    if (embeddings.size() != labels.size()) throw DataError("probe_accuracy: one label per embedding required");
    return nn::accuracy(nn::predict(probe.net, embeddings_to_matrix(embeddings)), labels);
}

}  // namespace faircv::embed
