#pragma once

#include <vector>

#include "faircv/common.hpp"
#include "faircv/nn.hpp"
#include "faircv/types.hpp"

namespace faircv::embed {

// Synthetic stand-in for face-recognition bottleneck features: isotropic
// Gaussian noise plus linear demographic signal along fixed orthonormal
// directions. Keeps leakage analyzable and removable.
struct EmbeddingGenConfig {
    double gender_strength = 2.0;
    double ethnicity_strength = 2.5;
    double noise_sigma = 1.0;
    uint64_t direction_seed = 977;

    void validate() const;
};

// Gender axis u_g and per-ethnicity means m1..m3, mutually orthonormal,
// derived deterministically from the direction seed (Gram-Schmidt on seeded
// Gaussian draws).
struct DemographicDirections {
    std::array<double, kEmbeddingDim> gender_axis{};
    std::array<std::array<double, kEmbeddingDim>, 3> ethnicity_axes{};

    static DemographicDirections derive(uint64_t direction_seed);
};

// e = z + s_g * sigma(gender) * u_g + s_e * m_ethnicity, z ~ N(0, sigma^2 I).
// sigma(Male) = +1, sigma(Female) = -1.
FaceEmbedding generate_embedding(Rng& rng, const DemographicAttributes& d, const EmbeddingGenConfig& cfg,
                                 const DemographicDirections& dirs);

enum class Attribute : uint8_t { Gender = 0, Ethnicity = 1 };

inline int class_count(Attribute attr) { return attr == Attribute::Gender ? 2 : 3; }
inline std::string to_string(Attribute attr) { return attr == Attribute::Gender ? "gender" : "ethnicity"; }

inline int attribute_label(const DemographicAttributes& d, Attribute attr) {
    return attr == Attribute::Gender ? static_cast<int>(d.gender) : static_cast<int>(d.ethnicity);
}

// Softmax linear classifier used as the leakage audit instrument.
struct LinearProbe {
    nn::MLP net;  // single softmax layer, kEmbeddingDim -> K

    int classes() const { return net.output_dim(); }
};

struct ProbeFitOptions {
    int epochs = 20;
    int batch_size = 128;
    double lr = 0.01;
};

struct ProbeFit {
    LinearProbe probe;
    double heldout_accuracy = 0.0;  // on the internal 20% split
    nn::TrainHistory history;
};

// Trains a probe by cross-entropy gradient descent on an internal 80/20
// split. Labels are class indices for the chosen attribute. Throws DataError
// when any class has fewer than 2 examples.
ProbeFit fit_probe(const std::vector<FaceEmbedding>& embeddings, const std::vector<int>& labels, Attribute attr,
                   uint64_t seed, const ProbeFitOptions& options = {});

// Fraction of argmax-correct predictions; ties break toward class 0.
double probe_accuracy(const LinearProbe& probe, const std::vector<FaceEmbedding>& embeddings,
                      const std::vector<int>& labels);

nn::Matrix embeddings_to_matrix(const std::vector<FaceEmbedding>& embeddings);

}  // namespace faircv::embed
