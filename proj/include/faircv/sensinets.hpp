#pragma once

#include <vector>

#include "faircv/dataset.hpp"
#include "faircv/embedding.hpp"
#include "faircv/nn.hpp"

namespace faircv::sens {

// Learned linear projection (20 -> 20 with bias) that strips demographic
// signal from embeddings. Drop-in replacement for raw embeddings.
struct AgnosticTransform {
    nn::MLP net;

    nn::Matrix apply(const nn::Matrix& embeddings) const;
    FaceEmbedding apply(const FaceEmbedding& embedding) const;
};

AgnosticTransform identity_transform();

struct AgnosticTrainConfig {
    double lambda = 1.0;
    int outer_epochs = 10;
    int probe_inner_epochs = 3;
    bool probe_gender = true;
    bool probe_ethnicity = true;
    BiasAxis target_axis = BiasAxis::Gender;  // which biased target the scorer learns
    int batch_size = 128;
    double lr = 0.001;            // scorer
    double transform_lr = 0.001;  // transform (the adversarial battleground)
    double probe_lr = 0.001;      // adversarial probes
    double transform_init_scale = 1.0;  // initial weight scale relative to Xavier
    // Per-step multiplicative weight decay on the transform, scaled by
    // lambda. Adversarial pressure alone bottoms out at the optimizer's
    // step-size noise, and a linear map with random residual entries still
    // transmits the planted signal; the decay drives suppressed directions
    // all the way to an uninformative map. Off whenever lambda is 0.
    double transform_decay = 0.02;

    void validate() const;
};

// Adversarial detector for one protected attribute: a small MLP
// (20 -> 10 ReLU -> K softmax) whose parameters update only during probe
// phases.
struct SensitiveProbe {
    embed::Attribute attribute = embed::Attribute::Gender;
    nn::MLP net;
};

// Sensitiveness of one transformed embedding: sum over probes of
// log K - H(probe(e)). Zero iff every probe outputs uniform.
double sensitiveness(const std::vector<SensitiveProbe>& probes, const FaceEmbedding& transformed);

struct LeakagePoint {
    int epoch = 0;
    embed::Attribute attribute = embed::Attribute::Gender;
    double probe_accuracy = 0.0;
};

struct AgnosticResult {
    AgnosticTransform transform;
    nn::MLP scorer;  // merits + transformed embedding -> score, Scenario-4 shape
    std::vector<SensitiveProbe> probes;  // final adversaries
    std::vector<LeakagePoint> trace;
};

// Alternating adversarial optimization: per outer epoch, (a) the sensitive
// probes train on current transform outputs with the transform frozen, then
// (b) the scorer trains one epoch on task MAE while the transform descends
// lambda times the uniformity pressure, differentiating through the frozen
// probes. At lambda 0 the regularizer disables entirely and the pipeline is
// a Scenario-4 run with an extra (untrained) linear layer.
AgnosticResult train_agnostic(const std::vector<data::Profile>& train_profiles, const AgnosticTrainConfig& cfg,
                              uint64_t seed);

struct AttributeLeakage {
    embed::Attribute attribute = embed::Attribute::Gender;
    double before = 0.0;  // fresh-probe held-out accuracy on raw embeddings
    double after = 0.0;   // same on transformed embeddings
};

// Fits fresh linear probes (embed::fit_probe) on raw and transformed
// embeddings of the given profiles; reports held-out accuracies.
std::vector<AttributeLeakage> audit_leakage(const AgnosticTransform& transform,
                                            const std::vector<data::Profile>& profiles, uint64_t seed);

}  // namespace faircv::sens
