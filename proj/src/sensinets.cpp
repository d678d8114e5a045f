#include "faircv/sensinets.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace faircv::sens {

nn::Matrix AgnosticTransform::apply(const nn::Matrix& embeddings) const { return nn::predict(net, embeddings); }

FaceEmbedding AgnosticTransform::apply(const FaceEmbedding& embedding) const {
    nn::Matrix in(1, kEmbeddingDim);
    std::copy(embedding.values.begin(), embedding.values.end(), in.row(0).begin());
    const nn::Matrix out = nn::predict(net, in);
    FaceEmbedding result;
    std::copy(out.row(0).begin(), out.row(0).end(), result.values.begin());
    return result;
}

AgnosticTransform identity_transform() {
    AgnosticTransform t;
    t.net.input_dim = kEmbeddingDim;
    nn::Layer layer;
    layer.activation = nn::Activation::Identity;
    layer.weights = nn::Matrix(kEmbeddingDim, kEmbeddingDim);
    layer.bias = nn::Matrix(1, kEmbeddingDim);
    for (int i = 0; i < kEmbeddingDim; ++i) layer.weights.at(i, i) = 1.0;
    t.net.layers.push_back(std::move(layer));
    return t;
}

void AgnosticTrainConfig::validate() const {
    if (lambda < 0.0 || !std::isfinite(lambda)) throw ConfigError("agnostic: lambda must be finite and nonnegative");
    if (outer_epochs < 1) throw ConfigError("agnostic: outer_epochs must be >= 1");
    if (probe_inner_epochs < 1) throw ConfigError("agnostic: probe_inner_epochs must be >= 1");
    if (!probe_gender && !probe_ethnicity) throw ConfigError("agnostic: at least one protected attribute required");
    if (batch_size < 1) throw ConfigError("agnostic: batch size must be >= 1");
    if (lr <= 0.0 || transform_lr <= 0.0 || probe_lr <= 0.0) {
        throw ConfigError("agnostic: learning rates must be positive");
    }
    if (transform_init_scale <= 0.0) throw ConfigError("agnostic: transform_init_scale must be positive");
    if (transform_decay < 0.0 || transform_decay >= 1.0) {
        throw ConfigError("agnostic: transform_decay must lie in [0,1)");
    }
}

double sensitiveness(const std::vector<SensitiveProbe>& probes, const FaceEmbedding& transformed) {
    nn::Matrix in(1, kEmbeddingDim);
    std::copy(transformed.values.begin(), transformed.values.end(), in.row(0).begin());
    double delta = 0.0;
    for (const auto& probe : probes) {
        const nn::Matrix out = nn::predict(probe.net, in);
        delta += nn::confusion_term(out.row(0));
    }
    return delta;
}

namespace {

struct Adversary {
    embed::Attribute attribute;
    nn::MLP probe;
    nn::AdamState adam;
    std::vector<int> labels;
};

nn::Matrix take_rows(const nn::Matrix& m, const std::vector<size_t>& order, size_t begin, size_t end) {
    nn::Matrix out(static_cast<int>(end - begin), m.cols);
    for (size_t i = begin; i < end; ++i) {
        const auto src = m.row(static_cast<int>(order[i]));
        std::copy(src.begin(), src.end(), out.row(static_cast<int>(i - begin)).begin());
    }
    return out;
}

}  // namespace

AgnosticResult train_agnostic(const std::vector<data::Profile>& train_profiles, const AgnosticTrainConfig& cfg,
                              uint64_t seed) {
    cfg.validate();
    if (train_profiles.empty()) throw DataError("train_agnostic: empty training set");

    const int n = static_cast<int>(train_profiles.size());
    nn::Matrix embeddings(n, kEmbeddingDim);
    nn::Matrix merits(n, kCompetencyCount);
    nn::Matrix targets(n, 1);
    for (int i = 0; i < n; ++i) {
        const auto& p = train_profiles[static_cast<size_t>(i)];
        std::copy(p.embedding.values.begin(), p.embedding.values.end(), embeddings.row(i).begin());
        std::copy(p.competencies.values.begin(), p.competencies.values.end(), merits.row(i).begin());
        targets.at(i, 0) = cfg.target_axis == BiasAxis::Gender ? p.score_gender_biased : p.score_ethnicity_biased;
    }

    Rng rng(seed);
    AgnosticResult result;
    result.transform.net = nn::make_mlp(kEmbeddingDim, {kEmbeddingDim}, {nn::Activation::Identity}, rng);
    for (auto& w : result.transform.net.layers[0].weights.data) w *= cfg.transform_init_scale;
    result.scorer = nn::make_mlp(kCompetencyCount + kEmbeddingDim, {10, 10, 1},
                                 {nn::Activation::ReLU, nn::Activation::ReLU, nn::Activation::Sigmoid}, rng);

    std::vector<Adversary> adversaries;
    for (const auto attr : {embed::Attribute::Gender, embed::Attribute::Ethnicity}) {
        if ((attr == embed::Attribute::Gender && !cfg.probe_gender) ||
            (attr == embed::Attribute::Ethnicity && !cfg.probe_ethnicity)) {
            continue;
        }
        Adversary adv;
        adv.attribute = attr;
        adv.probe = nn::make_mlp(kEmbeddingDim, {10, embed::class_count(attr)},
                                 {nn::Activation::ReLU, nn::Activation::Softmax}, rng);
        adv.adam = nn::make_adam(adv.probe, cfg.probe_lr);
        adv.labels.reserve(train_profiles.size());
        for (const auto& p : train_profiles) adv.labels.push_back(embed::attribute_label(p.demographics, attr));
        adversaries.push_back(std::move(adv));
    }

    nn::AdamState adam_transform = nn::make_adam(result.transform.net, cfg.transform_lr);
    nn::AdamState adam_scorer = nn::make_adam(result.scorer, cfg.lr);

    std::vector<size_t> order(static_cast<size_t>(n));
    std::iota(order.begin(), order.end(), size_t{0});
    const auto batch = static_cast<size_t>(cfg.batch_size);

    for (int outer = 0; outer < cfg.outer_epochs; ++outer) {
        // (a) probe phase: adversaries keep training on current transform
        // outputs. Probe state persists across phases, so a probe that once
        // found a leak direction keeps penalizing it after the transform
        // collapses it, which stops the task gradient from regrowing it.
        const nn::Matrix current = result.transform.apply(embeddings);
        for (auto& adv : adversaries) {
            for (int inner = 0; inner < cfg.probe_inner_epochs; ++inner) {
                rng.shuffle(order);
                for (size_t start = 0; start < order.size(); start += batch) {
                    const size_t end = std::min(start + batch, order.size());
                    const nn::Matrix xb = take_rows(current, order, start, end);
                    std::vector<int> lb(end - start);
                    for (size_t i = start; i < end; ++i) lb[i - start] = adv.labels[order[i]];
                    const auto trace = nn::forward(adv.probe, xb);
                    const auto loss = nn::ce_loss(trace.output(), lb);
                    if (!std::isfinite(loss.value)) {
                        throw NumericalError("train_agnostic: non-finite probe loss in outer epoch " +
                                             std::to_string(outer));
                    }
                    nn::adam_step(adv.probe, nn::backward(adv.probe, trace, loss.grad), adv.adam);
                }
            }
            result.trace.push_back(
                {outer, adv.attribute, nn::accuracy(nn::predict(adv.probe, current), adv.labels)});
        }

        // (b) joint phase: the scorer descends the task loss; the transform
        // descends the adversarial pressure, probes frozen but
        // differentiated through.
        rng.shuffle(order);
        for (size_t start = 0; start < order.size(); start += batch) {
            const size_t end = std::min(start + batch, order.size());
            const int b = static_cast<int>(end - start);
            const nn::Matrix xb_emb = take_rows(embeddings, order, start, end);
            const nn::Matrix xb_merits = take_rows(merits, order, start, end);
            const nn::Matrix yb = take_rows(targets, order, start, end);

            const auto transform_trace = nn::forward(result.transform.net, xb_emb);
            const nn::Matrix& t_out = transform_trace.output();

            nn::Matrix scorer_in(b, kCompetencyCount + kEmbeddingDim);
            for (int r = 0; r < b; ++r) {
                auto dst = scorer_in.row(r);
                const auto m = xb_merits.row(r);
                const auto t = t_out.row(r);
                std::copy(m.begin(), m.end(), dst.begin());
                std::copy(t.begin(), t.end(), dst.begin() + kCompetencyCount);
            }

            const auto scorer_trace = nn::forward(result.scorer, scorer_in);
            const auto task = nn::mae_loss(scorer_trace.output(), yb);
            const auto scorer_grads = nn::backward(result.scorer, scorer_trace, task.grad);

            // The transform descends the adversarial pressure alone (the
            // regularizer-dominant limit of task + lambda * Delta). Routing
            // the task gradient into the transform as well leaves a stalemate
            // with nonzero signal transmission, and any nonzero transmission
            // keeps the planted signal linearly recoverable. The pressure is
            // the uniform-target cross entropy: same minimizer as the
            // reported sensitiveness, but with live gradients on confident
            // probe rows, which the entropy form lacks.
            nn::Matrix d_transform_out(b, kEmbeddingDim);
            double total_loss = task.value;
            for (auto& adv : adversaries) {
                const auto probe_trace = nn::forward(adv.probe, t_out);
                const auto pressure = nn::uniform_ce_loss(probe_trace.output());
                total_loss += cfg.lambda * pressure.value;
                if (cfg.lambda == 0.0) continue;
                const auto probe_grads = nn::backward(adv.probe, probe_trace, pressure.grad);
                for (size_t i = 0; i < d_transform_out.data.size(); ++i) {
                    d_transform_out.data[i] += cfg.lambda * probe_grads.input.data[i];
                }
            }
            if (!std::isfinite(total_loss)) {
                throw NumericalError("train_agnostic: non-finite joint loss in outer epoch " + std::to_string(outer));
            }

            nn::adam_step(result.scorer, scorer_grads, adam_scorer);
            if (cfg.lambda > 0.0) {
                const auto transform_grads = nn::backward(result.transform.net, transform_trace, d_transform_out);
                nn::adam_step(result.transform.net, transform_grads, adam_transform);
                const double keep = std::max(0.0, 1.0 - cfg.lambda * cfg.transform_decay);
                for (auto& w : result.transform.net.layers[0].weights.data) w *= keep;
            }
        }
    }

    for (auto& adv : adversaries) result.probes.push_back({adv.attribute, std::move(adv.probe)});
    return result;
}

std::vector<AttributeLeakage> audit_leakage(const AgnosticTransform& transform,
                                            const std::vector<data::Profile>& profiles, uint64_t seed) {
    if (profiles.empty()) throw DataError("audit_leakage: empty profile set");
    std::vector<FaceEmbedding> raw;
    std::vector<FaceEmbedding> transformed;
    raw.reserve(profiles.size());
    transformed.reserve(profiles.size());
    for (const auto& p : profiles) {
        raw.push_back(p.embedding);
        transformed.push_back(transform.apply(p.embedding));
    }

    Rng rng(seed);
    std::vector<AttributeLeakage> audits;
    for (const auto attr : {embed::Attribute::Gender, embed::Attribute::Ethnicity}) {
        std::vector<int> labels;
        labels.reserve(profiles.size());
        for (const auto& p : profiles) labels.push_back(embed::attribute_label(p.demographics, attr));
        // One seed per attribute, shared by both fits, so before/after is a
        // paired comparison (a no-op transform audits exactly equal).
        const uint64_t probe_seed = rng.next_u64();
        AttributeLeakage audit;
        audit.attribute = attr;
        audit.before = embed::fit_probe(raw, labels, attr, probe_seed).heldout_accuracy;
        audit.after = embed::fit_probe(transformed, labels, attr, probe_seed).heldout_accuracy;
        audits.push_back(audit);
    }
    return audits;
}

}  // namespace faircv::sens
