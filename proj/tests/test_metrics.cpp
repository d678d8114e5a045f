#include <cmath>

#include "doctest.h"
#include "faircv/common.hpp"
#include "faircv/metrics.hpp"

using namespace faircv;
using metrics::ScoreHistogram;

TEST_CASE("histogram: point mass lands in one bin") {
    std::vector<double> scores(1000, 0.5);
    const auto h = ScoreHistogram::from_scores(scores, 50, 1e-6);
    CHECK(h.probabilities[25] > 0.999);
    double sum = 0.0;
    for (double p : h.probabilities) {
        CHECK(p > 0.0);  // smoothing floor
        sum += p;
    }
    CHECK(std::abs(sum - 1.0) < 1e-9);
}

TEST_CASE("histogram: boundary scores 0 and 1 with 2 bins") {
    const auto h = ScoreHistogram::from_scores(std::vector<double>{0.0, 1.0}, 2, 0.0);
    CHECK(h.probabilities[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(h.probabilities[1] == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("histogram: uniform Monte Carlo fills every bin evenly") {
    Rng rng(42);
    std::vector<double> scores(1000000);
    for (double& s : scores) s = rng.uniform();
    const auto h = ScoreHistogram::from_scores(scores, 50, 1e-6);
    for (double p : h.probabilities) CHECK(std::abs(p - 0.02) < 0.001);
}

TEST_CASE("histogram: rejects empty input and bad scores") {
    CHECK_THROWS_AS((void)ScoreHistogram::from_scores(std::vector<double>{}), DataError);
    CHECK_THROWS_AS((void)ScoreHistogram::from_scores(std::vector<double>{1.25}), DataError);
}

TEST_CASE("kl: identity is exactly zero") {
    Rng rng(7);
    std::vector<double> scores(500);
    for (double& s : scores) s = rng.uniform();
    const auto h = ScoreHistogram::from_scores(scores);
    CHECK(metrics::kl_divergence(h, h) == 0.0);
}

TEST_CASE("kl: hand-computable two-bin case matches closed form to 1e-12") {
    const auto p = ScoreHistogram::from_probabilities({1.0, 0.0});
    const auto q = ScoreHistogram::from_probabilities({0.5, 0.5});
    CHECK(std::abs(metrics::kl_divergence(p, q) - std::log(2.0)) < 1e-12);

    // generic asymmetric case: sum p ln(p/q)
    const auto p2 = ScoreHistogram::from_probabilities({0.8, 0.2});
    const auto q2 = ScoreHistogram::from_probabilities({0.3, 0.7});
    const double expected = 0.8 * std::log(0.8 / 0.3) + 0.2 * std::log(0.2 / 0.7);
    CHECK(std::abs(metrics::kl_divergence(p2, q2) - expected) < 1e-12);
}

TEST_CASE("kl: mismatched binning rejected") {
    const auto p = ScoreHistogram::from_probabilities({1.0, 0.0});
    const auto q = ScoreHistogram::from_probabilities({0.5, 0.25, 0.25});
    CHECK_THROWS_AS((void)metrics::kl_divergence(p, q), DataError);
}

TEST_CASE("pairwise mean kl: hand expansion over three groups") {
    const auto a = ScoreHistogram::from_probabilities({0.5, 0.5});
    const auto b = ScoreHistogram::from_probabilities({0.9, 0.1});
    const double x = metrics::kl_divergence(a, b);

    CHECK(metrics::pairwise_mean_kl({a, a, a}) == 0.0);
    // pairs: (a,a)=0, (a,b)=x, (a,b)=x -> mean 2x/3
    CHECK(std::abs(metrics::pairwise_mean_kl({a, a, b}) - 2.0 * x / 3.0) < 1e-12);
    CHECK_THROWS_AS((void)metrics::pairwise_mean_kl({a}), DataError);
}

TEST_CASE("kl: smoothing sensitivity") {
    Rng rng(11);

    // Overlapping supports: every bin populated on both sides, epsilon only
    // perturbs the renormalization. Halving it moves KL well below 1%.
    std::vector<double> male(2400), female(2400);
    for (double& s : male) s = std::clamp(0.55 + 0.20 * rng.gaussian(), 0.0, 1.0);
    for (double& s : female) s = std::clamp(0.45 + 0.20 * rng.gaussian(), 0.0, 1.0);
    const double kl_full = metrics::kl_divergence(ScoreHistogram::from_scores(male, 50, 1e-6),
                                                  ScoreHistogram::from_scores(female, 50, 1e-6));
    const double kl_half = metrics::kl_divergence(ScoreHistogram::from_scores(male, 50, 5e-7),
                                                  ScoreHistogram::from_scores(female, 50, 5e-7));
    CHECK(std::abs(kl_full - kl_half) / kl_full < 0.01);

    // One-sided tails: each bin occupied by P but empty in Q contributes
    // exactly p * ln 2 when epsilon halves. Verify against that closed form.
    std::vector<double> low(2400), high(2400);
    for (double& s : low) s = std::clamp(0.25 + 0.08 * rng.gaussian(), 0.0, 1.0);
    for (double& s : high) s = std::clamp(0.60 + 0.08 * rng.gaussian(), 0.0, 1.0);
    const auto p_full = ScoreHistogram::from_scores(high, 50, 1e-6);
    const auto q_full = ScoreHistogram::from_scores(low, 50, 1e-6);
    const auto p_half = ScoreHistogram::from_scores(high, 50, 5e-7);
    const auto q_half = ScoreHistogram::from_scores(low, 50, 5e-7);
    const double floor_full = 1e-6 / (2400.0 + 50 * 1e-6);
    double one_sided_mass = 0.0;
    for (int b = 0; b < 50; ++b) {
        if (q_full.probabilities[static_cast<size_t>(b)] <= floor_full * 1.5 &&
            p_full.probabilities[static_cast<size_t>(b)] > floor_full * 1.5) {
            one_sided_mass += p_full.probabilities[static_cast<size_t>(b)];
        }
    }
    const double delta = metrics::kl_divergence(p_half, q_half) - metrics::kl_divergence(p_full, q_full);
    CHECK(delta == doctest::Approx(std::log(2.0) * one_sided_mass).epsilon(0.02));
}

namespace {

metrics::DemographicsLookup make_lookup(int n) {
    metrics::DemographicsLookup lookup;
    for (int i = 0; i < n; ++i) lookup[i] = group_attributes(i % kGroupCount);
    return lookup;
}

}  // namespace

TEST_CASE("top-k: counts map to percentages and delta") {
    // 200 profiles; scores favor males strongly.
    const auto lookup = make_lookup(200);
    std::vector<metrics::Prediction> preds;
    for (int i = 0; i < 200; ++i) {
        const bool male = lookup.at(i).gender == Gender::Male;
        preds.emplace_back(i, male ? 0.9 - i * 1e-4 : 0.5 - i * 1e-4);
    }
    const auto report = metrics::top_k_rates(preds, lookup, BiasAxis::Gender, 100);
    CHECK(report.rates[0].group == "M");
    CHECK(report.rates[0].count == 100);
    CHECK(report.rates[1].count == 0);
    CHECK(report.delta == doctest::Approx(100.0));
    double pct_sum = 0.0;
    for (const auto& r : report.rates) pct_sum += r.percentage;
    CHECK(pct_sum == doctest::Approx(100.0));
}

TEST_CASE("top-k: perfectly balanced selection has zero delta") {
    const auto lookup = make_lookup(12);
    std::vector<metrics::Prediction> preds;
    for (int i = 0; i < 12; ++i) preds.emplace_back(i, 1.0 - i * 0.01);
    const auto report = metrics::top_k_rates(preds, lookup, BiasAxis::Gender, 12);
    CHECK(report.delta == doctest::Approx(0.0));
    const auto eth = metrics::top_k_rates(preds, lookup, BiasAxis::Ethnicity, 12);
    CHECK(eth.delta == doctest::Approx(0.0));
}

TEST_CASE("top-k: boundary ties break by ascending id") {
    metrics::DemographicsLookup lookup;
    lookup[0] = {Gender::Male, Ethnicity::G1};
    lookup[1] = {Gender::Female, Ethnicity::G1};
    lookup[2] = {Gender::Female, Ethnicity::G2};
    std::vector<metrics::Prediction> preds = {{2, 0.5}, {0, 0.5}, {1, 0.9}};
    const auto report = metrics::top_k_rates(preds, lookup, BiasAxis::Gender, 2);
    // top-2: id 1 (0.9) and the tie at 0.5 resolves to id 0
    CHECK(report.rates[0].count == 1);  // male
    CHECK(report.rates[1].count == 1);  // female
}

TEST_CASE("top-k: permutation invariance") {
    const auto lookup = make_lookup(60);
    std::vector<metrics::Prediction> preds;
    Rng rng(5);
    for (int i = 0; i < 60; ++i) preds.emplace_back(i, rng.uniform());
    const auto base = metrics::top_k_rates(preds, lookup, BiasAxis::Ethnicity, 20);
    for (int trial = 0; trial < 5; ++trial) {
        rng.shuffle(preds);
        const auto shuffled = metrics::top_k_rates(preds, lookup, BiasAxis::Ethnicity, 20);
        for (size_t g = 0; g < base.rates.size(); ++g) CHECK(shuffled.rates[g].count == base.rates[g].count);
        CHECK(shuffled.delta == base.delta);
    }
}

TEST_CASE("top-k: invalid k rejected") {
    const auto lookup = make_lookup(6);
    std::vector<metrics::Prediction> preds = {{0, 0.5}, {1, 0.6}};
    CHECK_THROWS_AS((void)metrics::top_k_rates(preds, lookup, BiasAxis::Gender, 0), DataError);
    CHECK_THROWS_AS((void)metrics::top_k_rates(preds, lookup, BiasAxis::Gender, 3), DataError);
}
