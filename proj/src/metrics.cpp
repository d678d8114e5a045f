#include "faircv/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace faircv::metrics {

ScoreHistogram ScoreHistogram::from_scores(std::span<const double> scores, int bins, double epsilon) {
    if (scores.empty()) throw DataError("histogram: empty input");
    if (bins < 1) throw ConfigError("histogram: bin count must be >= 1");
    if (epsilon < 0.0) throw ConfigError("histogram: smoothing epsilon must be nonnegative");
    std::vector<double> counts(static_cast<size_t>(bins), 0.0);
    for (double s : scores) {
        if (!(s >= 0.0 && s <= 1.0)) throw DataError("histogram: score outside [0,1]");
        const int bin = std::min(static_cast<int>(s * bins), bins - 1);
        counts[static_cast<size_t>(bin)] += 1.0;
    }
    const double total = static_cast<double>(scores.size()) + epsilon * bins;
    ScoreHistogram h;
    h.bin_count = bins;
    h.epsilon = epsilon;
    h.probabilities.resize(static_cast<size_t>(bins));
    for (int i = 0; i < bins; ++i) h.probabilities[static_cast<size_t>(i)] = (counts[static_cast<size_t>(i)] + epsilon) / total;
    return h;
}

ScoreHistogram ScoreHistogram::from_probabilities(std::vector<double> probabilities) {
    if (probabilities.empty()) throw DataError("histogram: empty probabilities");
    double sum = 0.0;
    for (double p : probabilities) {
        if (p < 0.0) throw DataError("histogram: negative probability");
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw DataError("histogram: probabilities must sum to 1");
    ScoreHistogram h;
    h.bin_count = static_cast<int>(probabilities.size());
    h.epsilon = 0.0;
    h.probabilities = std::move(probabilities);
    return h;
}

double kl_divergence(const ScoreHistogram& p, const ScoreHistogram& q) {
    if (p.bin_count != q.bin_count) {
        throw DataError("kl_divergence: histograms use different binnings (" + std::to_string(p.bin_count) + " vs " +
                        std::to_string(q.bin_count) + ")");
    }
    double kl = 0.0;
    for (size_t i = 0; i < p.probabilities.size(); ++i) {
        const double pi = p.probabilities[i];
        if (pi <= 0.0) continue;
        const double qi = q.probabilities[i];
        if (qi <= 0.0) return std::numeric_limits<double>::infinity();
        kl += pi * std::log(pi / qi);
    }
    return std::max(kl, 0.0);
}

double pairwise_mean_kl(const std::vector<ScoreHistogram>& groups) {
    if (groups.size() < 2) throw DataError("pairwise_mean_kl: at least 2 groups required");
    double sum = 0.0;
    int pairs = 0;
    for (size_t i = 0; i < groups.size(); ++i) {
        for (size_t j = i + 1; j < groups.size(); ++j) {
            sum += kl_divergence(groups[i], groups[j]);
            ++pairs;
        }
    }
    return sum / pairs;
}

ScreeningReport top_k_rates(const std::vector<Prediction>& predictions, const DemographicsLookup& demographics,
                            BiasAxis axis, int k) {
    if (k <= 0) throw DataError("top_k_rates: k must be positive");
    if (static_cast<size_t>(k) > predictions.size()) {
        throw DataError("top_k_rates: k exceeds the number of predictions (" + std::to_string(predictions.size()) + ")");
    }

    std::vector<Prediction> sorted = predictions;
    std::sort(sorted.begin(), sorted.end(), [](const Prediction& a, const Prediction& b) {
        if (a.second != b.second) return a.second > b.second;
        return a.first < b.first;
    });

    const int n_groups = axis == BiasAxis::Gender ? 2 : 3;
    std::vector<int> counts(static_cast<size_t>(n_groups), 0);
    for (int i = 0; i < k; ++i) {
        const auto it = demographics.find(sorted[static_cast<size_t>(i)].first);
        if (it == demographics.end()) {
            throw DataError("top_k_rates: no demographics for profile id " + std::to_string(sorted[static_cast<size_t>(i)].first));
        }
        const int g = axis == BiasAxis::Gender ? static_cast<int>(it->second.gender) : static_cast<int>(it->second.ethnicity);
        counts[static_cast<size_t>(g)] += 1;
    }

    ScreeningReport report;
    report.k = k;
    double max_pct = 0.0;
    double min_pct = 100.0;
    for (int g = 0; g < n_groups; ++g) {
        GroupRate rate;
        rate.group = axis == BiasAxis::Gender ? to_string(static_cast<Gender>(g)) : to_string(static_cast<Ethnicity>(g));
        rate.count = counts[static_cast<size_t>(g)];
        rate.percentage = 100.0 * counts[static_cast<size_t>(g)] / k;
        max_pct = std::max(max_pct, rate.percentage);
        min_pct = std::min(min_pct, rate.percentage);
        report.rates.push_back(std::move(rate));
    }
    report.delta = max_pct - min_pct;
    return report;
}

}  // namespace faircv::metrics
