#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "faircv/common.hpp"
#include "faircv/types.hpp"

namespace faircv::metrics {

// Smoothed histogram over [0,1]: equal-width bins, additive epsilon per bin,
// renormalized. Score 1.0 lands in the last bin.
struct ScoreHistogram {
    int bin_count = 50;
    double epsilon = 1e-6;
    std::vector<double> probabilities;

    static ScoreHistogram from_scores(std::span<const double> scores, int bins = 50, double epsilon = 1e-6);
    // Direct construction for tests and hand-computable cases; no smoothing.
    static ScoreHistogram from_probabilities(std::vector<double> probabilities);

    double bin_center(int i) const { return (i + 0.5) / bin_count; }
};

// KL(P||Q) = sum p_i ln(p_i / q_i), natural log. Terms with p_i = 0 drop out;
// q_i = 0 under positive p_i yields +infinity (never happens post-smoothing).
double kl_divergence(const ScoreHistogram& p, const ScoreHistogram& q);

// Mean KL over unordered pairs, first-listed group as P.
double pairwise_mean_kl(const std::vector<ScoreHistogram>& groups);

struct GroupRate {
    std::string group;
    int count = 0;
    double percentage = 0.0;
};

struct ScreeningReport {
    int k = 0;
    std::vector<GroupRate> rates;
    double delta = 0.0;  // max - min group percentage on the audited axis
};

using Prediction = std::pair<int64_t, double>;
using DemographicsLookup = std::unordered_map<int64_t, DemographicAttributes>;

// Selects the k highest scores (ties at the boundary break by ascending id)
// and reports per-group selection percentages along the audited axis.
ScreeningReport top_k_rates(const std::vector<Prediction>& predictions, const DemographicsLookup& demographics,
                            BiasAxis axis, int k = 100);

}  // namespace faircv::metrics
