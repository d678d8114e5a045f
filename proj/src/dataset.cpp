#include "faircv/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace faircv::data {

ScoringWeights ScoringWeights::defaults() {
    ScoringWeights w;
    w.alpha = {0.25, 0.15, 0.10, 0.10, 0.05, 0.05, 0.05, 0.05, 0.05, 0.05, 0.05, 0.05};
    return w;
}

void ScoringWeights::validate() const {
    double sum = 0.0;
    for (double a : alpha) {
        if (a < 0.0) throw ConfigError("weights: alpha entries must be nonnegative");
        sum += a;
    }
    if (std::abs(sum - 1.0) > 1e-12) {
        throw ConfigError("weights: alpha must sum to 1 (got " + std::to_string(sum) + ")");
    }
    if (noise_sigma < 0.0) throw ConfigError("noise: sigma must be nonnegative");
    if (gender_penalty < 0.0 || gender_penalty > 1.0) throw ConfigError("penalties: gender penalty must be in [0,1]");
    for (double p : ethnicity_penalty) {
        if (p < 0.0 || p > 1.0) throw ConfigError("penalties: ethnicity penalties must be in [0,1]");
    }
    if (ethnicity_penalty[0] != 0.0) throw ConfigError("penalties: G1 is the reference group, its penalty must be 0");
}

void DiscreteDistribution::validate(const std::string& name) const {
    if (levels.empty() || levels.size() != probabilities.size()) {
        throw ConfigError("distributions: " + name + " needs matching levels and probabilities");
    }
    double sum = 0.0;
    for (double p : probabilities) {
        if (p < 0.0) throw ConfigError("distributions: " + name + " has a negative probability");
        sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
        throw ConfigError("distributions: " + name + " probabilities sum to " + std::to_string(sum) + ", expected 1");
    }
    for (double level : levels) {
        if (level < 0.0 || level > 1.0) throw ConfigError("distributions: " + name + " has a level outside [0,1]");
    }
}

double DiscreteDistribution::sample(Rng& rng) const {
    return levels[static_cast<size_t>(rng.categorical(probabilities))];
}

bool DiscreteDistribution::contains_level(double value) const {
    return std::any_of(levels.begin(), levels.end(), [&](double l) { return std::abs(l - value) < 1e-12; });
}

BlockDistributions BlockDistributions::defaults() {
    BlockDistributions d;
    d.education.levels = {0.0, 0.2, 0.4, 0.6, 0.8, 1.0};
    d.education.probabilities = {0.10, 0.28, 0.22, 0.10, 0.25, 0.05};

    // Experience p_k proportional to 0.8^k over k = 0..10.
    double norm = 0.0;
    for (int k = 0; k <= 10; ++k) norm += std::pow(0.8, k);
    for (int k = 0; k <= 10; ++k) {
        d.experience.levels.push_back(k / 10.0);
        d.experience.probabilities.push_back(std::pow(0.8, k) / norm);
    }

    d.availability.levels = {0.0, 0.5, 1.0};
    d.availability.probabilities = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};

    d.recommendation.levels = {0.0, 1.0};
    d.recommendation.probabilities = {0.7, 0.3};

    d.language.levels = {0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0};
    d.language.probabilities = {0.55, 0.20, 0.15, 0.10};

    // First language conditioned on proficiency >= 1/3.
    d.first_language.levels = {1.0 / 3.0, 2.0 / 3.0, 1.0};
    d.first_language.probabilities = {0.20 / 0.45, 0.15 / 0.45, 0.10 / 0.45};
    return d;
}

void BlockDistributions::validate() const {
    education.validate("education");
    experience.validate("experience");
    availability.validate("availability");
    recommendation.validate("recommendation");
    first_language.validate("first_language");
    language.validate("language");
}

CompetencyVector sample_competencies(Rng& rng, const BlockDistributions& dists) {
    dists.validate();
    CompetencyVector c;
    c[0] = dists.education.sample(rng);
    c[1] = dists.experience.sample(rng);
    c[2] = dists.availability.sample(rng);
    c[3] = dists.recommendation.sample(rng);
    c[4] = dists.first_language.sample(rng);
    for (int i = 5; i < kCompetencyCount; ++i) c[i] = dists.language.sample(rng);
    return c;
}

double compute_unbiased_score(const CompetencyVector& c, const ScoringWeights& w, double noise) {
    double score = noise;
    for (int i = 0; i < kCompetencyCount; ++i) score += w.alpha[static_cast<size_t>(i)] * c[i];
    return std::clamp(score, 0.0, 1.0);
}

double apply_bias_penalty(double score, const DemographicAttributes& d, const ScoringWeights& w, BiasAxis axis) {
    double penalty = 0.0;
    if (axis == BiasAxis::Gender) {
        penalty = d.gender == Gender::Female ? w.gender_penalty : 0.0;
    } else {
        penalty = w.ethnicity_penalty[static_cast<size_t>(d.ethnicity)];
    }
    return std::clamp(score - penalty, 0.0, 1.0);
}

std::vector<Profile> generate_dataset(int n, const ScoringWeights& weights, const BlockDistributions& dists,
                                      const embed::EmbeddingGenConfig& embed_cfg, uint64_t seed) {
    if (n <= 0 || n % kGroupCount != 0) {
        throw DataError("generate_dataset: profile count " + std::to_string(n) + " is not divisible by " +
                        std::to_string(kGroupCount) + " (needed for exact group balance)");
    }
    weights.validate();
    dists.validate();
    embed_cfg.validate();

    const auto dirs = embed::DemographicDirections::derive(embed_cfg.direction_seed);
    Rng rng(seed);
    std::vector<Profile> profiles;
    profiles.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
        Profile p;
        p.id = i;
        p.demographics = group_attributes(i % kGroupCount);
        p.competencies = sample_competencies(rng, dists);
        p.embedding = embed::generate_embedding(rng, p.demographics, embed_cfg, dirs);
        const double noise = rng.gaussian(0.0, weights.noise_sigma);
        p.score_unbiased = compute_unbiased_score(p.competencies, weights, noise);
        p.score_gender_biased = apply_bias_penalty(p.score_unbiased, p.demographics, weights, BiasAxis::Gender);
        p.score_ethnicity_biased = apply_bias_penalty(p.score_unbiased, p.demographics, weights, BiasAxis::Ethnicity);
        profiles.push_back(std::move(p));
    }
    return profiles;
}

DatasetSplit split_dataset(const std::vector<Profile>& profiles, double ratio, uint64_t seed) {
    if (ratio <= 0.0 || ratio >= 1.0) throw DataError("split_dataset: ratio must lie strictly between 0 and 1");
    if (profiles.empty()) throw DataError("split_dataset: empty dataset");

    std::array<std::vector<size_t>, kGroupCount> by_group;
    for (size_t i = 0; i < profiles.size(); ++i) {
        by_group[static_cast<size_t>(group_index(profiles[i].demographics))].push_back(i);
    }
    const size_t per_group = by_group[0].size();
    for (const auto& group : by_group) {
        if (group.size() != per_group) {
            throw DataError("split_dataset: dataset is not balanced across the 6 demographic groups");
        }
    }
    const double train_target = ratio * static_cast<double>(per_group);
    const auto n_train = static_cast<size_t>(std::llround(train_target));
    if (std::abs(train_target - static_cast<double>(n_train)) > 1e-9 || n_train == 0 || n_train == per_group) {
        throw DataError("split_dataset: cannot stratify " + std::to_string(per_group) + " profiles per group at ratio " +
                        std::to_string(ratio) + " into whole groups");
    }

    Rng rng(seed);
    DatasetSplit split;
    for (auto& group : by_group) {
        rng.shuffle(group);
        for (size_t i = 0; i < group.size(); ++i) {
            (i < n_train ? split.train : split.validation).push_back(profiles[group[i]]);
        }
    }
    auto by_id = [](const Profile& a, const Profile& b) { return a.id < b.id; };
    std::sort(split.train.begin(), split.train.end(), by_id);
    std::sort(split.validation.begin(), split.validation.end(), by_id);
    return split;
}

namespace {

constexpr int kColumnCount = 3 + kCompetencyCount + kEmbeddingDim + 3;

std::string format_real(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

double parse_real(const std::string& field, size_t line_no, const char* what) {
    double value = 0.0;
    const auto* begin = field.data();
    const auto* end = field.data() + field.size();
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc{} || ptr != end) {
        throw DataError("dataset row " + std::to_string(line_no) + ": cannot parse " + std::string(what) + " '" +
                        field + "'");
    }
    return value;
}

void check_unit_range(double v, size_t line_no, const char* what) {
    if (!(v >= 0.0 && v <= 1.0)) {
        throw DataError("dataset row " + std::to_string(line_no) + ": " + std::string(what) + " " + format_real(v) +
                        " outside [0,1]");
    }
}

}  // namespace

void save_dataset(const std::vector<Profile>& profiles, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot open dataset file for writing: " + path.string());
    out << "id,gender,ethnicity";
    for (int i = 1; i <= kCompetencyCount; ++i) out << ",c" << (i < 10 ? "0" : "") << i;
    for (int i = 1; i <= kEmbeddingDim; ++i) out << ",e" << (i < 10 ? "0" : "") << i;
    out << ",t_u,t_g,t_e\n";
    for (const auto& p : profiles) {
        out << p.id << ',' << to_string(p.demographics.gender) << ',' << to_string(p.demographics.ethnicity);
        for (int i = 0; i < kCompetencyCount; ++i) out << ',' << format_real(p.competencies[i]);
        for (int i = 0; i < kEmbeddingDim; ++i) out << ',' << format_real(p.embedding[i]);
        out << ',' << format_real(p.score_unbiased) << ',' << format_real(p.score_gender_biased) << ','
            << format_real(p.score_ethnicity_biased) << '\n';
    }
    if (!out) throw DataError("failed writing dataset file: " + path.string());
}

std::vector<Profile> load_dataset(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open dataset file: " + path.string());

    std::string line;
    if (!std::getline(in, line)) throw DataError("dataset file is empty: " + path.string());

    std::vector<Profile> profiles;
    size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (line.back() == ',') fields.push_back("");
        if (static_cast<int>(fields.size()) != kColumnCount) {
            throw DataError("dataset row " + std::to_string(line_no) + ": expected " + std::to_string(kColumnCount) +
                            " columns, got " + std::to_string(fields.size()));
        }

        Profile p;
        p.id = static_cast<int64_t>(parse_real(fields[0], line_no, "id"));
        if (fields[1] == "M") {
            p.demographics.gender = Gender::Male;
        } else if (fields[1] == "F") {
            p.demographics.gender = Gender::Female;
        } else {
            throw DataError("dataset row " + std::to_string(line_no) + ": unknown gender '" + fields[1] + "'");
        }
        if (fields[2] == "G1") {
            p.demographics.ethnicity = Ethnicity::G1;
        } else if (fields[2] == "G2") {
            p.demographics.ethnicity = Ethnicity::G2;
        } else if (fields[2] == "G3") {
            p.demographics.ethnicity = Ethnicity::G3;
        } else {
            throw DataError("dataset row " + std::to_string(line_no) + ": unknown ethnicity '" + fields[2] + "'");
        }

        int col = 3;
        for (int i = 0; i < kCompetencyCount; ++i, ++col) {
            p.competencies[i] = parse_real(fields[static_cast<size_t>(col)], line_no, "competency");
            check_unit_range(p.competencies[i], line_no, "competency");
        }
        for (int i = 0; i < kEmbeddingDim; ++i, ++col) {
            p.embedding[i] = parse_real(fields[static_cast<size_t>(col)], line_no, "embedding value");
            if (!std::isfinite(p.embedding[i])) {
                throw DataError("dataset row " + std::to_string(line_no) + ": non-finite embedding value");
            }
        }
        p.score_unbiased = parse_real(fields[static_cast<size_t>(col++)], line_no, "t_u");
        p.score_gender_biased = parse_real(fields[static_cast<size_t>(col++)], line_no, "t_g");
        p.score_ethnicity_biased = parse_real(fields[static_cast<size_t>(col++)], line_no, "t_e");
        check_unit_range(p.score_unbiased, line_no, "t_u");
        check_unit_range(p.score_gender_biased, line_no, "t_g");
        check_unit_range(p.score_ethnicity_biased, line_no, "t_e");
        profiles.push_back(std::move(p));
    }
    return profiles;
}

}  // namespace faircv::data
