#pragma once

#include <array>
#include <cstdint>
#include <string>

namespace faircv {

inline constexpr int kCompetencyCount = 12;
inline constexpr int kEmbeddingDim = 20;
inline constexpr int kGroupCount = 6;

enum class Gender : uint8_t { Male = 0, Female = 1 };
enum class Ethnicity : uint8_t { G1 = 0, G2 = 1, G3 = 2 };
enum class BiasAxis : uint8_t { Gender = 0, Ethnicity = 1 };

struct DemographicAttributes {
    Gender gender = Gender::Male;
    Ethnicity ethnicity = Ethnicity::G1;

    bool operator==(const DemographicAttributes&) const = default;
};

// Canonical group indexing: 0..5 = (M,G1) (M,G2) (M,G3) (F,G1) (F,G2) (F,G3).
inline int group_index(const DemographicAttributes& d) {
    return static_cast<int>(d.gender) * 3 + static_cast<int>(d.ethnicity);
}

inline DemographicAttributes group_attributes(int index) {
    return {static_cast<Gender>(index / 3), static_cast<Ethnicity>(index % 3)};
}

inline std::string to_string(Gender g) { return g == Gender::Male ? "M" : "F"; }
inline std::string to_string(Ethnicity e) {
    switch (e) {
        case Ethnicity::G1: return "G1";
        case Ethnicity::G2: return "G2";
        default: return "G3";
    }
}
inline std::string to_string(BiasAxis a) { return a == BiasAxis::Gender ? "gender" : "ethnicity"; }

// 12 resume competencies, all in [0,1].
// Layout: [education, experience, availability, recommendation, lang1..lang8].
struct CompetencyVector {
    std::array<double, kCompetencyCount> values{};

    double& operator[](int i) { return values[static_cast<size_t>(i)]; }
    double operator[](int i) const { return values[static_cast<size_t>(i)]; }
    bool operator==(const CompetencyVector&) const = default;
};

// 20-dimensional stand-in for a face-recognition bottleneck feature vector.
struct FaceEmbedding {
    std::array<double, kEmbeddingDim> values{};

    double& operator[](int i) { return values[static_cast<size_t>(i)]; }
    double operator[](int i) const { return values[static_cast<size_t>(i)]; }
    bool operator==(const FaceEmbedding&) const = default;
};

}  // namespace faircv
