#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace faircv {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Bad option/config values (CLI exit code 1).
struct ConfigError : Error {
    using Error::Error;
};

// Malformed or inconsistent data, files, shapes (CLI exit code 2).
struct DataError : Error {
    using Error::Error;
};

// Non-finite values during computation (CLI exit code 3).
struct NumericalError : Error {
    using Error::Error;
};

// Seeded random stream with hand-defined output mappings so that every draw
// is bit-reproducible across platforms (the std distributions are not).
class Rng {
public:
    explicit Rng(uint64_t seed) : engine_(seed) {}

    uint64_t next_u64() { return engine_(); }

    // Uniform in [0,1), 53-bit resolution.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    // Standard normal via Box-Muller. Two uniforms per draw, no cached spare.
    double gaussian() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.141592653589793238462643 * u2);
    }

    double gaussian(double mean, double sigma) { return mean + sigma * gaussian(); }

    // Uniform integer in [0, n). Rejection sampling keeps the draw unbiased.
    uint64_t uniform_int(uint64_t n) {
        if (n == 0) throw DataError("uniform_int: n must be positive");
        const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        uint64_t x = engine_();
        while (x >= limit) x = engine_();
        return x % n;
    }

    // Index drawn from a discrete distribution by inverse CDF on one uniform.
    int categorical(std::span<const double> probs) {
        const double u = uniform();
        double cum = 0.0;
        for (size_t i = 0; i < probs.size(); ++i) {
            cum += probs[i];
            if (u < cum) return static_cast<int>(i);
        }
        return static_cast<int>(probs.size()) - 1;  // guard against rounding at u ~ 1
    }

    template <typename T>
    void shuffle(std::vector<T>& items) {
        for (size_t i = items.size(); i > 1; --i) {
            const size_t j = static_cast<size_t>(uniform_int(i));
            std::swap(items[i - 1], items[j]);
        }
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace faircv
