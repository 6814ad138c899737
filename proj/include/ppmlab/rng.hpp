#pragma once

#include "ppmlab/common.hpp"

#include <cstdint>
#include <random>

namespace ppmlab {

/// SplitMix64 mixing step. Used to derive independent stream seeds from a
/// master seed and a counter so that parallel grid cells never share draws.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t counter) {
    return splitmix64(master ^ splitmix64(counter + 1));
}

/// Seeded random stream. One instance per run; never shared across threads.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double uniform(double lo, double hi) {
        std::uniform_real_distribution<double> d(lo, hi);
        return d(engine_);
    }

    double normal() {
        std::normal_distribution<double> d(0.0, 1.0);
        return d(engine_);
    }

    Vector normal_vector(int dim) {
        Vector v(dim);
        for (int i = 0; i < dim; ++i) v[i] = normal();
        return v;
    }

    /// Index draw from an unnormalized nonnegative weight vector.
    int categorical(const Vector& weights) {
        double total = weights.sum();
        double u = uniform(0.0, total);
        double acc = 0.0;
        for (int i = 0; i < weights.size(); ++i) {
            acc += weights[i];
            if (u <= acc) return i;
        }
        return static_cast<int>(weights.size()) - 1;
    }

    std::uint64_t raw() { return engine_(); }

    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
};

} // namespace ppmlab
