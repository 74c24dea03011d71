#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "dperm/errors.hpp"

namespace dperm {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

// Sub-seed derivation for parallel streams: stream i of master seed m is
// splitmix64(m + (i+1) * golden). Streams with distinct ids never collide
// with the master or with each other in practice, and the scheme is stable
// across platforms, so it is safe to document in run manifests.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
    return splitmix64(master + (stream + 1) * 0x9E3779B97F4A7C15ull);
}

// Seeded random stream. All distribution draws are implemented here on top of
// the raw 64-bit engine output, so a (seed, call sequence) pair reproduces the
// exact same values on every build. Never uses global state; callers own the
// stream and pass it explicitly.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

    std::uint64_t seed() const noexcept { return seed_; }

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1) with 53 random bits.
    double uniform01() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Index in [0, n).
    std::size_t uniform_index(std::size_t n) {
        return static_cast<std::size_t>(uniform01() * static_cast<double>(n)) % n;
    }

    bool bernoulli(double p) { return uniform01() < p; }

    // Standard normal via the Marsaglia polar method. The second antithetic
    // value is discarded so the draw count per call is data independent only
    // in distribution, which is all determinism requires.
    double normal() {
        for (;;) {
            const double u = 2.0 * uniform01() - 1.0;
            const double v = 2.0 * uniform01() - 1.0;
            const double s = u * u + v * v;
            if (s > 0.0 && s < 1.0) {
                return u * std::sqrt(-2.0 * std::log(s) / s);
            }
        }
    }

    // Laplace(0, scale) by inverse CDF; log1p keeps the tail accurate.
    double laplace(double scale) {
        const double u = uniform01() - 0.5;
        const double mag = -scale * std::log1p(-2.0 * std::abs(u));
        return u < 0.0 ? -mag : mag;
    }

    double exponential(double scale) { return -scale * std::log1p(-uniform01()); }

    // Gamma(shape, scale) via the Marsaglia-Tsang squeeze; exact (rejection),
    // no series truncation. Shapes below 1 are boosted through the standard
    // u^(1/shape) trick.
    double gamma(double shape, double scale) {
        if (!(shape > 0.0) || !(scale > 0.0)) {
            throw schema_error("gamma: shape and scale must be positive");
        }
        if (shape < 1.0) {
            const double u = uniform01();
            return gamma(shape + 1.0, scale) * std::pow(u, 1.0 / shape);
        }
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x;
            double v;
            do {
                x = normal();
                v = 1.0 + c * x;
            } while (v <= 0.0);
            v = v * v * v;
            const double u = uniform01();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v * scale;
            if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v * scale;
        }
    }

    // Chi-square(2s) == Gamma(s, 2).
    double chi_square_even(std::size_t half_dof) {
        return gamma(static_cast<double>(half_dof), 2.0);
    }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

}  // namespace dperm
