#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "dperm/errors.hpp"
#include "dperm/rng.hpp"

namespace dperm {

// The two perturbation-noise families. B1 has density proportional to
// exp(-|b|_1 / 2) (independent Laplace coordinates), B2 has density
// proportional to exp(-|b|_2 / 2) (uniform direction, chi-square(2s) radius).
enum class NoiseFamily : std::uint8_t { B1, B2 };

inline const char* to_string(NoiseFamily family) {
    return family == NoiseFamily::B1 ? "b1" : "b2";
}

inline NoiseFamily noise_family_from_string(const std::string& name) {
    if (name == "b1" || name == "B1") return NoiseFamily::B1;
    if (name == "b2" || name == "B2") return NoiseFamily::B2;
    throw schema_error("unknown noise family '" + name + "' (expected b1 or b2)");
}

struct NoiseDraw {
    std::vector<double> vector;
    NoiseFamily family{NoiseFamily::B1};
    std::uint64_t seed{0};

    std::size_t dim() const noexcept { return vector.size(); }

    double norm1() const {
        double sum = 0.0;
        for (double v : vector) sum += std::abs(v);
        return sum;
    }

    double norm2() const {
        double sum = 0.0;
        for (double v : vector) sum += v * v;
        return std::sqrt(sum);
    }
};

// s independent Laplace(0, 2) coordinates; |draw|_1 ~ Gamma(s, 2).
inline NoiseDraw sample_b1(std::size_t s, Rng& rng) {
    if (s == 0) throw schema_error("sample_b1: dimension must be >= 1");
    NoiseDraw draw;
    draw.family = NoiseFamily::B1;
    draw.seed = rng.seed();
    draw.vector.resize(s);
    for (std::size_t i = 0; i < s; ++i) draw.vector[i] = rng.laplace(2.0);
    return draw;
}

// X = (W / |W|_2) * Y with W standard s-variate Gaussian and Y ~ chi-square(2s);
// the resulting density is proportional to exp(-|x|_2 / 2) and |draw|_2 == Y.
inline NoiseDraw sample_b2(std::size_t s, Rng& rng) {
    if (s == 0) throw schema_error("sample_b2: dimension must be >= 1");
    NoiseDraw draw;
    draw.family = NoiseFamily::B2;
    draw.seed = rng.seed();
    draw.vector.resize(s);
    double norm_sq;
    do {
        norm_sq = 0.0;
        for (std::size_t i = 0; i < s; ++i) {
            draw.vector[i] = rng.normal();
            norm_sq += draw.vector[i] * draw.vector[i];
        }
    } while (norm_sq == 0.0);
    const double radius = rng.chi_square_even(s);
    const double rescale = radius / std::sqrt(norm_sq);
    for (double& v : draw.vector) v *= rescale;
    return draw;
}

inline NoiseDraw sample_noise(NoiseFamily family, std::size_t s, Rng& rng) {
    return family == NoiseFamily::B1 ? sample_b1(s, rng) : sample_b2(s, rng);
}

// High-probability bound xi with P(|b|_2 >= xi) <= delta / k.
// B1: 2 s log(s k / delta), which bounds even the larger |b|_1.
// B2: |b|_2 is exactly chi-square with 2s degrees of freedom, so the
// Laurent-Massart tail gives 2s + 2 sqrt(2s t) + 2t at t = log(k/delta).
// (Evaluating that tail at s instead of 2s degrees of freedom understates the
// quantile badly for larger s and empirically violates the delta/k target.)
inline double xi_bound(NoiseFamily family, std::size_t s, std::size_t k, double delta) {
    if (s == 0 || k == 0) throw schema_error("xi_bound: s and k must be >= 1");
    if (!(delta > 0.0) || !(delta < 1.0)) {
        throw schema_error("xi_bound: delta must lie in (0, 1)");
    }
    const double sd = static_cast<double>(s);
    const double kd = static_cast<double>(k);
    if (family == NoiseFamily::B1) {
        const double ratio = sd * kd / delta;
        if (!(ratio > 1.0)) {
            throw schema_error("xi_bound: s*k/delta must exceed 1 for family B1");
        }
        return 2.0 * sd * std::log(ratio);
    }
    const double log_term = std::log(kd / delta);
    const double root = std::sqrt(2.0 * sd) + std::sqrt(log_term);
    return root * root + log_term;
}

}  // namespace dperm
