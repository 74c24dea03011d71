#pragma once

#include <cmath>
#include <vector>

#include "dperm/dataset.hpp"
#include "dperm/objective.hpp"
#include "dperm/rng.hpp"

namespace dperm {

// The fixed instance behind compare-noise runs: 200 records, 5 features
// (intercept included), labels drawn from a known logistic model, rows
// normalized to the unit l1 ball. Fully deterministic.
inline LabeledDataset builtin_compare_instance() {
    constexpr std::size_t n = 200;
    constexpr std::size_t s = 5;
    const std::vector<double> truth{-0.4, 1.6, -2.2, 0.9, 1.1};
    Rng rng(0x5eedULL);
    std::vector<double> features(n * s);
    std::vector<double> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
        features[i * s] = 1.0;
        double norm = 1.0;
        for (std::size_t j = 1; j < s; ++j) {
            features[i * s + j] = rng.uniform(0.0, 1.0);
            norm += features[i * s + j];
        }
        for (std::size_t j = 0; j < s; ++j) features[i * s + j] /= norm;
        double margin = 0.0;
        for (std::size_t j = 0; j < s; ++j) margin += truth[j] * features[i * s + j];
        labels[i] = rng.uniform01() < 1.0 / (1.0 + std::exp(-margin)) ? 1.0 : -1.0;
    }
    return LabeledDataset(std::move(features), std::move(labels), s, 1.0);
}

// Elastic net used with the built-in instance; its ridge part clears the
// strong-convexity floor for every epsilon >= 0.5 at n = 200 without
// augmentation.
inline ElasticNetSpec builtin_compare_enet() { return ElasticNetSpec{0.05, 0.5}; }

}  // namespace dperm
