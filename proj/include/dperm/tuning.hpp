#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "dperm/dataset.hpp"
#include "dperm/errors.hpp"
#include "dperm/mechanism.hpp"
#include "dperm/noise.hpp"
#include "dperm/objective.hpp"

namespace dperm {

// Candidate regularizers: a lambda grid at one shared sparsity parameter.
struct CandidateSet {
    std::vector<ElasticNetSpec> candidates;
    double alpha{0.0};

    std::size_t size() const noexcept { return candidates.size(); }

    void validate() const {
        if (candidates.empty()) throw schema_error("candidate set: needs at least one candidate");
        for (const auto& cand : candidates) {
            cand.validate();
            if (cand.alpha != alpha) {
                throw schema_error("candidate set: all candidates must share alpha");
            }
        }
    }
};

// Default grid: multiples of the smallest admissible lambda, convex_min/(1-alpha).
inline CandidateSet lambda_grid(double convex_min, double alpha,
                                std::span<const double> multipliers) {
    if (!(convex_min > 0.0)) throw schema_error("lambda_grid: convex_min must be positive");
    if (!(alpha >= 0.0) || !(alpha < 1.0)) throw schema_error("lambda_grid: alpha must lie in [0, 1)");
    if (multipliers.empty()) throw schema_error("lambda_grid: needs at least one multiplier");
    CandidateSet set;
    set.alpha = alpha;
    const double lambda_min = convex_min / (1.0 - alpha);
    for (double mult : multipliers) {
        if (!(mult >= 1.0)) {
            throw schema_error("lambda_grid: multipliers must be >= 1 so every candidate "
                               "meets the strong-convexity floor");
        }
        set.candidates.push_back(ElasticNetSpec{mult * lambda_min, alpha});
    }
    return set;
}

struct StabilityConstants {
    double beta1{0.0};  // training stability: |delta q| <= beta1 / n
    double beta2{0.0};  // validation stability: |delta q| <= beta2 / m, given |b|_2 <= xi
    double xi{0.0};
    double delta{0.0};
};

inline StabilityConstants stability_constants(double gamma, double kappa, double c_star,
                                              double c_min, double h_star, double phi,
                                              double epsilon, std::size_t n,
                                              NoiseFamily family, std::size_t s,
                                              std::size_t k, double delta) {
    if (!(gamma > 0.0) || !(kappa > 0.0)) {
        throw schema_error("stability_constants: gamma and kappa must be positive");
    }
    const double convexity = std::max(c_star, c_min);
    if (!(convexity > 0.0)) {
        throw schema_error("stability_constants: max{c_star, c_min} must be positive");
    }
    if (!(h_star >= 0.0)) throw schema_error("stability_constants: h_star must be >= 0");
    if (!(phi > 0.0) || !(epsilon > 0.0) || n == 0) {
        throw schema_error("stability_constants: phi, epsilon, n must be positive");
    }
    StabilityConstants out;
    out.delta = delta;
    out.xi = xi_bound(family, s, k, delta);
    out.beta1 = 2.0 * gamma * kappa / convexity;
    const double lipschitz_score =
        (kappa / convexity) * (gamma + phi * out.xi / (epsilon * static_cast<double>(n)));
    out.beta2 = std::min(h_star, lipschitz_score);
    return out;
}

// q(theta, V) = -(mean validation loss); higher is better.
inline double validation_score(std::span<const double> theta, const LabeledDataset& validation) {
    double total = 0.0;
    for (std::size_t i = 0; i < validation.n(); ++i) {
        total += logistic_loss(theta, validation.row(i), validation.label(i));
    }
    return -total / static_cast<double>(validation.n());
}

// Exponential-mechanism weights: p_i proportional to
// exp(epsilon_select * m * q_i / (2 beta2)), computed shift-invariantly.
inline std::vector<double> selection_probabilities(std::span<const double> scores,
                                                   std::size_t m, double epsilon_select,
                                                   double beta2) {
    if (scores.empty()) throw schema_error("selection_probabilities: no scores");
    if (m == 0) throw schema_error("selection_probabilities: m must be >= 1");
    if (!(epsilon_select > 0.0)) {
        throw privacy_error("epsilon_select", "selection budget must be positive");
    }
    if (!(beta2 > 0.0)) throw schema_error("selection_probabilities: beta2 must be positive");
    const double factor = epsilon_select * static_cast<double>(m) / (2.0 * beta2);
    const double top = *std::max_element(scores.begin(), scores.end());
    std::vector<double> probs(scores.size());
    double total = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        probs[i] = std::exp(factor * (scores[i] - top));
        total += probs[i];
    }
    for (double& p : probs) p /= total;
    return probs;
}

inline std::size_t draw_categorical(std::span<const double> probs, Rng& rng) {
    const double u = rng.uniform01();
    double cumulative = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        cumulative += probs[i];
        if (u < cumulative) return i;
    }
    return probs.size() - 1;
}

struct TuningResult {
    ElasticNetSpec selected;
    std::size_t selected_index{0};
    PrivateFit fit;
    std::vector<double> scores;
    std::vector<double> selection_probabilities;
    StabilityConstants stability;
};

// Fits every candidate privately on the training set (independent noise per
// candidate, derived seeds), scores each on the validation set, and draws the
// winner from the exponential-mechanism distribution. The training and
// selection budgets are separate knobs and are reported separately; this
// routine does not claim a single composed epsilon for the whole procedure.
inline TuningResult select_private(const CandidateSet& candidates, const LabeledDataset& train,
                                   const LabeledDataset& validation, double epsilon_train,
                                   double epsilon_select, NoiseFamily family, double delta,
                                   std::uint64_t seed, const SolverConfig& config = {}) {
    candidates.validate();
    if (train.dim() != validation.dim()) {
        throw schema_error("select_private: train/validation dimension mismatch");
    }
    if (train.kappa() != validation.kappa()) {
        throw schema_error("select_private: train/validation must share the norm certificate");
    }
    const LossConstants lc = loss_constants(train);
    const double c_star = min_strong_convexity(lc.c, train.n(), epsilon_train);
    double c_min = std::numeric_limits<double>::infinity();
    for (const auto& cand : candidates.candidates) {
        c_min = std::min(c_min, cand.ridge());
        if (cand.ridge() < c_star * (1.0 - 1e-12)) {
            throw privacy_error("lambda_min",
                                "candidate lambda below convex_min/(1-alpha): the whole "
                                "selection call is aborted to keep budget accounting defined");
        }
    }

    TuningResult result;
    result.scores.resize(candidates.size());
    std::vector<PrivateFit> fits;
    fits.reserve(candidates.size());
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        fits.push_back(fit_private(train, candidates.candidates[i], epsilon_train, family,
                                   derive_seed(seed, i + 1), config));
        result.scores[i] = validation_score(fits[i].theta, validation);
    }

    // Logistic loss is unbounded, so h* = +inf and beta2 always takes the
    // Lipschitz branch.
    result.stability = stability_constants(lc.gamma, lc.kappa, c_star, c_min,
                                           std::numeric_limits<double>::infinity(),
                                           2.0 * lc.kappa, epsilon_train, train.n(), family,
                                           train.dim(), candidates.size(), delta);
    result.selection_probabilities = selection_probabilities(
        result.scores, validation.n(), epsilon_select, result.stability.beta2);

    Rng selector(derive_seed(seed, 0));
    result.selected_index = draw_categorical(result.selection_probabilities, selector);
    result.selected = candidates.candidates[result.selected_index];
    result.fit = std::move(fits[result.selected_index]);
    return result;
}

}  // namespace dperm
