#include "doctest.h"

#include <cmath>
#include <optional>
#include <vector>

#include "dperm/mechanism.hpp"
#include "dperm/objective.hpp"
#include "dperm/rng.hpp"
#include "dperm/solver.hpp"
#include "support/oracles.hpp"

using namespace dperm;

namespace {

// 0.5 |theta - a|_2^2 plus an optional l1 weight; the simplest model obeying
// the solver's objective interface.
struct QuadraticModel {
    std::vector<double> a;
    double l1{0.0};

    std::size_t dim() const { return a.size(); }
    double l1_weight() const { return l1; }
    double mu() const { return 1.0; }
    double smooth_lipschitz() const { return 1.0; }

    double smooth_value(std::span<const double> theta) const {
        double sum = 0.0;
        for (std::size_t j = 0; j < theta.size(); ++j) {
            const double d = theta[j] - a[j];
            sum += 0.5 * d * d;
        }
        return sum;
    }

    void smooth_grad(std::span<const double> theta, std::span<double> out) const {
        for (std::size_t j = 0; j < theta.size(); ++j) out[j] = theta[j] - a[j];
    }

    double value(std::span<const double> theta) const {
        double l1_norm = 0.0;
        for (double v : theta) l1_norm += std::abs(v);
        return smooth_value(theta) + l1 * l1_norm;
    }
};

LabeledDataset tiny_dataset(std::size_t n, std::size_t s, std::uint64_t seed) {
    Rng rng(seed);
    std::vector<double> features(n * s);
    std::vector<double> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
        double norm = 0.0;
        for (std::size_t j = 0; j < s; ++j) {
            features[i * s + j] = rng.uniform(-1.0, 1.0);
            norm += std::abs(features[i * s + j]);
        }
        for (std::size_t j = 0; j < s; ++j) features[i * s + j] /= std::max(1.0, norm);
        labels[i] = rng.bernoulli(0.5) ? 1.0 : -1.0;
    }
    return LabeledDataset(std::move(features), std::move(labels), s, 1.0);
}

}  // namespace

TEST_CASE("prox_l1 closed form") {
    const std::vector<double> v{3.0, -0.5};
    CHECK(prox_l1(v, 0.0) == v);                              // identity at t = 0
    const std::vector<double> shrunk = prox_l1(v, 1.0);
    CHECK(shrunk[0] == doctest::Approx(2.0));
    CHECK(shrunk[1] == 0.0);
    const std::vector<double> wiped = prox_l1(v, 3.0);        // |v|_inf <= t
    CHECK(wiped == std::vector<double>{0.0, 0.0});
    CHECK_THROWS_AS(prox_l1(v, -1.0), schema_error);
}

TEST_CASE("quadratic objective is minimized at its center") {
    const QuadraticModel model{{1.5, -2.0, 0.25}, 0.0};
    const SolverResult result = minimize(model);
    REQUIRE(result.converged);
    for (std::size_t j = 0; j < 3; ++j) {
        CHECK(result.theta[j] == doctest::Approx(model.a[j]).epsilon(1e-8));
    }
}

TEST_CASE("quadratic plus l1 soft-thresholds the center") {
    const QuadraticModel model{{1.5, -0.2, 0.6}, 0.5};
    const SolverResult result = minimize(model);
    REQUIRE(result.converged);
    CHECK(result.theta[0] == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(result.theta[1] == 0.0);
    CHECK(result.theta[2] == doctest::Approx(0.1).epsilon(1e-7));
}

TEST_CASE("1-D logistic ridge matches a dense grid-search oracle") {
    const std::vector<double> features{1.0, 1.0, 1.0, 1.0};
    const std::vector<double> labels{1.0, 1.0, -1.0, 1.0};
    const LabeledDataset data(features, labels, 1, 1.0);
    const Objective objective =
        build_objective(data, ElasticNetSpec{0.5, 0.0}, 1.0, 2.0, std::nullopt, 0.0);
    const SolverResult result = minimize(objective);
    REQUIRE(result.converged);

    oracles::NaiveInstance instance;
    for (std::size_t i = 0; i < 4; ++i) {
        instance.rows.push_back({features[i]});
        instance.labels.push_back(labels[i]);
    }
    instance.ridge = 0.5;
    const std::vector<double> oracle = oracles::grid_search_1d(instance, -3.0, 3.0, 1e-4);
    CHECK(std::abs(result.theta[0] - oracle[0]) <= 1e-3);
}

TEST_CASE("strong enough l1 weight yields the exact zero vector") {
    const LabeledDataset data = tiny_dataset(12, 3, 6);
    // |grad of smooth part at 0|_inf <= kappa / 2 = 0.5, so lambda*alpha = 0.6 wins.
    const Objective objective =
        build_objective(data, ElasticNetSpec{1.2, 0.5}, 1.0, 2.0, std::nullopt, 0.0);
    const SolverResult result = minimize(objective);
    REQUIRE(result.converged);
    for (double v : result.theta) CHECK(v == 0.0);
    CHECK(result.iterations == 1);
}

TEST_CASE("objective decreases monotonically with restart enabled") {
    const LabeledDataset data = tiny_dataset(25, 4, 7);
    Rng rng(8);
    NoiseDraw noise = sample_b1(4, rng);
    const Objective objective =
        build_objective(data, ElasticNetSpec{0.05, 0.3}, 1.0, 2.0, noise, 0.08);
    // minimize() is deterministic, so truncated runs trace the same trajectory.
    double previous = std::numeric_limits<double>::infinity();
    for (std::size_t iters = 1; iters <= 40; ++iters) {
        SolverConfig config;
        config.max_iter = iters;
        config.tol = 1e-16;  // never converge early
        const SolverResult result = minimize(objective, config);
        CHECK(result.final_objective <= previous + 1e-12);
        previous = result.final_objective;
    }
}

TEST_CASE("returned iterate carries a subgradient optimality certificate") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const LabeledDataset data = tiny_dataset(20, 3, 100 + seed);
        Rng rng(seed);
        NoiseDraw noise = sample_b2(3, rng);
        const Objective objective =
            build_objective(data, ElasticNetSpec{0.2, 0.4}, 1.0, 2.0, noise, 0.1);
        SolverConfig config;
        const SolverResult result = minimize(objective, config);
        REQUIRE(result.converged);
        std::vector<double> grad(3);
        objective.smooth_grad(result.theta, grad);
        CHECK(kkt_residual_inf(grad, result.theta, objective.l1_weight()) <= 10.0 * config.tol);
    }
}

TEST_CASE("non-convergence reports the best iterate with converged = false") {
    const LabeledDataset data = tiny_dataset(12, 3, 9);
    const Objective objective =
        build_objective(data, ElasticNetSpec{0.05, 0.5}, 1.0, 2.0, std::nullopt, 0.0);
    SolverConfig config;
    config.max_iter = 2;
    const SolverResult result = minimize(objective, config);
    CHECK_FALSE(result.converged);
    CHECK(result.iterations == 2);
    CHECK(result.theta.size() == 3);
}

TEST_CASE("one-record swaps move the minimizer by at most 2 gamma / (n c_min)") {
    // Drift bound for neighboring training sets, with the regularizer's
    // strong convexity as the modulus; gamma = kappa = 1 after normalization.
    Rng rng(2024);
    const std::size_t n = 25;
    const std::size_t s = 3;
    const double ridge = 0.3;
    for (int trial = 0; trial < 12; ++trial) {
        const LabeledDataset data = tiny_dataset(n, s, 300 + trial);
        NoiseDraw noise = sample_b1(s, rng);
        const ElasticNetSpec enet{ridge / 0.7, 0.3};
        const Objective objective = build_objective(data, enet, 1.0, 2.0, noise, 0.0);

        std::vector<double> swapped_row(s);
        double norm = 0.0;
        for (double& v : swapped_row) {
            v = rng.uniform(-1.0, 1.0);
            norm += std::abs(v);
        }
        for (double& v : swapped_row) v /= std::max(1.0, norm);
        const LabeledDataset neighbor =
            data.replaced(rng.uniform_index(n), swapped_row, rng.bernoulli(0.5) ? 1.0 : -1.0);
        const Objective neighbor_objective = build_objective(neighbor, enet, 1.0, 2.0, noise, 0.0);

        const SolverResult a = minimize(objective);
        const SolverResult b = minimize(neighbor_objective);
        REQUIRE(a.converged);
        REQUIRE(b.converged);
        double dist_sq = 0.0;
        for (std::size_t j = 0; j < s; ++j) {
            const double d = a.theta[j] - b.theta[j];
            dist_sq += d * d;
        }
        const double bound = 2.0 * 1.0 / (static_cast<double>(n) * enet.ridge());
        CHECK(std::sqrt(dist_sq) <= bound + 1e-6);
    }
}
