#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dperm/dataset.hpp"
#include "dperm/errors.hpp"
#include "dperm/noise.hpp"
#include "dperm/objective.hpp"
#include "dperm/solver.hpp"

namespace dperm {

// Smallest strong-convexity constant the release mechanism accepts:
// c / (n (e^{epsilon/4} - 1)).
inline double min_strong_convexity(double c, std::size_t n, double epsilon) {
    if (!(c > 0.0)) throw schema_error("min_strong_convexity: c must be positive");
    if (n == 0) throw schema_error("min_strong_convexity: n must be >= 1");
    if (!(epsilon > 0.0)) throw schema_error("min_strong_convexity: epsilon must be positive");
    return c / (static_cast<double>(n) * std::expm1(epsilon / 4.0));
}

struct ValidatedParams {
    double kappa{0.0};
    double c{0.0};       // Hessian singular-value bound, kappa^2
    double c_star{0.0};  // required strong convexity for this (n, epsilon)
    double c_min{0.0};   // strong convexity supplied by the elastic net alone
    double augment{0.0}; // coefficient of the |theta|_2^2 top-up term
    double phi{0.0};
    double epsilon{0.0};

    double effective_strong_convexity() const noexcept { return c_min + 2.0 * augment; }
};

// Checks the release requirements: epsilon > 0, phi >= 2 kappa, and
// ridge + 2 * augment >= c_star. Each violation throws a privacy_error with a
// distinct requirement tag so callers cannot silently weaken privacy. When
// allow_augment is set (the default) an elastic net whose ridge part falls
// short is topped up with the quadratic augmentation instead of erroring.
inline ValidatedParams validate(const LabeledDataset& dataset, const ElasticNetSpec& enet,
                                double epsilon, double phi, bool allow_augment = true) {
    enet.validate();
    if (!dataset.certified()) {
        throw schema_error("validate: dataset has no certified row-norm bound");
    }
    if (!(epsilon > 0.0)) {
        throw privacy_error("epsilon", "privacy budget epsilon must be positive");
    }
    ValidatedParams params;
    params.kappa = dataset.kappa();
    params.c = params.kappa * params.kappa;
    params.epsilon = epsilon;
    params.phi = phi;
    if (!(phi >= 2.0 * params.kappa)) {
        throw privacy_error("phi", "phi must be at least twice the row-norm bound (phi >= 2 kappa)");
    }
    params.c_star = min_strong_convexity(params.c, dataset.n(), epsilon);
    params.c_min = enet.ridge();
    if (params.c_min >= params.c_star) {
        params.augment = 0.0;
    } else if (allow_augment) {
        params.augment = 0.5 * (params.c_star - params.c_min);
    } else {
        throw privacy_error("strong_convexity",
                            "elastic-net ridge term " + std::to_string(params.c_min) +
                                " is below the required strong convexity " +
                                std::to_string(params.c_star) +
                                " and augmentation is disabled");
    }
    return params;
}

// Release record: everything needed to re-run the release and reproduce theta
// bit-exactly (given the dataset).
struct PrivateFit {
    std::vector<double> theta;
    double epsilon{0.0};
    ElasticNetSpec enet;
    NoiseFamily family{NoiseFamily::B1};
    std::uint64_t seed{0};
    SolverResult solver;
    double phi{0.0};
    double augment{0.0};
    SolverConfig solver_config;
};

// The full release: validate, sample the perturbation, minimize. phi is fixed
// at its minimum 2 kappa, the smallest noise scale the mechanism permits.
// Non-convergence is a hard error; an unconverged release voids the analysis.
inline PrivateFit fit_private(const LabeledDataset& dataset, const ElasticNetSpec& enet,
                              double epsilon, NoiseFamily family, std::uint64_t seed,
                              const SolverConfig& config = {}, bool allow_augment = true) {
    const ValidatedParams params = validate(dataset, enet, epsilon, 2.0 * dataset.kappa(),
                                            allow_augment);
    Rng rng(seed);
    NoiseDraw noise = sample_noise(family, dataset.dim(), rng);
    Objective objective = build_objective(dataset, enet, epsilon, params.phi, noise,
                                          params.c_star);
    SolverResult solved = minimize(objective, config);
    if (!solved.converged) {
        throw solver_error("private fit did not converge within " +
                           std::to_string(config.max_iter) + " iterations");
    }
    PrivateFit fit;
    fit.theta = solved.theta;
    fit.epsilon = epsilon;
    fit.enet = enet;
    fit.family = family;
    fit.seed = seed;
    fit.solver = std::move(solved);
    fit.phi = params.phi;
    fit.augment = params.augment;
    fit.solver_config = config;
    return fit;
}

// Same objective with the noise term zeroed; used for baselines and for the
// unperturbed minimizer in excess-objective measurements. Not private.
inline SolverResult fit_noiseless(const LabeledDataset& dataset, const ElasticNetSpec& enet,
                                  double c_star = 0.0, const SolverConfig& config = {}) {
    Objective objective = build_objective(dataset, enet, 1.0, 2.0 * dataset.kappa(),
                                          std::nullopt, c_star);
    SolverResult solved = minimize(objective, config);
    if (!solved.converged) {
        throw solver_error("noiseless fit did not converge within " +
                           std::to_string(config.max_iter) + " iterations");
    }
    return solved;
}

// Replicate-indexed sample of J(theta_b) - J(theta*), the excess of the
// unperturbed objective at the perturbed minimizer. Replicate i uses the
// derived stream derive_seed(seed, i), so replicates are reproducible and
// order independent.
inline std::vector<double> excess_objective(const LabeledDataset& dataset,
                                            const ElasticNetSpec& enet, double epsilon,
                                            NoiseFamily family, std::size_t replicates,
                                            std::uint64_t seed,
                                            const SolverConfig& config = {}) {
    if (replicates == 0) throw schema_error("excess_objective: replicates must be >= 1");
    const ValidatedParams params = validate(dataset, enet, epsilon, 2.0 * dataset.kappa());
    Objective unperturbed = build_objective(dataset, enet, epsilon, params.phi, std::nullopt,
                                            params.c_star);
    SolverResult base = minimize(unperturbed, config);
    if (!base.converged) throw solver_error("excess_objective: baseline solve did not converge");
    const double base_value = unperturbed.value(base.theta);

    std::vector<double> excess(replicates);
    for (std::size_t i = 0; i < replicates; ++i) {
        Rng rng(derive_seed(seed, i));
        NoiseDraw noise = sample_noise(family, dataset.dim(), rng);
        Objective perturbed = build_objective(dataset, enet, epsilon, params.phi, noise,
                                              params.c_star);
        SolverResult solved = minimize(perturbed, config);
        if (!solved.converged) {
            throw solver_error("excess_objective: replicate " + std::to_string(i) +
                               " did not converge");
        }
        excess[i] = unperturbed.value(solved.theta) - base_value;
    }
    return excess;
}

}  // namespace dperm
