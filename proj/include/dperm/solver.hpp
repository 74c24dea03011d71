#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "dperm/errors.hpp"

namespace dperm {

struct SolverConfig {
    // Solver error has to sit far below the perturbation-noise scale, so the
    // defaults are tight; utility measurements then reflect the mechanism.
    double tol{1e-9};
    std::size_t max_iter{50000};
    bool restart{true};

    void validate() const {
        if (!(tol > 0.0)) throw schema_error("solver: tol must be positive");
        if (max_iter == 0) throw schema_error("solver: max_iter must be >= 1");
    }
};

struct SolverResult {
    std::vector<double> theta;
    std::size_t iterations{0};
    double final_objective{0.0};
    bool converged{false};
};

// Coordinate-wise soft threshold sign(v_i) * max(|v_i| - t, 0).
inline std::vector<double> prox_l1(std::span<const double> v, double t) {
    if (!(t >= 0.0)) throw schema_error("prox_l1: threshold must be >= 0");
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double mag = std::abs(v[i]) - t;
        out[i] = mag > 0.0 ? (v[i] > 0.0 ? mag : -mag) : 0.0;
    }
    return out;
}

// Sup-norm of the minimal subgradient of smooth + w |.|_1 at theta, given the
// smooth gradient: the optimality certificate driven to 10 * tol at return.
inline double kkt_residual_inf(std::span<const double> grad, std::span<const double> theta,
                               double l1_weight) {
    double worst = 0.0;
    for (std::size_t j = 0; j < grad.size(); ++j) {
        double r;
        if (theta[j] != 0.0) {
            r = std::abs(grad[j] + (theta[j] > 0.0 ? l1_weight : -l1_weight));
        } else {
            r = std::max(0.0, std::abs(grad[j]) - l1_weight);
        }
        worst = std::max(worst, r);
    }
    return worst;
}

namespace detail {

// One backtracked proximal step from `point`: halve the step until the local
// quadratic model majorizes the smooth part. The comparison carries an fp
// slack so rounding noise near the optimum cannot inflate lip without bound.
template <class Obj>
double prox_step(const Obj& objective, const std::vector<double>& point, double& lip,
                 std::vector<double>& grad, std::vector<double>& scratch,
                 std::vector<double>& candidate) {
    const std::size_t s = point.size();
    const double w = objective.l1_weight();
    objective.smooth_grad(point, grad);
    const double f_point = objective.smooth_value(point);
    for (;;) {
        const double step = 1.0 / lip;
        for (std::size_t j = 0; j < s; ++j) scratch[j] = point[j] - step * grad[j];
        candidate = prox_l1(scratch, w * step);
        const double f_candidate = objective.smooth_value(candidate);
        double quad = f_point;
        for (std::size_t j = 0; j < s; ++j) {
            const double d = candidate[j] - point[j];
            quad += grad[j] * d + 0.5 * lip * d * d;
        }
        if (f_candidate <= quad + 1e-12 * std::max(1.0, std::abs(quad))) {
            double l1 = 0.0;
            for (double v : candidate) l1 += std::abs(v);
            return f_candidate + w * l1;
        }
        lip *= 2.0;
        if (!(lip < 1e300)) throw solver_error("line search diverged (non-finite objective?)");
    }
}

}  // namespace detail

// Accelerated proximal gradient (FISTA-style) with backtracking line search,
// initialized at step 1/smooth_lipschitz(). With positive strong convexity mu
// the extrapolation uses the constant momentum (sqrt(L)-sqrt(mu))/(sqrt(L)+
// sqrt(mu)), which converges linearly; otherwise the classic FISTA sequence.
// Adaptive restart (on by default) falls back to a plain step from the last
// iterate whenever extrapolation would increase the objective, which keeps the
// accepted values non-increasing. The objective type must expose dim(),
// smooth_value(), smooth_grad(), l1_weight(), value(), mu(), and
// smooth_lipschitz(). Deterministic: always starts at theta = 0, the
// minimizer of the regularizer.
template <class Obj>
SolverResult minimize(const Obj& objective, const SolverConfig& config = {}) {
    config.validate();
    const std::size_t s = objective.dim();
    const double w = objective.l1_weight();
    const double mu = objective.mu();

    std::vector<double> theta(s, 0.0);
    std::vector<double> y = theta;
    std::vector<double> grad(s), candidate(s), scratch(s);

    double lip = std::max(objective.smooth_lipschitz(), 1e-12);
    double fista_t = 1.0;
    double value_theta = objective.value(theta);

    SolverResult result;
    for (std::size_t iter = 1; iter <= config.max_iter; ++iter) {
        result.iterations = iter;

        double value_candidate = detail::prox_step(objective, y, lip, grad, scratch, candidate);
        if (config.restart && value_candidate > value_theta && y != theta) {
            fista_t = 1.0;
            value_candidate = detail::prox_step(objective, theta, lip, grad, scratch, candidate);
        }

        double beta;
        if (mu > 0.0) {
            const double root_ratio = std::sqrt(mu / lip);
            beta = (1.0 - root_ratio) / (1.0 + root_ratio);
        } else {
            const double next_t = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * fista_t * fista_t));
            beta = (fista_t - 1.0) / next_t;
            fista_t = next_t;
        }
        for (std::size_t j = 0; j < s; ++j) {
            y[j] = candidate[j] + beta * (candidate[j] - theta[j]);
        }
        const double change = std::abs(value_theta - value_candidate) /
                              std::max(1.0, std::abs(value_candidate));
        theta.swap(candidate);
        value_theta = value_candidate;

        if (change <= config.tol) {
            objective.smooth_grad(theta, grad);
            if (kkt_residual_inf(grad, theta, w) <= 10.0 * config.tol) {
                result.converged = true;
                break;
            }
        }
    }

    result.theta = std::move(theta);
    result.final_objective = value_theta;
    return result;
}

}  // namespace dperm
