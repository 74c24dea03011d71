#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "dperm/dataset.hpp"
#include "dperm/errors.hpp"
#include "dperm/noise.hpp"

namespace dperm {

// Elastic-net penalty (lambda(1-alpha)/2) |theta|_2^2 + lambda alpha |theta|_1.
// The smooth (ridge) part contributes lambda(1-alpha) of strong convexity.
struct ElasticNetSpec {
    double lambda{0.0};
    double alpha{0.0};

    double ridge() const noexcept { return lambda * (1.0 - alpha); }
    double l1() const noexcept { return lambda * alpha; }

    void validate() const {
        if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
            throw schema_error("elastic net: lambda must be a finite nonnegative real");
        }
        if (!(alpha >= 0.0) || !(alpha < 1.0)) {
            throw schema_error("elastic net: alpha must lie in [0, 1)");
        }
    }
};

// log(1 + exp(-margin)), split at 0 so neither branch can overflow.
inline double logistic_loss_margin(double margin) {
    if (margin >= 0.0) return std::log1p(std::exp(-margin));
    return -margin + std::log1p(std::exp(margin));
}

// d/dmargin of the above: -1 / (1 + exp(margin)).
inline double logistic_margin_slope(double margin) {
    if (margin >= 0.0) {
        const double e = std::exp(-margin);
        return -e / (1.0 + e);
    }
    return -1.0 / (1.0 + std::exp(margin));
}

inline double dot(std::span<const double> a, std::span<const double> b) {
    double sum = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
    return sum;
}

inline double logistic_loss(std::span<const double> theta, std::span<const double> x,
                            double y) {
    if (theta.size() != x.size()) throw schema_error("logistic_loss: dimension mismatch");
    return logistic_loss_margin(y * dot(theta, x));
}

inline std::vector<double> logistic_grad(std::span<const double> theta,
                                         std::span<const double> x, double y) {
    if (theta.size() != x.size()) throw schema_error("logistic_grad: dimension mismatch");
    const double slope = logistic_margin_slope(y * dot(theta, x));
    std::vector<double> grad(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) grad[i] = slope * y * x[i];
    return grad;
}

inline double enet_penalty(std::span<const double> theta, const ElasticNetSpec& spec) {
    spec.validate();
    double l2_sq = 0.0;
    double l1 = 0.0;
    for (double v : theta) {
        l2_sq += v * v;
        l1 += std::abs(v);
    }
    return 0.5 * spec.ridge() * l2_sq + spec.l1() * l1;
}

// Training objective: mean logistic loss + elastic net + augment * |theta|_2^2
// + linear^T theta, where linear = (phi / (epsilon n)) b when a noise draw is
// attached and zero otherwise. The smooth part (everything except the l1 term)
// is (ridge + 2 * augment)-strongly convex.
class Objective {
public:
    Objective(const LabeledDataset& data, ElasticNetSpec enet, double augment,
              std::vector<double> linear)
        : data_(&data), enet_(enet), augment_(augment), linear_(std::move(linear)) {
        enet_.validate();
        if (!(augment_ >= 0.0)) throw schema_error("objective: augment must be >= 0");
        if (!linear_.empty() && linear_.size() != data.dim()) {
            throw schema_error("objective: noise dimension mismatch");
        }
    }

    const LabeledDataset& data() const noexcept { return *data_; }
    const ElasticNetSpec& enet() const noexcept { return enet_; }
    double augment() const noexcept { return augment_; }
    const std::vector<double>& linear_term() const noexcept { return linear_; }

    std::size_t dim() const noexcept { return data_->dim(); }
    double l1_weight() const noexcept { return enet_.l1(); }

    // Strong convexity of the smooth part.
    double mu() const noexcept { return enet_.ridge() + 2.0 * augment_; }

    // Gradient Lipschitz bound of the smooth part; each record contributes at
    // most kappa^2 / 4 through the logistic Hessian.
    double smooth_lipschitz() const noexcept {
        const double kappa = data_->kappa();
        return 0.25 * kappa * kappa + mu();
    }

    double smooth_value(std::span<const double> theta) const {
        if (theta.size() != dim()) throw schema_error("objective: dimension mismatch");
        double loss = 0.0;
        for (std::size_t i = 0; i < data_->n(); ++i) {
            loss += logistic_loss_margin(data_->label(i) * dot(theta, data_->row(i)));
        }
        loss /= static_cast<double>(data_->n());
        double l2_sq = 0.0;
        for (double v : theta) l2_sq += v * v;
        double value = loss + (0.5 * enet_.ridge() + augment_) * l2_sq;
        if (!linear_.empty()) value += dot(theta, linear_);
        return value;
    }

    void smooth_grad(std::span<const double> theta, std::span<double> out) const {
        if (theta.size() != dim() || out.size() != dim()) {
            throw schema_error("objective: dimension mismatch");
        }
        std::fill(out.begin(), out.end(), 0.0);
        for (std::size_t i = 0; i < data_->n(); ++i) {
            const auto x = data_->row(i);
            const double y = data_->label(i);
            const double slope = logistic_margin_slope(y * dot(theta, x));
            const double factor = slope * y / static_cast<double>(data_->n());
            for (std::size_t j = 0; j < out.size(); ++j) out[j] += factor * x[j];
        }
        const double ridge_coef = enet_.ridge() + 2.0 * augment_;
        for (std::size_t j = 0; j < out.size(); ++j) {
            out[j] += ridge_coef * theta[j];
            if (!linear_.empty()) out[j] += linear_[j];
        }
    }

    double value(std::span<const double> theta) const {
        double l1 = 0.0;
        for (double v : theta) l1 += std::abs(v);
        return smooth_value(theta) + l1_weight() * l1;
    }

private:
    const LabeledDataset* data_;
    ElasticNetSpec enet_;
    double augment_;
    std::vector<double> linear_;
};

// Assembles the (optionally perturbed) objective. Requires phi >= 2 kappa and
// epsilon > 0; the augmentation coefficient is max{0, c_star - ridge} / 2 so
// the smooth part is at least max{ridge, c_star}-strongly convex.
inline Objective build_objective(const LabeledDataset& dataset, const ElasticNetSpec& enet,
                                 double epsilon, double phi,
                                 const std::optional<NoiseDraw>& noise, double c_star) {
    enet.validate();
    if (!dataset.certified()) {
        throw schema_error("build_objective: dataset has no certified row-norm bound");
    }
    if (!(epsilon > 0.0)) throw privacy_error("epsilon", "epsilon must be positive");
    if (!(phi >= 2.0 * dataset.kappa())) {
        throw privacy_error("phi", "phi must be at least twice the row-norm bound");
    }
    if (!(c_star >= 0.0)) throw schema_error("build_objective: c_star must be >= 0");
    const double augment = std::max(0.0, c_star - enet.ridge()) / 2.0;
    std::vector<double> linear;
    if (noise.has_value()) {
        if (noise->dim() != dataset.dim()) {
            throw schema_error("build_objective: noise dimension mismatch");
        }
        const double coef = phi / (epsilon * static_cast<double>(dataset.n()));
        linear.resize(noise->dim());
        for (std::size_t i = 0; i < linear.size(); ++i) linear[i] = coef * noise->vector[i];
    }
    return Objective(dataset, enet, augment, std::move(linear));
}

}  // namespace dperm
