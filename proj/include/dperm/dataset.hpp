#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dperm/errors.hpp"
#include "dperm/rng.hpp"

namespace dperm {

// Row-major feature matrix with +/-1 labels and a certified row-norm bound.
// kappa > 0 certifies |row|_1 <= kappa (and therefore |row|_2 <= kappa) for
// every row; kappa == 0 marks an uncertified dataset, which the mechanism and
// the loss-constant accessors refuse to touch.
class LabeledDataset {
public:
    LabeledDataset(std::vector<double> features, std::vector<double> labels,
                   std::size_t dim, double kappa, double row_scale = 1.0)
        : features_(std::move(features)),
          labels_(std::move(labels)),
          dim_(dim),
          kappa_(kappa),
          row_scale_(row_scale) {
        if (dim_ == 0) throw schema_error("dataset: dimension must be >= 1");
        if (labels_.empty()) throw schema_error("dataset: needs at least one record");
        if (features_.size() != labels_.size() * dim_) {
            throw schema_error("dataset: feature matrix shape does not match labels");
        }
        for (double y : labels_) {
            if (y != 1.0 && y != -1.0) {
                throw schema_error("dataset: labels must be exactly +1 or -1");
            }
        }
        if (kappa_ > 0.0) {
            const double slack = kappa_ * 1e-12;
            for (std::size_t i = 0; i < n(); ++i) {
                if (row_norm1(i) > kappa_ + slack) {
                    throw schema_error("dataset: row " + std::to_string(i) +
                                       " violates the certified norm bound");
                }
            }
        }
    }

    static LabeledDataset uncertified(std::vector<double> features,
                                      std::vector<double> labels, std::size_t dim) {
        return LabeledDataset(std::move(features), std::move(labels), dim, 0.0);
    }

    std::size_t n() const noexcept { return labels_.size(); }
    std::size_t dim() const noexcept { return dim_; }
    double kappa() const noexcept { return kappa_; }
    bool certified() const noexcept { return kappa_ > 0.0; }

    // Multiplier that was applied to raw rows; coefficients fitted on this
    // dataset map back to the raw feature scale as theta_raw = row_scale * theta.
    double row_scale() const noexcept { return row_scale_; }

    std::span<const double> row(std::size_t i) const {
        return {features_.data() + i * dim_, dim_};
    }

    double label(std::size_t i) const { return labels_[i]; }

    double row_norm1(std::size_t i) const {
        double sum = 0.0;
        for (double v : row(i)) sum += std::abs(v);
        return sum;
    }

    // Neighboring dataset: record i swapped for (x, y). Same size, same
    // certificate; the replacement row must honor the kappa bound.
    LabeledDataset replaced(std::size_t i, std::span<const double> x, double y) const {
        if (i >= n()) throw schema_error("replaced: record index out of range");
        if (x.size() != dim_) throw schema_error("replaced: dimension mismatch");
        std::vector<double> features = features_;
        std::vector<double> labels = labels_;
        std::copy(x.begin(), x.end(), features.begin() + static_cast<std::ptrdiff_t>(i * dim_));
        labels[i] = y;
        return LabeledDataset(std::move(features), std::move(labels), dim_, kappa_, row_scale_);
    }

private:
    std::vector<double> features_;
    std::vector<double> labels_;
    std::size_t dim_;
    double kappa_;
    double row_scale_;
};

struct RowNormalization {
    std::vector<double> features;
    std::size_t dim{0};
    double scale{1.0};  // multiplier applied to every row
    double kappa{1.0};
};

// Rescales all rows by 1 / max(1, max_i |row_i|_1) so kappa = 1 certifies both
// the l1 and l2 row-norm bounds. Rows already inside the unit l1 ball pass
// through unchanged.
inline RowNormalization normalize_rows(std::vector<double> raw, std::size_t dim) {
    if (dim == 0 || raw.empty()) throw schema_error("normalize_rows: empty matrix");
    if (raw.size() % dim != 0) {
        throw schema_error("normalize_rows: matrix size is not a multiple of the dimension");
    }
    double max_norm = 0.0;
    double row_sum = 0.0;
    for (std::size_t i = 0; i < raw.size(); ++i) {
        if (!std::isfinite(raw[i])) throw schema_error("normalize_rows: non-finite entry");
        row_sum += std::abs(raw[i]);
        if ((i + 1) % dim == 0) {
            max_norm = std::max(max_norm, row_sum);
            row_sum = 0.0;
        }
    }
    RowNormalization out;
    out.dim = dim;
    out.scale = 1.0 / std::max(1.0, max_norm);
    out.kappa = 1.0;
    if (out.scale != 1.0) {
        for (double& v : raw) v *= out.scale;
    }
    out.features = std::move(raw);
    return out;
}

inline LabeledDataset make_normalized_dataset(std::vector<double> raw_features,
                                              std::vector<double> labels,
                                              std::size_t dim) {
    RowNormalization norm = normalize_rows(std::move(raw_features), dim);
    return LabeledDataset(std::move(norm.features), std::move(labels), dim, norm.kappa,
                          norm.scale);
}

struct LossConstants {
    double kappa;  // row-norm bound, also the loss Lipschitz constant gamma
    double gamma;
    double c;  // Hessian max-singular-value bound, kappa^2
};

inline LossConstants loss_constants(const LabeledDataset& dataset) {
    if (!dataset.certified()) {
        throw schema_error("loss_constants: dataset has no certified row-norm bound");
    }
    const double kappa = dataset.kappa();
    return LossConstants{kappa, kappa, kappa * kappa};
}

// Seeded-shuffle split; the validation part receives round(n * fraction)
// records, at least 1 on each side.
inline std::pair<LabeledDataset, LabeledDataset> split_dataset(const LabeledDataset& data,
                                                               double validation_fraction,
                                                               std::uint64_t seed) {
    if (!(validation_fraction > 0.0) || !(validation_fraction < 1.0)) {
        throw schema_error("split_dataset: validation fraction must lie in (0, 1)");
    }
    const std::size_t n = data.n();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(seed);
    for (std::size_t i = n; i > 1; --i) {  // Fisher-Yates on the explicit stream
        std::swap(order[i - 1], order[rng.uniform_index(i)]);
    }
    std::size_t m = static_cast<std::size_t>(std::lround(validation_fraction * static_cast<double>(n)));
    m = std::clamp<std::size_t>(m, 1, n - 1);

    const auto gather = [&](std::size_t begin, std::size_t end) {
        std::vector<double> features;
        std::vector<double> labels;
        features.reserve((end - begin) * data.dim());
        labels.reserve(end - begin);
        for (std::size_t k = begin; k < end; ++k) {
            const auto r = data.row(order[k]);
            features.insert(features.end(), r.begin(), r.end());
            labels.push_back(data.label(order[k]));
        }
        return LabeledDataset(std::move(features), std::move(labels), data.dim(),
                              data.kappa(), data.row_scale());
    };
    return {gather(m, n), gather(0, m)};
}

}  // namespace dperm
