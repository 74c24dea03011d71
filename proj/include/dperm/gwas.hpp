#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dperm/dataset.hpp"
#include "dperm/errors.hpp"
#include "dperm/rng.hpp"

namespace dperm {

// Background minor-allele frequencies are drawn per SNP from this range;
// low == high pins them to one value.
struct MafRange {
    double low{0.05};
    double high{0.5};
};

struct CohortConfig {
    std::size_t n_cases{400};
    std::size_t n_controls{400};
    std::size_t p_snps{1000};
    double maf_causative{0.25};
    MafRange maf_background{};
    // Disease odds: odds_baseline * odds_x^X * odds_y^Y * odds_interaction^(X*Y)
    // over the two causative genotypes X, Y in {0, 1, 2}.
    double odds_baseline{0.64};
    double odds_x{0.91};
    double odds_y{0.91};
    double odds_interaction{2.73};
    std::size_t max_attempts{0};  // 0 -> 1000 * (n_cases + n_controls)

    std::size_t attempt_cap() const noexcept {
        return max_attempts > 0 ? max_attempts : 1000 * (n_cases + n_controls);
    }

    void validate() const {
        if (n_cases == 0 || n_controls == 0) {
            throw schema_error("cohort: case and control counts must be positive");
        }
        if (p_snps < 2) throw schema_error("cohort: needs at least two SNPs (the causative pair)");
        if (!(maf_causative > 0.0) || !(maf_causative <= 0.5)) {
            throw schema_error("cohort: causative MAF must lie in (0, 0.5]");
        }
        if (!(maf_background.low > 0.0) || !(maf_background.high <= 0.5) ||
            !(maf_background.low <= maf_background.high)) {
            throw schema_error("cohort: background MAF range must satisfy 0 < low <= high <= 0.5");
        }
        for (double odds : {odds_baseline, odds_x, odds_y, odds_interaction}) {
            if (!(odds > 0.0) || !std::isfinite(odds)) {
                throw schema_error("cohort: odds parameters must be positive reals");
            }
        }
    }
};

struct Cohort {
    std::size_t n{0};
    std::size_t p{0};
    std::vector<std::uint8_t> genotypes;  // n x p row-major, values in {0,1,2}
    std::vector<std::int8_t> phenotype;   // +1 case, -1 control
    // Present for generated cohorts; CSV imports carry no marker of which
    // SNPs were causative.
    std::optional<std::pair<std::size_t, std::size_t>> causative;

    std::uint8_t genotype(std::size_t individual, std::size_t snp) const {
        return genotypes[individual * p + snp];
    }
};

inline double disease_odds(const CohortConfig& config, unsigned x, unsigned y) {
    return config.odds_baseline * std::pow(config.odds_x, x) * std::pow(config.odds_y, y) *
           std::pow(config.odds_interaction, x * y);
}

inline double case_probability(const CohortConfig& config, unsigned x, unsigned y) {
    const double odds = disease_odds(config, x, y);
    return odds / (1.0 + odds);
}

// Multiplicative-effects generator. Draw order per seed: the causative index
// pair, then one background MAF per remaining SNP, then candidate individuals
// (all p genotypes as Binomial(2, MAF), then the phenotype) accepted while
// their case/control quota is open. Aborts if the quotas are not met within
// the attempt cap.
inline Cohort generate_cohort(const CohortConfig& config, std::uint64_t seed) {
    config.validate();
    Rng rng(seed);
    Cohort cohort;
    cohort.n = config.n_cases + config.n_controls;
    cohort.p = config.p_snps;
    cohort.genotypes.resize(cohort.n * cohort.p);
    cohort.phenotype.resize(cohort.n);

    const std::size_t causative_x = rng.uniform_index(config.p_snps);
    std::size_t causative_y = causative_x;
    while (causative_y == causative_x) causative_y = rng.uniform_index(config.p_snps);
    cohort.causative = {causative_x, causative_y};

    std::vector<double> maf(config.p_snps);
    for (std::size_t j = 0; j < config.p_snps; ++j) {
        if (j == causative_x || j == causative_y) {
            maf[j] = config.maf_causative;
        } else {
            maf[j] = rng.uniform(config.maf_background.low, config.maf_background.high);
        }
    }

    std::size_t cases_left = config.n_cases;
    std::size_t controls_left = config.n_controls;
    std::size_t filled = 0;
    std::vector<std::uint8_t> candidate(config.p_snps);
    for (std::size_t attempt = 0; cases_left + controls_left > 0; ++attempt) {
        if (attempt >= config.attempt_cap()) {
            throw schema_error("generate_cohort: case/control quota unreachable within " +
                               std::to_string(config.attempt_cap()) + " attempts");
        }
        for (std::size_t j = 0; j < config.p_snps; ++j) {
            candidate[j] = static_cast<std::uint8_t>(rng.bernoulli(maf[j])) +
                           static_cast<std::uint8_t>(rng.bernoulli(maf[j]));
        }
        const bool is_case =
            rng.bernoulli(case_probability(config, candidate[causative_x], candidate[causative_y]));
        if (is_case && cases_left == 0) continue;
        if (!is_case && controls_left == 0) continue;
        (is_case ? cases_left : controls_left) -= 1;
        std::copy(candidate.begin(), candidate.end(),
                  cohort.genotypes.begin() + static_cast<std::ptrdiff_t>(filled * cohort.p));
        cohort.phenotype[filled] = is_case ? 1 : -1;
        ++filled;
    }
    return cohort;
}

// Pearson chi-square over the 2x3 case/control x genotype table; genotype
// categories with zero column total drop out of the sum.
inline double chi2_stat(std::span<const std::uint8_t> snp_column,
                        std::span<const std::int8_t> phenotype) {
    if (snp_column.size() != phenotype.size() || snp_column.empty()) {
        throw schema_error("chi2_stat: column and phenotype lengths must match");
    }
    std::array<std::array<double, 3>, 2> observed{};  // [case/control][genotype]
    for (std::size_t i = 0; i < snp_column.size(); ++i) {
        if (snp_column[i] > 2) throw schema_error("chi2_stat: genotype outside {0,1,2}");
        const std::size_t row = phenotype[i] == 1 ? 0 : 1;
        observed[row][snp_column[i]] += 1.0;
    }
    const double cases = observed[0][0] + observed[0][1] + observed[0][2];
    const double controls = observed[1][0] + observed[1][1] + observed[1][2];
    if (cases == 0.0 || controls == 0.0) {
        throw schema_error("chi2_stat: phenotype is degenerate (single class)");
    }
    const double total = cases + controls;
    double stat = 0.0;
    for (std::size_t g = 0; g < 3; ++g) {
        const double column = observed[0][g] + observed[1][g];
        if (column == 0.0) continue;
        const double expected_case = cases * column / total;
        const double expected_control = controls * column / total;
        const double d_case = observed[0][g] - expected_case;
        const double d_control = observed[1][g] - expected_control;
        stat += d_case * d_case / expected_case + d_control * d_control / expected_control;
    }
    return stat;
}

inline double chi2_stat(const Cohort& cohort, std::size_t snp) {
    if (snp >= cohort.p) throw schema_error("chi2_stat: SNP index out of range");
    std::vector<std::uint8_t> column(cohort.n);
    for (std::size_t i = 0; i < cohort.n; ++i) column[i] = cohort.genotype(i, snp);
    return chi2_stat(column, cohort.phenotype);
}

// Indices of the top_m largest association statistics, statistic descending,
// ties broken toward the lower index.
inline std::vector<std::size_t> screen(const Cohort& cohort, std::size_t top_m) {
    if (top_m == 0) throw schema_error("screen: top_m must be >= 1");
    if (top_m > cohort.p) throw schema_error("screen: top_m exceeds the SNP count");
    std::vector<double> stats(cohort.p);
    for (std::size_t j = 0; j < cohort.p; ++j) stats[j] = chi2_stat(cohort, j);
    std::vector<std::size_t> order(cohort.p);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (stats[a] != stats[b]) return stats[a] > stats[b];
        return a < b;
    });
    order.resize(top_m);
    return order;
}

struct Term {
    enum class Kind : std::uint8_t { Main, Interaction };
    Kind kind{Kind::Main};
    std::size_t snp_a{0};
    std::size_t snp_b{0};  // == snp_a for main effects

    bool is_main() const noexcept { return kind == Kind::Main; }

    bool operator==(const Term&) const = default;

    std::string name() const {
        if (is_main()) return "snp_" + std::to_string(snp_a);
        return "snp_" + std::to_string(snp_a) + "*snp_" + std::to_string(snp_b);
    }
};

struct DesignMatrix {
    LabeledDataset dataset;        // column 0 is the intercept
    std::vector<Term> terms;       // terms[j] describes column j + 1
    std::vector<std::size_t> selected;
};

// Intercept + selected main effects + all pairwise interaction products, with
// genotypes mapped {0,1,2} -> {0, 0.5, 1} so every column lives in [0, 1];
// rows are then normalized to the kappa = 1 certificate.
inline DesignMatrix build_design(const Cohort& cohort, std::span<const std::size_t> selected) {
    if (selected.empty()) throw schema_error("build_design: no SNPs selected");
    for (std::size_t snp : selected) {
        if (snp >= cohort.p) throw schema_error("build_design: SNP index out of range");
    }
    const std::size_t m = selected.size();
    std::vector<Term> terms;
    terms.reserve(m + m * (m - 1) / 2);
    for (std::size_t a = 0; a < m; ++a) {
        terms.push_back(Term{Term::Kind::Main, selected[a], selected[a]});
    }
    for (std::size_t a = 0; a < m; ++a) {
        for (std::size_t b = a + 1; b < m; ++b) {
            terms.push_back(Term{Term::Kind::Interaction, selected[a], selected[b]});
        }
    }

    const std::size_t dim = 1 + terms.size();
    std::vector<double> raw(cohort.n * dim);
    std::vector<double> labels(cohort.n);
    std::vector<double> mapped(m);
    for (std::size_t i = 0; i < cohort.n; ++i) {
        for (std::size_t a = 0; a < m; ++a) {
            mapped[a] = 0.5 * cohort.genotype(i, selected[a]);
        }
        double* row = raw.data() + i * dim;
        row[0] = 1.0;
        std::size_t col = 1;
        for (std::size_t a = 0; a < m; ++a) row[col++] = mapped[a];
        for (std::size_t a = 0; a < m; ++a) {
            for (std::size_t b = a + 1; b < m; ++b) row[col++] = mapped[a] * mapped[b];
        }
        labels[i] = cohort.phenotype[i];
    }
    DesignMatrix design{make_normalized_dataset(std::move(raw), std::move(labels), dim),
                        std::move(terms),
                        std::vector<std::size_t>(selected.begin(), selected.end())};
    return design;
}

// Relative-magnitude thresholding: keep term i iff |theta_i| >= ratio * max_j
// |theta_j|, the max taken over non-intercept coefficients only. A zero
// coefficient vector yields the empty model.
inline std::vector<std::size_t> threshold_model(std::span<const double> theta,
                                                std::size_t n_terms, double ratio) {
    if (!(ratio > 0.0) || !(ratio < 1.0)) {
        throw schema_error("threshold_model: ratio must lie in (0, 1)");
    }
    if (theta.size() != n_terms + 1) {
        throw schema_error("threshold_model: coefficient count does not match terms");
    }
    double max_abs = 0.0;
    for (std::size_t j = 1; j < theta.size(); ++j) max_abs = std::max(max_abs, std::abs(theta[j]));
    std::vector<std::size_t> included;
    if (max_abs == 0.0) return included;
    for (std::size_t j = 1; j < theta.size(); ++j) {
        if (std::abs(theta[j]) >= ratio * max_abs) included.push_back(j - 1);
    }
    return included;
}

struct RecoveryFlags {
    bool interaction_found{false};
    bool both_mains_found{false};
    bool all_found{false};
    bool no_extras{false};
    int n_mains_found{0};
};

inline RecoveryFlags evaluate_run(std::span<const std::size_t> included_terms,
                                  std::span<const Term> terms,
                                  std::pair<std::size_t, std::size_t> causative) {
    const std::size_t lo = std::min(causative.first, causative.second);
    const std::size_t hi = std::max(causative.first, causative.second);
    RecoveryFlags flags;
    flags.no_extras = true;
    bool main_lo = false;
    bool main_hi = false;
    for (std::size_t index : included_terms) {
        if (index >= terms.size()) throw schema_error("evaluate_run: term index out of range");
        const Term& term = terms[index];
        if (term.is_main() && term.snp_a == lo) {
            main_lo = true;
        } else if (term.is_main() && term.snp_a == hi) {
            main_hi = true;
        } else if (!term.is_main() && std::min(term.snp_a, term.snp_b) == lo &&
                   std::max(term.snp_a, term.snp_b) == hi) {
            flags.interaction_found = true;
        } else {
            flags.no_extras = false;
        }
    }
    flags.n_mains_found = static_cast<int>(main_lo) + static_cast<int>(main_hi);
    flags.both_mains_found = flags.n_mains_found == 2;
    flags.all_found = flags.interaction_found && flags.both_mains_found;
    return flags;
}

}  // namespace dperm
