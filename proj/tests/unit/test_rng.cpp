#include "doctest.h"

#include <cmath>
#include <vector>

#include "dperm/rng.hpp"
#include "support/oracles.hpp"

using namespace dperm;

TEST_CASE("identical seeds reproduce the stream bit-exactly") {
    Rng a(12345);
    Rng b(12345);
    for (int i = 0; i < 100; ++i) {
        CHECK(a.next_u64() == b.next_u64());
    }
    CHECK(a.uniform01() == b.uniform01());
    CHECK(a.normal() == b.normal());
    CHECK(a.laplace(2.0) == b.laplace(2.0));
    CHECK(a.gamma(5.0, 2.0) == b.gamma(5.0, 2.0));
}

TEST_CASE("derived streams differ from the master and from each other") {
    const std::uint64_t master = 777;
    CHECK(derive_seed(master, 0) != master);
    CHECK(derive_seed(master, 0) != derive_seed(master, 1));
    CHECK(derive_seed(master, 1) != derive_seed(master + 1, 1));
    // Stable values: manifests document the derivation, so it must not drift.
    CHECK(derive_seed(master, 0) == derive_seed(master, 0));
}

TEST_CASE("uniform01 stays inside [0, 1)") {
    Rng rng(5);
    for (int i = 0; i < 10000; ++i) {
        const double u = rng.uniform01();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
    }
}

TEST_CASE("normal moments") {
    Rng rng(99);
    const int n = 200000;
    double sum = 0.0;
    double sum_sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = rng.normal();
        sum += x;
        sum_sq += x * x;
    }
    const double mean = sum / n;
    const double var = sum_sq / n - mean * mean;
    CHECK(std::abs(mean) < 3.0 / std::sqrt(static_cast<double>(n)));
    CHECK(var == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("laplace scale 2: P(|x| > 2 ln 2) is one half") {
    Rng rng(7);
    const int n = 200000;
    const double threshold = 2.0 * std::log(2.0);
    int above = 0;
    for (int i = 0; i < n; ++i) {
        above += std::abs(rng.laplace(2.0)) > threshold ? 1 : 0;
    }
    const double freq = static_cast<double>(above) / n;
    CHECK(std::abs(freq - 0.5) < 3.0 * oracles::binomial_se(0.5, n));
}

TEST_CASE("gamma sampler matches the Gamma(5, 2) distribution") {
    Rng rng(31);
    const std::size_t n = 100000;
    std::vector<double> sample(n);
    for (double& v : sample) v = rng.gamma(5.0, 2.0);
    CHECK(oracles::mean(sample) == doctest::Approx(10.0).epsilon(0.01));
    const double d = oracles::ks_statistic(
        sample, [](double x) { return oracles::gamma_cdf(5.0, 2.0, x); });
    CHECK(d < oracles::ks_critical(0.01, n));
}

TEST_CASE("gamma sampler handles shape below one") {
    Rng rng(32);
    const std::size_t n = 100000;
    std::vector<double> sample(n);
    for (double& v : sample) v = rng.gamma(0.5, 2.0);
    CHECK(oracles::mean(sample) == doctest::Approx(1.0).epsilon(0.03));
    CHECK_THROWS_AS(rng.gamma(0.0, 1.0), schema_error);
}
