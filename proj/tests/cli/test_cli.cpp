// Integration tests that drive the installed CLI binary. The binary path
// arrives via the DPERM_CLI environment variable (set by ctest).

#include "doctest.h"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "dperm/io.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

std::string cli_path() {
    const char* env = std::getenv("DPERM_CLI");
    REQUIRE_MESSAGE(env != nullptr, "DPERM_CLI must point at the CLI binary");
    return env;
}

fs::path work_dir() {
    static const fs::path dir = [] {
        fs::path d = fs::temp_directory_path() / "dperm_cli_tests";
        fs::remove_all(d);
        fs::create_directories(d);
        return d;
    }();
    return dir;
}

struct RunResult {
    int exit_code;
    std::string output;
};

RunResult run(const std::string& args) {
    const fs::path log = work_dir() / "run.log";
    const std::string command = cli_path() + " " + args + " > " + log.string() + " 2>&1";
    const int status = std::system(command.c_str());
    RunResult result;
    result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    result.output = dperm::read_file(log.string());
    return result;
}

std::string path_of(const std::string& name) { return (work_dir() / name).string(); }

void write_json(const std::string& name, const json& j) {
    dperm::write_file(path_of(name), j.dump(2));
}

json small_cohort_config() {
    return json{{"n_cases", 40}, {"n_controls", 40}, {"p_snps", 25}};
}

// One shared small cohort for the fit/tune tests.
const std::string& shared_cohort() {
    static const std::string path = [] {
        write_json("small.json", small_cohort_config());
        const RunResult r = run("generate --config " + path_of("small.json") +
                                " --seed 31 --out " + path_of("shared.csv"));
        REQUIRE(r.exit_code == 0);
        return path_of("shared.csv");
    }();
    return path;
}

}  // namespace

TEST_CASE("generate: default cohort has 800 rows and p+1 columns") {
    const RunResult r = run("generate --seed 7 --out " + path_of("default.csv"));
    REQUIRE(r.exit_code == 0);
    const std::string csv = dperm::read_file(path_of("default.csv"));
    std::istringstream lines(csv);
    std::string header;
    std::getline(lines, header);
    CHECK(std::count(header.begin(), header.end(), ',') == 1000);  // 1000 SNPs + phenotype
    std::size_t rows = 0;
    for (std::string line; std::getline(lines, line);) rows += !line.empty();
    CHECK(rows == 800);
}

TEST_CASE("generate: same seed gives byte-identical output, manifests carry digests") {
    write_json("gen.json", small_cohort_config());
    const std::string config = path_of("gen.json");
    REQUIRE(run("generate --config " + config + " --seed 5 --out " + path_of("a.csv"))
                .exit_code == 0);
    REQUIRE(run("generate --config " + config + " --seed 5 --out " + path_of("b.csv"))
                .exit_code == 0);
    CHECK(dperm::read_file(path_of("a.csv")) == dperm::read_file(path_of("b.csv")));

    const json manifest = json::parse(dperm::read_file(path_of("a.csv.manifest.json")));
    CHECK(manifest.at("command") == "generate");
    CHECK(manifest.at("master_seed") == 5);
    CHECK(manifest.at("outputs").at(0).at("fnv1a64") ==
          dperm::file_digest(path_of("a.csv")));
    CHECK(manifest.at("config").contains("causative_snps"));

    REQUIRE(run("generate --config " + config + " --seed 6 --out " + path_of("c.csv"))
                .exit_code == 0);
    CHECK(dperm::read_file(path_of("a.csv")) != dperm::read_file(path_of("c.csv")));
}

TEST_CASE("generate: schema violations exit with the config code") {
    write_json("bad.json", json{{"p_snps", 0}});
    const RunResult r = run("generate --config " + path_of("bad.json") + " --seed 1 --out " +
                            path_of("bad.csv"));
    CHECK(r.exit_code == 2);
    write_json("badmaf.json", json{{"maf_causative", 0.9}});
    CHECK(run("generate --config " + path_of("badmaf.json") + " --seed 1 --out " +
              path_of("bad.csv")).exit_code == 2);
}

TEST_CASE("screen: reports the ranked SNPs with their statistics") {
    const RunResult r = run("screen --cohort " + shared_cohort() + " --top-m 4 --out " +
                            path_of("screen.json"));
    REQUIRE(r.exit_code == 0);
    const json record = json::parse(dperm::read_file(path_of("screen.json")));
    REQUIRE(record.at("selected_snps").size() == 4);
    REQUIRE(record.at("chi2").size() == 4);
    for (std::size_t i = 1; i < 4; ++i) {
        CHECK(record.at("chi2").at(i - 1).get<double>() >=
              record.at("chi2").at(i).get<double>());
    }
    const dperm::Cohort cohort = dperm::load_cohort(shared_cohort());
    const auto expected = dperm::screen(cohort, 4);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(record.at("selected_snps").at(i).get<std::size_t>() == expected[i]);
    }
}

TEST_CASE("fit: an enormous budget matches the noiseless baseline") {
    const std::string base = " --cohort " + shared_cohort() +
                             " --lambda 0.08 --alpha 0.2 --top-m 4 --seed 9";
    REQUIRE(run("fit" + base + " --epsilon 1e6 --out " + path_of("noisy.json")).exit_code == 0);
    REQUIRE(run("fit" + base + " --epsilon 1e6 --no-noise --out " + path_of("clean.json"))
                .exit_code == 0);
    const json noisy = json::parse(dperm::read_file(path_of("noisy.json")));
    const json clean = json::parse(dperm::read_file(path_of("clean.json")));
    CHECK(noisy.at("private") == true);
    CHECK(clean.at("private") == false);
    double worst = 0.0;
    for (std::size_t j = 0; j < noisy.at("theta").size(); ++j) {
        worst = std::max(worst, std::abs(noisy.at("theta").at(j).get<double>() -
                                         clean.at("theta").at(j).get<double>()));
    }
    CHECK(worst <= 1e-3);
}

TEST_CASE("fit: reruns are byte-identical") {
    const std::string base = " --cohort " + shared_cohort() +
                             " --epsilon 2 --lambda 0.08 --alpha 0.2 --top-m 4 --seed 12";
    REQUIRE(run("fit" + base + " --out " + path_of("f1.json")).exit_code == 0);
    REQUIRE(run("fit" + base + " --out " + path_of("f2.json")).exit_code == 0);
    CHECK(dperm::read_file(path_of("f1.json")) == dperm::read_file(path_of("f2.json")));
}

TEST_CASE("fit: distinct exit codes per failure class") {
    // Privacy violation: lambda below the strong-convexity bound, augmentation off.
    const RunResult privacy =
        run("fit --cohort " + shared_cohort() +
            " --epsilon 0.05 --lambda 1e-8 --alpha 0.2 --top-m 4 --no-augment --out " +
            path_of("p.json"));
    CHECK(privacy.exit_code == 3);
    CHECK(privacy.output.find("strong_convexity") != std::string::npos);

    // Solver non-convergence is a hard error.
    CHECK(run("fit --cohort " + shared_cohort() +
              " --epsilon 2 --lambda 0.08 --alpha 0.2 --top-m 4 --max-iter 1 --out " +
              path_of("s.json")).exit_code == 4);

    // Missing input file.
    CHECK(run("fit --cohort " + path_of("missing.csv") +
              " --epsilon 2 --lambda 0.08 --out " + path_of("m.json")).exit_code == 5);

    // Bad flag value.
    CHECK(run("fit --cohort " + shared_cohort() + " --epsilon 2 --lambda 0.08 --alpha 1.5 "
              "--out " + path_of("a.json")).exit_code == 2);
}

TEST_CASE("tune: a single candidate is selected with probability one") {
    const RunResult r = run("tune --cohort " + shared_cohort() +
                            " --epsilon-train 2 --alpha 0.2 "
                            "--grid-multipliers 1 --split-seed 3 --seed 4 --top-m 4 --out " +
                            path_of("tune1.json"));
    REQUIRE(r.exit_code == 0);
    const json record = json::parse(dperm::read_file(path_of("tune1.json")));
    REQUIRE(record.at("selection_probabilities").size() == 1);
    CHECK(record.at("selection_probabilities").at(0).get<double>() == 1.0);
    CHECK(record.at("selected_index") == 0);
    // epsilon_select defaults to epsilon_train when not given.
    CHECK(record.at("budgets").at("epsilon_select").get<double>() == 2.0);
}

TEST_CASE("tune: probabilities normalize and match the exponential weights") {
    const RunResult r = run("tune --cohort " + shared_cohort() +
                            " --epsilon-train 2 --epsilon-select 2 --alpha 0.2 "
                            "--grid-multipliers 1,2,4,8 --split-seed 3 --seed 4 --top-m 4 "
                            "--out " + path_of("tune4.json"));
    REQUIRE(r.exit_code == 0);
    const json record = json::parse(dperm::read_file(path_of("tune4.json")));
    const auto scores = record.at("scores").get<std::vector<double>>();
    const auto probs = record.at("selection_probabilities").get<std::vector<double>>();
    const double beta2 = record.at("stability").at("beta2").get<double>();
    const double m = record.at("split").at("validation_n").get<double>();
    REQUIRE(scores.size() == 4);

    double total = 0.0;
    for (double p : probs) total += p;
    CHECK(std::abs(total - 1.0) <= 1e-12);

    const double factor = 2.0 * m / (2.0 * beta2);
    const double shift = *std::max_element(scores.begin(), scores.end());
    std::vector<double> expected(scores.size());
    double norm = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        expected[i] = std::exp(factor * (scores[i] - shift));
        norm += expected[i];
    }
    for (std::size_t i = 0; i < scores.size(); ++i) {
        CHECK(probs[i] == doctest::Approx(expected[i] / norm).epsilon(1e-12));
    }
    CHECK(record.at("budgets").at("composed").is_null());
}

TEST_CASE("tune: an overwhelming selection budget picks the argmax score") {
    int agree = 0;
    const int repeats = 100;
    for (int rep = 0; rep < repeats; ++rep) {
        const RunResult r = run("tune --cohort " + shared_cohort() +
                                " --epsilon-train 2 --epsilon-select 1e6 --alpha 0.2 "
                                "--grid-multipliers 1,4 --split-seed 3 --seed " +
                                std::to_string(500 + rep) + " --top-m 4 --out " +
                                path_of("tuneN.json"));
        REQUIRE(r.exit_code == 0);
        const json record = json::parse(dperm::read_file(path_of("tuneN.json")));
        const auto scores = record.at("scores").get<std::vector<double>>();
        const std::size_t argmax = static_cast<std::size_t>(
            std::max_element(scores.begin(), scores.end()) - scores.begin());
        agree += record.at("selected_index").get<std::size_t>() == argmax ? 1 : 0;
    }
    CHECK(agree >= 99);
}

TEST_CASE("experiment: single replicate rates are 0/1 and reruns are identical") {
    const json grid{{"cohort", small_cohort_config()},
                    {"cells", json::array({json{{"epsilon", 2.0}, {"alpha", 0.1}}})},
                    {"top_m", 4}};
    write_json("grid1.json", grid);
    const std::string base = "experiment --grid " + path_of("grid1.json") +
                             " --replicates 1 --seed 21 --out ";
    REQUIRE(run(base + path_of("exp1")).exit_code == 0);
    REQUIRE(run(base + path_of("exp2")).exit_code == 0);
    CHECK(dperm::read_file(path_of("exp1/rates.csv")) ==
          dperm::read_file(path_of("exp2/rates.csv")));
    CHECK(dperm::read_file(path_of("exp1/replicates.csv")) ==
          dperm::read_file(path_of("exp2/replicates.csv")));

    std::istringstream rates(dperm::read_file(path_of("exp1/rates.csv")));
    std::string header, row;
    std::getline(rates, header);
    CHECK(header ==
          "epsilon,alpha,convex_min,interaction_rate,mains_half_rate,all_rate,"
          "specificity_rate,replicates");
    std::getline(rates, row);
    std::vector<std::string> fields;
    std::istringstream split(row);
    for (std::string f; std::getline(split, f, ',');) fields.push_back(f);
    REQUIRE(fields.size() == 8);
    for (std::size_t i : {3, 4, 5, 6}) {
        const double value = std::stod(fields[i]);
        CHECK((value == 0.0 || value == 0.5 || value == 1.0));  // mains can be half
    }
    CHECK(fields[7] == "1");
}

TEST_CASE("experiment: the saturating non-private cell is fully specific") {
    const json grid{
        {"cohort", small_cohort_config()},
        {"cells", json::array({json{{"epsilon", nullptr}, {"alpha", 0.5}, {"convex_min", 1.58}}})},
        {"top_m", 4}};
    write_json("grid2.json", grid);
    REQUIRE(run("experiment --grid " + path_of("grid2.json") +
                " --replicates 4 --seed 33 --out " + path_of("exp3")).exit_code == 0);
    std::istringstream rates(dperm::read_file(path_of("exp3/rates.csv")));
    std::string header, row;
    std::getline(rates, header);
    std::getline(rates, row);
    std::vector<std::string> fields;
    std::istringstream split(row);
    for (std::string f; std::getline(split, f, ',');) fields.push_back(f);
    CHECK(fields[0] == "inf");
    CHECK(std::stod(fields[5]) == 0.0);  // all_rate
    CHECK(std::stod(fields[6]) == 1.0);  // specificity_rate
}

TEST_CASE("experiment: schema errors in the grid exit with the config code") {
    write_json("grid3.json", json{{"cells", json::array()}});
    CHECK(run("experiment --grid " + path_of("grid3.json") + " --replicates 1 --seed 1 --out " +
              path_of("exp4")).exit_code == 2);
}

TEST_CASE("experiment: DPERM_THREADS caps workers without changing results") {
    const json grid{{"cohort", small_cohort_config()},
                    {"cells", json::array({json{{"epsilon", 1.0}, {"alpha", 0.1}}})},
                    {"top_m", 4}};
    write_json("grid_threads.json", grid);
    const std::string args = "experiment --grid " + path_of("grid_threads.json") +
                             " --replicates 3 --seed 77 --out ";
    const fs::path log = work_dir() / "run.log";
    const std::string capped = "DPERM_THREADS=1 " + cli_path() + " " + args +
                               path_of("exp_t1") + " > " + log.string() + " 2>&1";
    REQUIRE(WEXITSTATUS(std::system(capped.c_str())) == 0);
    REQUIRE(run(args + path_of("exp_tn")).exit_code == 0);
    CHECK(dperm::read_file(path_of("exp_t1/rates.csv")) ==
          dperm::read_file(path_of("exp_tn/rates.csv")));
    CHECK(dperm::read_file(path_of("exp_t1/replicates.csv")) ==
          dperm::read_file(path_of("exp_tn/replicates.csv")));
}

TEST_CASE("compare-noise: excess samples are nonnegative and B1 dominates") {
    const RunResult r = run("compare-noise --epsilon 1 --replicates 120 --seed 13 --out " +
                            path_of("cmp.csv"));
    REQUIRE(r.exit_code == 0);
    std::istringstream csv(dperm::read_file(path_of("cmp.csv")));
    std::string header;
    std::getline(csv, header);
    CHECK(header == "family,replicate,excess");
    double sum_b1 = 0.0, sum_b2 = 0.0, sq_b1 = 0.0, sq_b2 = 0.0;
    std::size_t n_b1 = 0, n_b2 = 0;
    for (std::string line; std::getline(csv, line);) {
        if (line.empty()) continue;
        const auto first_comma = line.find(',');
        const auto last_comma = line.rfind(',');
        const double excess = std::stod(line.substr(last_comma + 1));
        CHECK(excess >= 0.0);
        if (line.substr(0, first_comma) == "b1") {
            sum_b1 += excess;
            sq_b1 += excess * excess;
            ++n_b1;
        } else {
            sum_b2 += excess;
            sq_b2 += excess * excess;
            ++n_b2;
        }
    }
    REQUIRE(n_b1 == 120);
    REQUIRE(n_b2 == 120);
    const double mean_b1 = sum_b1 / n_b1;
    const double mean_b2 = sum_b2 / n_b2;
    const double var_b1 = sq_b1 / n_b1 - mean_b1 * mean_b1;
    const double var_b2 = sq_b2 / n_b2 - mean_b2 * mean_b2;
    const double se = std::sqrt(var_b1 / n_b1 + var_b2 / n_b2);
    CHECK(mean_b1 <= mean_b2 + 3.0 * se);

    // Doubling the budget shrinks the mean excess.
    REQUIRE(run("compare-noise --epsilon 2 --replicates 120 --seed 13 --out " +
                path_of("cmp2.csv")).exit_code == 0);
    const json manifest1 = json::parse(dperm::read_file(path_of("cmp.csv.manifest.json")));
    const json manifest2 = json::parse(dperm::read_file(path_of("cmp2.csv.manifest.json")));
    const double m1 = manifest1.at("config").at("summary").at(0).at("mean").get<double>();
    const double m2 = manifest2.at("config").at("summary").at(0).at("mean").get<double>();
    CHECK(m2 < m1);
}
