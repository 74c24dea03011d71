// dperm: differentially private elastic-net logistic regression for synthetic
// GWAS studies. Subcommands: generate | screen | fit | tune | experiment |
// compare-noise. Every command is a pure function of (inputs, flags, seed)
// and emits a manifest with digests of everything it wrote.

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "dperm/dperm.hpp"

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;
using namespace dperm;

namespace {

// Exit codes: distinct classes so scripts can react to the failure kind.
constexpr int kExitOk = 0;
constexpr int kExitSchema = 2;
constexpr int kExitPrivacy = 3;
constexpr int kExitSolver = 4;
constexpr int kExitIo = 5;

constexpr const char* kSeedDerivation =
    "sub-seed(stream) = splitmix64(master + (stream + 1) * 0x9E3779B97F4A7C15)";

std::size_t thread_cap() {
    if (const char* env = std::getenv("DPERM_THREADS")) {
        const long parsed = std::strtol(env, nullptr, 10);
        if (parsed > 0) return static_cast<std::size_t>(parsed);
    }
    return 0;  // no cap
}

json make_manifest(const std::string& command, json config, std::uint64_t master_seed,
                   const std::vector<std::string>& outputs) {
    json manifest;
    manifest["command"] = command;
    manifest["artifact_version"] = kVersion;
    manifest["master_seed"] = master_seed;
    manifest["seed_derivation"] = kSeedDerivation;
    manifest["config"] = std::move(config);
    manifest["outputs"] = json::array();
    for (const std::string& path : outputs) {
        manifest["outputs"].push_back({{"path", path}, {"fnv1a64", file_digest(path)}});
    }
    return manifest;
}

void write_manifest(const json& manifest, const std::string& path) {
    write_file(path, manifest.dump(2) + "\n");
}

json double_array(std::span<const double> values) {
    // CSV output carries 17 significant digits; JSON numbers are emitted by
    // the serializer in shortest round-trip form, which is equally lossless.
    json out = json::array();
    for (double v : values) out.push_back(v);
    return out;
}

CohortConfig cohort_config_from_json(const json& j) {
    CohortConfig config;
    if (j.contains("n_cases")) config.n_cases = j.at("n_cases").get<std::size_t>();
    if (j.contains("n_controls")) config.n_controls = j.at("n_controls").get<std::size_t>();
    if (j.contains("p_snps")) config.p_snps = j.at("p_snps").get<std::size_t>();
    if (j.contains("maf_causative")) config.maf_causative = j.at("maf_causative").get<double>();
    if (j.contains("maf_background")) {
        const json& maf = j.at("maf_background");
        if (maf.is_number()) {
            config.maf_background.low = maf.get<double>();
            config.maf_background.high = maf.get<double>();
        } else {
            config.maf_background.low = maf.at("low").get<double>();
            config.maf_background.high = maf.at("high").get<double>();
        }
    }
    if (j.contains("odds_baseline")) config.odds_baseline = j.at("odds_baseline").get<double>();
    if (j.contains("odds_x")) config.odds_x = j.at("odds_x").get<double>();
    if (j.contains("odds_y")) config.odds_y = j.at("odds_y").get<double>();
    if (j.contains("odds_interaction")) {
        config.odds_interaction = j.at("odds_interaction").get<double>();
    }
    if (j.contains("max_attempts")) config.max_attempts = j.at("max_attempts").get<std::size_t>();
    config.validate();
    return config;
}

json cohort_config_to_json(const CohortConfig& config) {
    return json{{"n_cases", config.n_cases},
                {"n_controls", config.n_controls},
                {"p_snps", config.p_snps},
                {"maf_causative", config.maf_causative},
                {"maf_background",
                 {{"low", config.maf_background.low}, {"high", config.maf_background.high}}},
                {"odds_baseline", config.odds_baseline},
                {"odds_x", config.odds_x},
                {"odds_y", config.odds_y},
                {"odds_interaction", config.odds_interaction},
                {"max_attempts", config.max_attempts}};
}

json load_json_file(const std::string& path) {
    const std::string text = read_file(path);
    try {
        return json::parse(text);
    } catch (const json::exception& e) {
        throw schema_error("failed to parse '" + path + "': " + e.what());
    }
}

struct FitPipeline {
    Cohort cohort;
    std::vector<std::size_t> selected;
    std::vector<double> selected_chi2;
    DesignMatrix design;
};

FitPipeline run_screen_and_design(const std::string& cohort_path, std::size_t top_m) {
    Cohort cohort = load_cohort(cohort_path);
    std::vector<std::size_t> selected = screen(cohort, top_m);
    std::vector<double> selected_chi2;
    selected_chi2.reserve(top_m);
    for (std::size_t snp : selected) selected_chi2.push_back(chi2_stat(cohort, snp));
    DesignMatrix design = build_design(cohort, selected);
    return FitPipeline{std::move(cohort), std::move(selected), std::move(selected_chi2),
                       std::move(design)};
}

json term_to_json(const Term& term, std::size_t column, double coefficient) {
    json out;
    out["name"] = term.name();
    out["kind"] = term.is_main() ? "main" : "interaction";
    out["snps"] = term.is_main() ? json::array({term.snp_a})
                                 : json::array({term.snp_a, term.snp_b});
    out["column"] = column;
    out["coefficient"] = coefficient;
    return out;
}

// ------------------------------------------------------------------ generate

int cmd_generate(const std::string& config_path, std::uint64_t seed, const std::string& out) {
    CohortConfig config;
    if (!config_path.empty()) config = cohort_config_from_json(load_json_file(config_path));
    config.validate();
    const Cohort cohort = generate_cohort(config, seed);
    save_cohort(cohort, out);

    json config_json = cohort_config_to_json(config);
    config_json["causative_snps"] =
        json::array({cohort.causative->first, cohort.causative->second});
    const json manifest = make_manifest("generate", std::move(config_json), seed, {out});
    write_manifest(manifest, out + ".manifest.json");
    std::cout << "wrote " << out << " (" << cohort.n << " individuals, " << cohort.p
              << " SNPs)\n";
    return kExitOk;
}

// -------------------------------------------------------------------- screen

int cmd_screen(const std::string& cohort_path, std::size_t top_m, const std::string& out) {
    const Cohort cohort = load_cohort(cohort_path);
    const std::vector<std::size_t> selected = screen(cohort, top_m);
    json record;
    record["command"] = "screen";
    record["cohort"] = {{"path", cohort_path}, {"fnv1a64", file_digest(cohort_path)}};
    record["top_m"] = top_m;
    record["selected_snps"] = selected;
    json stats = json::array();
    for (std::size_t snp : selected) stats.push_back(chi2_stat(cohort, snp));
    record["chi2"] = std::move(stats);
    write_file(out, record.dump(2) + "\n");
    const json manifest =
        make_manifest("screen", json{{"cohort", cohort_path}, {"top_m", top_m}}, 0, {out});
    write_manifest(manifest, out + ".manifest.json");
    std::cout << "wrote " << out << "\n";
    return kExitOk;
}

// ----------------------------------------------------------------------- fit

struct FitOptions {
    std::string cohort_path;
    double epsilon{1.0};
    double lambda{0.0};
    double alpha{0.1};
    std::string family{"b1"};
    std::uint64_t seed{0};
    std::size_t top_m{5};
    double threshold_ratio{0.01};
    bool no_noise{false};
    bool no_augment{false};
    SolverConfig solver{};
    std::string out;
};

int cmd_fit(const FitOptions& options) {
    const FitPipeline pipeline = run_screen_and_design(options.cohort_path, options.top_m);
    const LabeledDataset& dataset = pipeline.design.dataset;
    const ElasticNetSpec enet{options.lambda, options.alpha};
    const NoiseFamily family = noise_family_from_string(options.family);

    std::vector<double> theta;
    json record;
    record["command"] = "fit";
    record["cohort"] = {{"path", options.cohort_path},
                        {"fnv1a64", file_digest(options.cohort_path)}};
    record["private"] = !options.no_noise;
    record["epsilon"] = options.epsilon;
    record["lambda"] = options.lambda;
    record["alpha"] = options.alpha;
    record["noise_family"] = options.family;
    record["seed"] = options.seed;
    record["top_m"] = options.top_m;
    record["threshold_ratio"] = options.threshold_ratio;
    record["solver"] = {{"tol", options.solver.tol}, {"max_iter", options.solver.max_iter}};
    record["selected_snps"] = pipeline.selected;
    record["chi2"] = double_array(pipeline.selected_chi2);
    record["kappa"] = dataset.kappa();
    record["row_scale"] = dataset.row_scale();

    if (options.no_noise) {
        const double c_star =
            min_strong_convexity(dataset.kappa() * dataset.kappa(), dataset.n(), options.epsilon);
        const double ridge = enet.ridge();
        if (!options.no_augment || ridge >= c_star) {
            const SolverResult solved =
                fit_noiseless(dataset, enet, options.no_augment ? 0.0 : c_star, options.solver);
            theta = solved.theta;
            record["augment"] = options.no_augment ? 0.0 : std::max(0.0, (c_star - ridge) / 2.0);
            record["iterations"] = solved.iterations;
            record["final_objective"] = solved.final_objective;
        } else {
            throw privacy_error("strong_convexity", "ridge below the required strong convexity "
                                                    "and augmentation is disabled");
        }
    } else {
        const PrivateFit fit = fit_private(dataset, enet, options.epsilon, family, options.seed,
                                           options.solver, !options.no_augment);
        theta = fit.theta;
        record["phi"] = fit.phi;
        record["augment"] = fit.augment;
        record["iterations"] = fit.solver.iterations;
        record["final_objective"] = fit.solver.final_objective;
    }

    // Back-transform through the row normalization: margins are preserved by
    // theta_raw = row_scale * theta on the mapped (pre-normalization) design.
    std::vector<double> theta_raw(theta.size());
    for (std::size_t j = 0; j < theta.size(); ++j) theta_raw[j] = dataset.row_scale() * theta[j];
    record["theta_normalized"] = double_array(theta);
    record["theta"] = double_array(theta_raw);
    record["intercept"] = theta_raw[0];

    const std::vector<std::size_t> included =
        threshold_model(theta, pipeline.design.terms.size(), options.threshold_ratio);
    json included_json = json::array();
    for (std::size_t index : included) {
        included_json.push_back(
            term_to_json(pipeline.design.terms[index], index + 1, theta_raw[index + 1]));
    }
    record["included_terms"] = std::move(included_json);

    write_file(options.out, record.dump(2) + "\n");
    json config = record;
    config.erase("theta");
    config.erase("theta_normalized");
    config.erase("included_terms");
    const json manifest = make_manifest("fit", std::move(config), options.seed, {options.out});
    write_manifest(manifest, options.out + ".manifest.json");
    std::cout << "wrote " << options.out << " (" << included.size() << " terms kept)\n";
    return kExitOk;
}

// ---------------------------------------------------------------------- tune

struct TuneOptions {
    std::string cohort_path;
    double epsilon_train{1.0};
    double epsilon_select{1.0};
    double alpha{0.1};
    std::vector<double> multipliers{1.0, 2.0, 4.0, 8.0};
    double delta{0.05};
    std::uint64_t split_seed{0};
    std::uint64_t seed{0};
    std::string family{"b1"};
    std::size_t top_m{5};
    double threshold_ratio{0.01};
    SolverConfig solver{};
    std::string out;
};

int cmd_tune(const TuneOptions& options) {
    const FitPipeline pipeline = run_screen_and_design(options.cohort_path, options.top_m);
    const auto [train, validation] = split_dataset(pipeline.design.dataset, 0.2,
                                                   options.split_seed);
    const double convex_min = min_strong_convexity(train.kappa() * train.kappa(), train.n(),
                                                   options.epsilon_train);
    const CandidateSet candidates = lambda_grid(convex_min, options.alpha, options.multipliers);
    const NoiseFamily family = noise_family_from_string(options.family);

    const TuningResult result =
        select_private(candidates, train, validation, options.epsilon_train,
                       options.epsilon_select, family, options.delta, options.seed,
                       options.solver);

    json record;
    record["command"] = "tune";
    record["cohort"] = {{"path", options.cohort_path},
                        {"fnv1a64", file_digest(options.cohort_path)}};
    // The two budgets cover different releases (candidate fits vs the winner
    // draw) and are deliberately not summed into one headline number.
    record["budgets"] = {{"epsilon_train", options.epsilon_train},
                         {"epsilon_select", options.epsilon_select},
                         {"delta", options.delta},
                         {"composed", nullptr}};
    record["alpha"] = options.alpha;
    record["grid_multipliers"] = options.multipliers;
    record["convex_min"] = convex_min;
    json lambdas = json::array();
    for (const auto& cand : candidates.candidates) lambdas.push_back(cand.lambda);
    record["candidate_lambdas"] = std::move(lambdas);
    record["noise_family"] = options.family;
    record["seed"] = options.seed;
    record["split"] = {{"seed", options.split_seed},
                       {"train_n", train.n()},
                       {"validation_n", validation.n()}};
    record["top_m"] = options.top_m;
    record["selected_snps"] = pipeline.selected;
    record["scores"] = double_array(result.scores);
    record["selection_probabilities"] = double_array(result.selection_probabilities);
    record["selected_index"] = result.selected_index;
    record["selected_lambda"] = result.selected.lambda;
    record["stability"] = {{"beta1", result.stability.beta1},
                           {"beta2", result.stability.beta2},
                           {"xi", result.stability.xi},
                           {"delta", result.stability.delta}};
    std::vector<double> theta_raw(result.fit.theta.size());
    for (std::size_t j = 0; j < theta_raw.size(); ++j) {
        theta_raw[j] = pipeline.design.dataset.row_scale() * result.fit.theta[j];
    }
    record["fit"] = {{"theta", double_array(theta_raw)},
                     {"theta_normalized", double_array(result.fit.theta)},
                     {"phi", result.fit.phi},
                     {"augment", result.fit.augment},
                     {"noise_seed", result.fit.seed},
                     {"iterations", result.fit.solver.iterations}};
    const std::vector<std::size_t> included = threshold_model(
        result.fit.theta, pipeline.design.terms.size(), options.threshold_ratio);
    json included_json = json::array();
    for (std::size_t index : included) {
        included_json.push_back(
            term_to_json(pipeline.design.terms[index], index + 1, theta_raw[index + 1]));
    }
    record["included_terms"] = std::move(included_json);

    write_file(options.out, record.dump(2) + "\n");
    json config = record;
    config.erase("fit");
    config.erase("included_terms");
    config.erase("scores");
    config.erase("selection_probabilities");
    const json manifest = make_manifest("tune", std::move(config), options.seed, {options.out});
    write_manifest(manifest, options.out + ".manifest.json");
    std::cout << "wrote " << options.out << " (selected lambda "
              << format_double(result.selected.lambda) << ")\n";
    return kExitOk;
}

// ---------------------------------------------------------------- experiment

ExperimentConfig experiment_config_from_json(const json& grid) {
    ExperimentConfig config;
    if (grid.contains("cohort")) config.cohort = cohort_config_from_json(grid.at("cohort"));
    if (!grid.contains("cells") || !grid.at("cells").is_array() || grid.at("cells").empty()) {
        throw schema_error("experiment grid: 'cells' must be a non-empty array");
    }
    for (const json& cell_json : grid.at("cells")) {
        ExperimentCell cell;
        if (cell_json.contains("epsilon") && !cell_json.at("epsilon").is_null()) {
            cell.epsilon = cell_json.at("epsilon").get<double>();
        }
        if (cell_json.contains("alpha")) cell.alpha = cell_json.at("alpha").get<double>();
        if (cell_json.contains("convex_min") && !cell_json.at("convex_min").is_null()) {
            cell.convex_min = cell_json.at("convex_min").get<double>();
        }
        if (cell_json.contains("lambda_multiplier")) {
            cell.lambda_multiplier = cell_json.at("lambda_multiplier").get<double>();
        }
        config.cells.push_back(cell);
    }
    if (grid.contains("top_m")) config.top_m = grid.at("top_m").get<std::size_t>();
    if (grid.contains("threshold_ratio")) {
        config.threshold_ratio = grid.at("threshold_ratio").get<double>();
    }
    if (grid.contains("family")) {
        config.family = noise_family_from_string(grid.at("family").get<std::string>());
    }
    if (grid.contains("ensure_causative")) {
        config.ensure_causative = grid.at("ensure_causative").get<bool>();
    }
    if (grid.contains("solver")) {
        const json& solver = grid.at("solver");
        if (solver.contains("tol")) config.solver.tol = solver.at("tol").get<double>();
        if (solver.contains("max_iter")) {
            config.solver.max_iter = solver.at("max_iter").get<std::size_t>();
        }
    }
    return config;
}

int cmd_experiment(const std::string& grid_path, std::size_t replicates, std::uint64_t seed,
                   const std::string& out_dir, std::size_t threads) {
    const json grid = load_json_file(grid_path);
    ExperimentConfig config = experiment_config_from_json(grid);
    config.replicates = replicates;
    config.seed = seed;
    config.threads = threads > 0 ? threads : thread_cap();
    config.validate();

    std::error_code ec;
    fs::create_directories(out_dir, ec);
    if (ec) throw io_error("cannot create output directory '" + out_dir + "'");

    const ExperimentReport report = run_experiment(config);

    std::string rates_csv =
        "epsilon,alpha,convex_min,interaction_rate,mains_half_rate,all_rate,"
        "specificity_rate,replicates\n";
    for (const CellRates& rates : report.rates) {
        rates_csv += rates.cell.epsilon ? format_double(*rates.cell.epsilon) : "inf";
        rates_csv += ',' + format_double(rates.cell.alpha);
        rates_csv += ',' + format_double(rates.convex_min_effective);
        rates_csv += ',' + format_double(rates.interaction_rate);
        rates_csv += ',' + format_double(rates.mains_half_rate);
        rates_csv += ',' + format_double(rates.all_rate);
        rates_csv += ',' + format_double(rates.specificity_rate);
        rates_csv += ',' + std::to_string(rates.replicates) + '\n';
    }
    const std::string rates_path = out_dir + "/rates.csv";
    write_file(rates_path, rates_csv);

    std::string reps_csv =
        "cell,replicate,cohort_seed,noise_seed,interaction_found,n_mains_found,"
        "all_found,no_extras,error\n";
    for (const ReplicateOutcome& outcome : report.outcomes) {
        reps_csv += std::to_string(outcome.cell) + ',' + std::to_string(outcome.replicate) +
                    ',' + std::to_string(outcome.cohort_seed) + ',' +
                    std::to_string(outcome.noise_seed) + ',' +
                    (outcome.flags.interaction_found ? "1," : "0,") +
                    std::to_string(outcome.flags.n_mains_found) + ',' +
                    (outcome.flags.all_found ? "1," : "0,") +
                    (outcome.flags.no_extras ? "1," : "0,") + outcome.error + '\n';
    }
    const std::string reps_path = out_dir + "/replicates.csv";
    write_file(reps_path, reps_csv);

    json config_json = grid;
    config_json["replicates"] = replicates;
    const json manifest = make_manifest("experiment", std::move(config_json), seed,
                                        {rates_path, reps_path});
    write_manifest(manifest, out_dir + "/manifest.json");
    std::cout << "wrote " << rates_path << " and " << reps_path << "\n";
    return kExitOk;
}

// ------------------------------------------------------------- compare-noise

int cmd_compare_noise(double epsilon, std::size_t replicates, std::uint64_t seed,
                      const std::string& out) {
    const LabeledDataset instance = builtin_compare_instance();
    const ElasticNetSpec enet = builtin_compare_enet();

    std::string csv = "family,replicate,excess\n";
    json summary = json::array();
    for (NoiseFamily family : {NoiseFamily::B1, NoiseFamily::B2}) {
        const std::vector<double> excess =
            excess_objective(instance, enet, epsilon, family, replicates, seed);
        for (std::size_t i = 0; i < excess.size(); ++i) {
            csv += std::string(to_string(family)) + ',' + std::to_string(i) + ',' +
                   format_double(excess[i]) + '\n';
        }
        std::vector<double> sorted = excess;
        std::sort(sorted.begin(), sorted.end());
        double total = 0.0;
        for (double v : excess) total += v;
        const auto quantile = [&](double q) {
            const double pos = q * static_cast<double>(sorted.size() - 1);
            const std::size_t lo = static_cast<std::size_t>(pos);
            const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
            return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
        };
        summary.push_back({{"family", to_string(family)},
                           {"mean", total / static_cast<double>(replicates)},
                           {"q10", quantile(0.10)},
                           {"q25", quantile(0.25)},
                           {"q50", quantile(0.50)},
                           {"q75", quantile(0.75)},
                           {"q90", quantile(0.90)}});
    }
    write_file(out, csv);

    json config{{"epsilon", epsilon},
                {"replicates", replicates},
                {"instance", "builtin n=200 s=5"},
                {"lambda", enet.lambda},
                {"alpha", enet.alpha},
                {"summary", summary}};
    const json manifest = make_manifest("compare-noise", std::move(config), seed, {out});
    write_manifest(manifest, out + ".manifest.json");
    std::cout << summary.dump(2) << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"differentially private elastic-net logistic regression for GWAS data"};
    app.require_subcommand(1);

    // generate
    std::string gen_config, gen_out = "cohort.csv";
    std::uint64_t gen_seed = 0;
    CLI::App* generate = app.add_subcommand("generate", "simulate a case/control cohort CSV");
    generate->add_option("--config", gen_config, "cohort config JSON (defaults if omitted)");
    generate->add_option("--seed", gen_seed, "master seed");
    generate->add_option("--out", gen_out, "output CSV path")->required();

    // screen
    std::string screen_cohort, screen_out = "screen.json";
    std::size_t screen_top_m = 5;
    CLI::App* screen_cmd = app.add_subcommand("screen", "rank SNPs by chi-square association");
    screen_cmd->add_option("--cohort", screen_cohort, "cohort CSV")->required();
    screen_cmd->add_option("--top-m", screen_top_m, "how many SNPs to keep");
    screen_cmd->add_option("--out", screen_out, "output JSON path");

    // fit
    FitOptions fit_options;
    CLI::App* fit = app.add_subcommand("fit", "screen, then release a private fit");
    fit->add_option("--cohort", fit_options.cohort_path, "cohort CSV")->required();
    fit->add_option("--epsilon", fit_options.epsilon, "privacy budget");
    fit->add_option("--lambda", fit_options.lambda, "elastic-net lambda")->required();
    fit->add_option("--alpha", fit_options.alpha, "elastic-net alpha in [0,1)");
    fit->add_option("--noise", fit_options.family, "noise family: b1 or b2");
    fit->add_option("--seed", fit_options.seed, "noise seed");
    fit->add_option("--top-m", fit_options.top_m, "SNPs kept by screening");
    fit->add_option("--threshold-ratio", fit_options.threshold_ratio,
                    "relative coefficient threshold");
    fit->add_flag("--no-noise", fit_options.no_noise, "zero the noise term (not private)");
    fit->add_flag("--no-augment", fit_options.no_augment,
                  "fail instead of augmenting when lambda is too small");
    fit->add_option("--tol", fit_options.solver.tol, "solver tolerance");
    fit->add_option("--max-iter", fit_options.solver.max_iter, "solver iteration cap");
    fit->add_option("--out", fit_options.out, "output JSON path")->required();

    // tune
    TuneOptions tune_options;
    CLI::App* tune = app.add_subcommand("tune", "privately select lambda from a grid");
    tune->add_option("--cohort", tune_options.cohort_path, "cohort CSV")->required();
    tune->add_option("--epsilon-train", tune_options.epsilon_train, "budget per candidate fit");
    tune->add_option("--epsilon-select", tune_options.epsilon_select,
                     "budget for the winner draw (defaults to --epsilon-train)");
    tune->add_option("--alpha", tune_options.alpha, "elastic-net alpha");
    tune->add_option("--grid-multipliers", tune_options.multipliers,
                     "lambda multiples of convex_min/(1-alpha)")->delimiter(',');
    tune->add_option("--delta", tune_options.delta, "tail probability for xi");
    tune->add_option("--split-seed", tune_options.split_seed, "train/validation shuffle seed");
    tune->add_option("--seed", tune_options.seed, "noise + selection seed");
    tune->add_option("--noise", tune_options.family, "noise family: b1 or b2");
    tune->add_option("--top-m", tune_options.top_m, "SNPs kept by screening");
    tune->add_option("--threshold-ratio", tune_options.threshold_ratio,
                     "relative coefficient threshold");
    tune->add_option("--tol", tune_options.solver.tol, "solver tolerance");
    tune->add_option("--max-iter", tune_options.solver.max_iter, "solver iteration cap");
    tune->add_option("--out", tune_options.out, "output JSON path")->required();

    // experiment
    std::string exp_grid, exp_out = "experiment";
    std::size_t exp_replicates = 50, exp_threads = 0;
    std::uint64_t exp_seed = 0;
    CLI::App* experiment = app.add_subcommand("experiment", "replicated recovery-rate grid");
    experiment->add_option("--grid", exp_grid, "experiment grid JSON")->required();
    experiment->add_option("--replicates", exp_replicates, "replicates per cell");
    experiment->add_option("--seed", exp_seed, "master seed");
    experiment->add_option("--out", exp_out, "output directory")->required();
    experiment->add_option("--threads", exp_threads,
                           "worker threads (default: DPERM_THREADS or all cores)");

    // compare-noise
    double cmp_epsilon = 1.0;
    std::size_t cmp_replicates = 500;
    std::uint64_t cmp_seed = 0;
    std::string cmp_out = "compare_noise.csv";
    CLI::App* compare = app.add_subcommand("compare-noise",
                                           "excess objective of B1 vs B2 on a fixed instance");
    compare->add_option("--epsilon", cmp_epsilon, "privacy budget");
    compare->add_option("--replicates", cmp_replicates, "replicates per family");
    compare->add_option("--seed", cmp_seed, "master seed");
    compare->add_option("--out", cmp_out, "output CSV path");

    try {
        app.parse(argc, argv);
        if (generate->parsed()) return cmd_generate(gen_config, gen_seed, gen_out);
        if (screen_cmd->parsed()) return cmd_screen(screen_cohort, screen_top_m, screen_out);
        if (fit->parsed()) return cmd_fit(fit_options);
        if (tune->parsed()) {
            if (tune->count("--epsilon-select") == 0) {
                tune_options.epsilon_select = tune_options.epsilon_train;
            }
            return cmd_tune(tune_options);
        }
        if (experiment->parsed()) {
            return cmd_experiment(exp_grid, exp_replicates, exp_seed, exp_out, exp_threads);
        }
        if (compare->parsed()) {
            return cmd_compare_noise(cmp_epsilon, cmp_replicates, cmp_seed, cmp_out);
        }
        return kExitSchema;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitSchema;
    } catch (const privacy_error& e) {
        std::cerr << "privacy requirement violated [" << e.requirement() << "]: " << e.what()
                  << "\n";
        return kExitPrivacy;
    } catch (const solver_error& e) {
        std::cerr << "solver failure: " << e.what() << "\n";
        return kExitSolver;
    } catch (const io_error& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return kExitIo;
    } catch (const schema_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitSchema;
    } catch (const json::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitSchema;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
