// ivrand: personalized causal inference for longitudinally randomized n-of-1
// trials with imperfect compliance. Subcommands cover single-trial simulation
// and analysis, randomization tests and confidence intervals, and the Monte
// Carlo experiment harness.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ivrand/errors.hpp"
#include "ivrand/estimators.hpp"
#include "ivrand/experiment.hpp"
#include "ivrand/io.hpp"
#include "ivrand/rand_inference.hpp"
#include "ivrand/rng.hpp"
#include "ivrand/sim_models.hpp"

namespace {

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitInference = 4;

int default_threads() {
    if (const char* env = std::getenv("IVRAND_THREADS")) {
        const int t = std::atoi(env);
        if (t >= 1) return t;
    }
    return 1;
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ivrand::DataError("cannot open output file: " + path);
    out << content;
}

void emit(const std::string& out_path, const std::string& content) {
    if (out_path.empty())
        std::cout << content;
    else
        write_text_file(out_path, content);
}

std::string records_sibling(const std::string& records_path, const std::string& suffix) {
    std::filesystem::path p(records_path);
    auto stem = p.stem().string();
    return (p.parent_path() / (stem + suffix)).string();
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
    std::string config_path, out_path, format = "csv";
    std::uint64_t seed = 0;
    bool seed_set = false;
};

int cmd_simulate(const SimulateArgs& args) {
    json cfg_json;
    {
        std::ifstream in(args.config_path);
        if (!in) throw ivrand::DataError("cannot open config file: " + args.config_path);
        try {
            in >> cfg_json;
        } catch (const json::exception& e) {
            throw ivrand::ConfigError(std::string("invalid JSON: ") + e.what());
        }
    }
    ivrand::ModelSpec spec = ivrand::io::model_spec_from_json(cfg_json);
    if (args.seed_set) spec.seed = args.seed;

    ivrand::TrialSeries trial = simulate_trial(spec);
    if (cfg_json.contains("selection")) {
        const auto sel = ivrand::io::selection_spec_from_json(cfg_json.at("selection"));
        auto rng = ivrand::RngStream::from_key(spec.seed, UINT64_C(0x73656c));  // "sel"
        trial = apply_selection(trial, sel, rng);
    }

    std::string content;
    if (args.format == "csv") {
        std::ostringstream os;
        ivrand::io::write_trial_csv(os, trial);
        content = os.str();
    } else {
        content = ivrand::io::trial_to_json(trial, &spec).dump(2) + "\n";
    }
    emit(args.out_path, content);
    return kExitOk;
}

struct AnalyzeArgs {
    std::string trial_path, out_path, format = "json";
    bool adjusted = false;
};

int cmd_analyze(const AnalyzeArgs& args) {
    const auto trial = ivrand::io::load_trial(args.trial_path);
    if (args.adjusted && !trial.has_w())
        throw ivrand::DataError("--adjusted requires a w column in the trial file");
    const auto report = ivrand::full_report(trial, args.adjusted);
    if (args.format == "csv") {
        emit(args.out_path, ivrand::io::estimate_report_csv_header() + "\n" +
                                ivrand::io::estimate_report_csv_row(report) + "\n");
    } else {
        emit(args.out_path, ivrand::io::to_json(report).dump(2) + "\n");
    }
    return kExitOk;
}

struct TestArgs {
    std::string trial_path, out_path;
    std::string statistic = "iv";
    std::string sided = "two-sided";
    std::string p_convention = "plain";
    int n_perm = 10000;
    std::uint64_t seed = 0;
    bool adjusted = false;
};

int cmd_test(const TestArgs& args) {
    auto trial = ivrand::io::load_trial(args.trial_path);
    if (args.adjusted) {
        if (!trial.has_w())
            throw ivrand::DataError("--adjusted requires a w column in the trial file");
        trial = ivrand::residualize_on_w(trial);
    }
    ivrand::RandTestConfig cfg;
    cfg.n_perm = args.n_perm;
    cfg.sidedness = ivrand::sidedness_from_string(args.sided);
    cfg.p_convention = ivrand::p_convention_from_string(args.p_convention);
    cfg.seed = args.seed;
    const auto statistic = args.statistic == "itt" ? ivrand::TestStatistic::ITT
                                                   : ivrand::TestStatistic::IV;
    const auto result = ivrand::rand_test_sharp_null(trial, cfg, statistic);
    emit(args.out_path, ivrand::io::to_json(result).dump(2) + "\n");
    return kExitOk;
}

struct CiArgs {
    std::string trial_path, out_path, format = "json";
    std::vector<double> alphas;
    int n_perm = 2000;
    double grid_step = 0.0;
    std::uint64_t seed = 0;
    std::string p_convention = "plain";
    bool adjusted = false;
};

int cmd_ci(const CiArgs& args) {
    auto trial = ivrand::io::load_trial(args.trial_path);
    if (args.adjusted) {
        if (!trial.has_w())
            throw ivrand::DataError("--adjusted requires a w column in the trial file");
        trial = ivrand::residualize_on_w(trial);
    }
    ivrand::RandTestConfig cfg;
    cfg.n_perm = args.n_perm;
    cfg.p_convention = ivrand::p_convention_from_string(args.p_convention);
    cfg.seed = args.seed;
    const auto profile = ivrand::pvalue_profile(trial, cfg, args.grid_step);

    std::vector<double> alphas = args.alphas;
    if (alphas.empty()) alphas = {0.05, 0.025, 0.005};

    json cis = json::array();
    for (double alpha : alphas) {
        if (!(alpha > 0.0 && alpha < 0.5))
            throw ivrand::ConfigError("--alpha must lie in (0, 0.5)");
        const auto ci = ivrand::ci_from_profile(profile, alpha);
        cis.push_back(json{{"alpha", alpha},
                           {"level", 1.0 - 2.0 * alpha},
                           {"lo", ci.lo},
                           {"hi", ci.hi}});
    }
    json result{{"beta_hat", profile.beta_hat},
                {"k", profile.k_constant},
                {"intervals", cis}};

    if (args.format == "csv") {
        std::ostringstream os;
        ivrand::io::write_profile_csv(os, profile);
        emit(args.out_path, os.str());
        std::cout << result.dump(2) << "\n";
    } else {
        result["profile"] = ivrand::io::to_json(profile);
        emit(args.out_path, result.dump(2) + "\n");
    }
    return kExitOk;
}

struct ExperimentArgs {
    std::string config_path, out_path;
    int threads = default_threads();
    bool stress = false;
    bool allow_nonstationary = false;
};

int cmd_experiment(const ExperimentArgs& args) {
    ivrand::ExperimentConfig cfg = ivrand::io::load_experiment_config(args.config_path);
    cfg.threads = args.threads;
    if (args.stress) {
        if (!args.allow_nonstationary && !cfg.allow_nonstationary)
            throw ivrand::ConfigError(
                "stress requires --allow-non-stationary (unit-root data generation)");
        cfg.allow_nonstationary = true;
        cfg.nonstationary_stress = true;
        if (cfg.models.empty())
            cfg.models = {ivrand::ResponseFamily::Arma11, ivrand::ResponseFamily::Arma10,
                          ivrand::ResponseFamily::Tar1, ivrand::ResponseFamily::Setar1};
    }
    cfg = ivrand::canonicalize(cfg);

    const std::string manifest_path = args.out_path + ".manifest.json";
    const auto manifest = ivrand::io::make_manifest(cfg);

    // Resume: keep records of complete cells, truncate any partial tail cell.
    std::set<std::pair<int, int>> skip;
    std::vector<ivrand::ReplicateRecord> kept;
    if (std::filesystem::exists(args.out_path)) {
        std::ifstream mf(manifest_path);
        if (!mf)
            throw ivrand::DataError("records file exists but manifest is missing: " +
                                    manifest_path);
        json old_manifest;
        try {
            mf >> old_manifest;
        } catch (const json::exception&) {
            throw ivrand::DataError("unreadable manifest: " + manifest_path);
        }
        if (old_manifest.value("config_hash", std::uint64_t{0}) != ivrand::io::config_hash(cfg))
            throw ivrand::DataError(
                "existing records were produced by a different config; refusing to resume");
        std::map<std::pair<int, int>, long> counts;
        const auto existing = ivrand::io::read_records(args.out_path);
        for (const auto& r : existing) counts[{static_cast<int>(r.model), r.setting_id}] += 1;
        for (const auto& [cell, count] : counts)
            if (count == cfg.n_datasets_per_cell) skip.insert(cell);
        for (const auto& r : existing)
            if (skip.count({static_cast<int>(r.model), r.setting_id})) kept.push_back(r);
        std::cerr << "resuming: " << skip.size() << " cell(s) already complete\n";
    }

    std::ofstream out(args.out_path, std::ios::binary | std::ios::trunc);
    if (!out) throw ivrand::DataError("cannot open output file: " + args.out_path);
    write_text_file(manifest_path, manifest.dump(2) + "\n");

    std::vector<ivrand::ReplicateRecord> all = kept;
    for (const auto& r : kept) ivrand::io::write_record_line(out, r);
    out.flush();

    ivrand::run_experiment(
        cfg,
        [&](const ivrand::ReplicateRecord& r) {
            ivrand::io::write_record_line(out, r);
            all.push_back(r);
        },
        skip);
    out.flush();

    const auto curves = ivrand::aggregate_curves(all);
    const auto bias = ivrand::bias_table(all);
    {
        std::ofstream cf(records_sibling(args.out_path, "_curves.csv"), std::ios::binary);
        ivrand::io::write_curves_csv(cf, curves);
        std::ofstream bf(records_sibling(args.out_path, "_bias.csv"), std::ios::binary);
        ivrand::io::write_bias_csv(bf, bias);
    }
    std::cerr << "wrote " << all.size() << " records (" << curves.n_skipped
              << " excluded from aggregation)\n";
    return kExitOk;
}

struct AggregateArgs {
    std::vector<std::string> record_paths;
    std::string out_prefix;
};

int cmd_aggregate(const AggregateArgs& args) {
    std::vector<ivrand::ReplicateRecord> records;
    for (const auto& path : args.record_paths) {
        auto part = ivrand::io::read_records(path);
        records.insert(records.end(), part.begin(), part.end());
    }
    if (records.empty()) throw ivrand::DataError("no records to aggregate");
    const auto curves = ivrand::aggregate_curves(records);
    const auto bias = ivrand::bias_table(records);
    std::ofstream cf(args.out_prefix + "_curves.csv", std::ios::binary);
    if (!cf) throw ivrand::DataError("cannot open " + args.out_prefix + "_curves.csv");
    ivrand::io::write_curves_csv(cf, curves);
    std::ofstream bf(args.out_prefix + "_bias.csv", std::ios::binary);
    if (!bf) throw ivrand::DataError("cannot open " + args.out_prefix + "_bias.csv");
    ivrand::io::write_bias_csv(bf, bias);
    std::cerr << "aggregated " << records.size() << " records (" << curves.n_skipped
              << " excluded)\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"instrumental-variable randomization inference for n-of-1 trials"};
    app.require_subcommand(1);

    SimulateArgs sim;
    auto* sim_cmd = app.add_subcommand("simulate", "generate a synthetic trial from a config");
    sim_cmd->add_option("--config", sim.config_path, "ModelSpec JSON config")->required();
    sim_cmd->add_option("--out", sim.out_path, "output path (default stdout)");
    sim_cmd->add_option("--format", sim.format, "csv or json")
        ->check(CLI::IsMember({"csv", "json"}));
    sim_cmd->add_option("--seed", sim.seed, "override the config seed")
        ->each([&](const std::string&) { sim.seed_set = true; });

    AnalyzeArgs ana;
    auto* ana_cmd = app.add_subcommand("analyze", "estimate causal effects for a trial file");
    ana_cmd->add_option("--trial", ana.trial_path, "trial CSV or JSON")->required();
    ana_cmd->add_option("--out", ana.out_path, "output path (default stdout)");
    ana_cmd->add_option("--format", ana.format, "json or csv")
        ->check(CLI::IsMember({"json", "csv"}));
    ana_cmd->add_flag("--adjusted", ana.adjusted, "residualize x and y on w first");

    TestArgs test;
    auto* test_cmd = app.add_subcommand("test", "randomization test of the sharp null");
    test_cmd->add_option("--trial", test.trial_path, "trial CSV or JSON")->required();
    test_cmd->add_option("--out", test.out_path, "output path (default stdout)");
    test_cmd->add_option("--n-perm", test.n_perm, "number of permutations (>= 100)");
    test_cmd->add_option("--sided", test.sided, "two-sided, greater or less")
        ->check(CLI::IsMember({"two-sided", "greater", "less"}));
    test_cmd->add_option("--p-convention", test.p_convention, "plain or plus-one")
        ->check(CLI::IsMember({"plain", "plus-one"}));
    test_cmd->add_option("--statistic", test.statistic, "iv or itt")
        ->check(CLI::IsMember({"iv", "itt"}));
    test_cmd->add_option("--seed", test.seed, "permutation stream seed");
    test_cmd->add_flag("--adjusted", test.adjusted, "residualize on w before testing");

    CiArgs ci;
    auto* ci_cmd = app.add_subcommand("ci", "randomization confidence intervals by test inversion");
    ci_cmd->add_option("--trial", ci.trial_path, "trial CSV or JSON")->required();
    ci_cmd->add_option("--out", ci.out_path, "output path (default stdout)");
    ci_cmd->add_option("--format", ci.format, "json, or csv for the raw profile")
        ->check(CLI::IsMember({"json", "csv"}));
    ci_cmd->add_option("--alpha", ci.alphas,
                       "one-sided alpha; repeatable (default 0.05 0.025 0.005)");
    ci_cmd->add_option("--n-perm", ci.n_perm, "permutations per grid point (>= 100)");
    ci_cmd->add_option("--grid-step", ci.grid_step,
                       "profile grid step (default |beta_hat|/50, floor 0.01)");
    ci_cmd->add_option("--p-convention", ci.p_convention, "plain or plus-one")
        ->check(CLI::IsMember({"plain", "plus-one"}));
    ci_cmd->add_option("--seed", ci.seed, "permutation stream seed");
    ci_cmd->add_flag("--adjusted", ci.adjusted, "residualize on w before inverting");

    ExperimentArgs exp;
    auto* exp_cmd = app.add_subcommand("experiment", "run the simulation-study grid");
    exp_cmd->add_option("--config", exp.config_path, "experiment JSON config")->required();
    exp_cmd->add_option("--out", exp.out_path, "records output (newline-delimited JSON)")
        ->required();
    exp_cmd->add_option("--threads", exp.threads, "worker threads (env IVRAND_THREADS)");

    AggregateArgs agg;
    auto* agg_cmd = app.add_subcommand("aggregate", "aggregate record files into curve/bias tables");
    agg_cmd->add_option("--records", agg.record_paths, "record file(s); repeatable")
        ->required();
    agg_cmd->add_option("--out-prefix", agg.out_prefix, "output prefix")->required();

    ExperimentArgs stress;
    stress.stress = true;
    auto* stress_cmd =
        app.add_subcommand("stress", "unit-root non-stationarity stress runs");
    stress_cmd->add_option("--config", stress.config_path, "experiment JSON config")->required();
    stress_cmd->add_option("--out", stress.out_path, "records output")->required();
    stress_cmd->add_option("--threads", stress.threads, "worker threads");
    stress_cmd->add_flag("--allow-non-stationary", stress.allow_nonstationary,
                         "acknowledge unit-root data generation");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitConfig;
    }

    try {
        if (sim_cmd->parsed()) return cmd_simulate(sim);
        if (ana_cmd->parsed()) return cmd_analyze(ana);
        if (test_cmd->parsed()) return cmd_test(test);
        if (ci_cmd->parsed()) return cmd_ci(ci);
        if (exp_cmd->parsed()) return cmd_experiment(exp);
        if (agg_cmd->parsed()) return cmd_aggregate(agg);
        if (stress_cmd->parsed()) return cmd_experiment(stress);
    } catch (const ivrand::CannotInvertError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInference;
    } catch (const ivrand::EmptyIntervalError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInference;
    } catch (const ivrand::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const ivrand::DataError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const ivrand::EstimatorError& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return kExitData;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return kExitOk;
}
