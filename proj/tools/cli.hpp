#pragma once

// recband command line: simulate, table1, figure3, posterior-dump.
// Exit codes: 0 success, 2 usage or configuration error, 1 runtime error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "recband/recband.hpp"

#ifndef RECBAND_VERSION
#define RECBAND_VERSION "0.1.0"
#endif

namespace recband::cli {

inline constexpr const char* kVersion = RECBAND_VERSION;
inline constexpr const char* kIntervalNote = "normal approximation: mean +- 1.96 sd / sqrt(replications)";

struct Output {
    std::string path;
    std::ostream& fallback;

    /// Writes `body` to the path, or to the fallback stream when no path was given.
    void emit(const std::string& body) const {
        if (path.empty()) {
            fallback << body;
            return;
        }
        std::ofstream f(path, std::ios::binary);
        if (!f) throw IoFailure("cannot write output file '" + path + "'");
        f << body;
        if (!f) throw IoFailure("write failed for '" + path + "'");
    }

    /// JSON sidecar next to the CSV (path + ".json"); skipped for stdout output.
    void sidecar(const nlohmann::json& meta) const {
        if (path.empty()) return;
        const std::string side = path + ".json";
        std::ofstream f(side, std::ios::binary);
        if (!f) throw IoFailure("cannot write sidecar '" + side + "'");
        f << meta.dump(2) << '\n';
    }
};

inline nlohmann::json base_meta(const std::string& command) {
    return {{"command", command}, {"version", kVersion}, {"confidence_interval", kIntervalNote}};
}

inline presets::ParametricSetting parse_setting(const std::string& s) {
    if (s == "logistic") return presets::ParametricSetting::Logistic;
    if (s == "gamma") return presets::ParametricSetting::Gamma;
    throw ConfigError("unknown setting '" + s + "' (expected logistic or gamma)");
}

inline std::string sibling(const std::string& path, const std::string& suffix) {
    std::filesystem::path p(path);
    auto stem = p.stem().string();
    return (p.parent_path() / (stem + suffix)).string();
}

inline int cli_main(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Recovering bandits simulator", "recband"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_version_flag("--version", std::string(kVersion));

    std::string out_path;
    unsigned workers = default_workers();
    app.add_option("--out,-o", out_path, "Output CSV path (default: stdout)");
    app.add_option("--workers,-j", workers, "Worker threads (default: RECBAND_WORKERS or hardware)")
        ->check(CLI::PositiveNumber);

    auto* sim = app.add_subcommand("simulate", "Run an experiment described by a JSON config file");
    std::string config_path;
    sim->add_option("config", config_path, "Experiment config (JSON)")->required();

    auto* t1 = app.add_subcommand("table1", "Single-step policies on the logistic or gamma benchmark");
    std::string setting;
    int t1_reps = 100;
    std::uint64_t seed = 1;
    long horizon = presets::kHorizon;
    double t1_lengthscale = 5.0;
    t1->add_option("--setting", setting, "logistic | gamma")->required();
    t1->add_option("--reps", t1_reps, "Replications")->check(CLI::PositiveNumber);
    t1->add_option("--seed", seed, "Master seed");
    t1->add_option("--horizon", horizon, "Rounds per episode")->check(CLI::PositiveNumber);
    t1->add_option("--lengthscale", t1_lengthscale, "SE lengthscale of the GP policies")->check(CLI::PositiveNumber);

    auto* f3 = app.add_subcommand("figure3", "Optimistic planning budgets against exhaustive search");
    int k = 10;
    int d = 4;
    std::vector<int> budgets;
    int f3_reps = 20;
    double f3_lengthscale = 4.0;
    f3->add_option("--k", k, "Arms")->check(CLI::PositiveNumber);
    f3->add_option("--d", d, "Lookahead depth")->check(CLI::PositiveNumber);
    f3->add_option("--budgets", budgets, "Comma-separated planner budgets")->delimiter(',')->required();
    f3->add_option("--reps", f3_reps, "Replications")->check(CLI::PositiveNumber);
    f3->add_option("--seed", seed, "Master seed");
    f3->add_option("--horizon", horizon, "Rounds per episode")->check(CLI::PositiveNumber);
    f3->add_option("--lengthscale", f3_lengthscale, "SE lengthscale of arms and prior")->check(CLI::PositiveNumber);

    auto* pd = app.add_subcommand("posterior-dump", "Posterior mean and sd of every arm at checkpoint rounds");
    std::vector<long> checkpoints;
    std::string pd_config;
    std::string pd_setting = "logistic";
    std::uint64_t pd_rep = 0;
    pd->add_option("--t", checkpoints, "Comma-separated checkpoint rounds")->delimiter(',')->required();
    pd->add_option("--config", pd_config, "Experiment config (default: logistic benchmark, 1RGP-UCB)");
    pd->add_option("--setting", pd_setting, "logistic | gamma when no config is given");
    pd->add_option("--seed", seed, "Master seed when no config is given");
    pd->add_option("--rep", pd_rep, "Replication index");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    const Output sink{out_path, out};
    try {
        if (*sim) {
            auto cfg = load_experiment(config_path);
            if (!out_path.empty()) cfg.output_path = out_path;
            const Output target{cfg.output_path, out};
            const auto batch = run_batch(cfg, workers);
            std::ostringstream summary;
            write_aggregate_csv(summary, batch);
            target.emit(summary.str());
            if (!target.path.empty()) {
                std::ostringstream reps;
                write_replications_csv(reps, batch);
                Output{sibling(target.path, ".reps.csv"), out}.emit(reps.str());
            }
            auto meta = base_meta("simulate");
            meta["config"] = experiment_to_json(cfg);
            target.sidecar(meta);
        } else if (*t1) {
            const auto which = parse_setting(setting);
            const auto rows = presets::run_table1(which, t1_reps, seed, workers, horizon, t1_lengthscale);
            std::ostringstream csv;
            presets::write_table1_csv(csv, rows);
            sink.emit(csv.str());
            auto meta = base_meta("table1");
            meta["setting"] = setting;
            meta["replications"] = t1_reps;
            meta["seed"] = seed;
            meta["horizon"] = horizon;
            nlohmann::json configs = nlohmann::json::array();
            for (const auto& [name, policy] : presets::table1_policies(t1_lengthscale))
                configs.push_back({{"name", name},
                                   {"config", experiment_to_json(presets::table1_config(which, policy, t1_reps, seed, horizon))}});
            meta["policies"] = configs;
            sink.sidecar(meta);
        } else if (*f3) {
            for (int b : budgets)
                if (b < 1) throw ConfigError("budgets must be >= 1");
            const auto rows = presets::run_figure3(k, d, budgets, f3_reps, seed, workers, f3_lengthscale, horizon);
            std::ostringstream csv;
            presets::write_figure3_csv(csv, rows);
            sink.emit(csv.str());
            auto meta = base_meta("figure3");
            meta["budgets"] = budgets;
            meta["config"] = experiment_to_json(presets::figure3_config(k, d, f3_lengthscale, f3_reps, seed, horizon));
            meta["exhaustive_row"] = count_leaves(k, d, false) <= kMaxExhaustiveLeaves;
            sink.sidecar(meta);
        } else if (*pd) {
            ExperimentConfig cfg;
            if (!pd_config.empty()) {
                cfg = load_experiment(pd_config);
            } else {
                const auto policies = presets::table1_policies();
                cfg = presets::table1_config(parse_setting(pd_setting), policies.front().second, 1, seed);
            }
            for (long t : checkpoints)
                if (t < 1 || t > cfg.horizon) throw ConfigError("checkpoint " + std::to_string(t) + " outside [1, horizon]");
            const auto rows = presets::run_posterior_dump(cfg, checkpoints, pd_rep);
            std::ostringstream csv;
            presets::write_posterior_dump_csv(csv, rows);
            sink.emit(csv.str());
            auto meta = base_meta("posterior-dump");
            meta["checkpoints"] = checkpoints;
            meta["replication"] = pd_rep;
            meta["config"] = experiment_to_json(cfg);
            sink.sidecar(meta);
        }
    } catch (const std::invalid_argument& e) {
        err << "recband: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "recband: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

}  // namespace recband::cli
