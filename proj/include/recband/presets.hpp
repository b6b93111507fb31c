#pragma once

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>
#include <vector>

#include "recband/fixtures.hpp"
#include "recband/harness.hpp"

namespace recband::presets {

inline constexpr int kZMax = 30;
inline constexpr double kNoiseSd = 0.1;
inline constexpr long kHorizon = 1000;

enum class ParametricSetting { Logistic, Gamma };

struct Table1Row {
    std::string policy;
    Interval reward;
};

/// The three single-step policies compared on a parametric benchmark.
inline std::vector<std::pair<std::string, PolicyConfig>> table1_policies(double lengthscale = 5.0) {
    PolicyConfig ucb;
    ucb.kind = PolicyKind::RgpUcb;
    ucb.kernel = KernelSpec::squared_exponential(lengthscale);
    ucb.noise_sd = kNoiseSd;
    PolicyConfig ts = ucb;
    ts.kind = PolicyKind::RgpTs;
    PolicyConfig ucbz;
    ucbz.kind = PolicyKind::UcbZ;
    ucbz.noise_sd = kNoiseSd;
    return {{"1RGP-UCB", ucb}, {"1RGP-TS", ts}, {"UCB-Z", ucbz}};
}

inline ExperimentConfig table1_config(ParametricSetting setting, const PolicyConfig& policy, int reps,
                                      std::uint64_t seed, long horizon = kHorizon) {
    ExperimentConfig cfg;
    cfg.env.z_max = kZMax;
    cfg.env.noise_sd = kNoiseSd;
    cfg.env.models = setting == ParametricSetting::Logistic ? fixtures::logistic_models() : fixtures::gamma_models();
    cfg.policy = policy;
    cfg.horizon = horizon;
    cfg.replications = reps;
    cfg.master_seed = seed;
    return cfg;
}

inline std::vector<Table1Row> run_table1(ParametricSetting setting, int reps, std::uint64_t seed, unsigned workers,
                                         long horizon = kHorizon, double lengthscale = 5.0) {
    std::vector<Table1Row> rows;
    for (const auto& [name, policy] : table1_policies(lengthscale)) {
        const auto batch = run_batch(table1_config(setting, policy, reps, seed, horizon), workers);
        rows.push_back({name, batch.reward});
    }
    return rows;
}

inline void write_table1_csv(std::ostream& out, const std::vector<Table1Row>& rows) {
    out << "policy,mean_reward,ci_lo,ci_hi\n";
    for (const auto& r : rows) out << r.policy << ',' << fmt(r.reward.mean) << ',' << fmt(r.reward.lo) << ',' << fmt(r.reward.hi) << '\n';
}

struct Figure3Row {
    std::string planner;
    int budget = 0;
    Interval reward;
    /// d_N averaged over every lookahead of every replication.
    double mean_depth = -1.0;
    /// d_N of the last lookahead, averaged over replications.
    double mean_final_depth = -1.0;
    double early_stop_rate = 0.0;
};

/// GP-sampled arms (SE prior) with Thompson sampling on the matching prior.
inline ExperimentConfig figure3_config(int n_arms, int d, double lengthscale, int reps, std::uint64_t seed,
                                       long horizon = kHorizon) {
    ExperimentConfig cfg;
    cfg.env.z_max = kZMax;
    cfg.env.noise_sd = kNoiseSd;
    cfg.env.models.assign(static_cast<std::size_t>(n_arms), ModelSpec::gp_sample(KernelSpec::squared_exponential(lengthscale)));
    cfg.policy.kind = PolicyKind::RgpTs;
    cfg.policy.d = d;
    cfg.policy.kernel = KernelSpec::squared_exponential(lengthscale);
    cfg.policy.noise_sd = kNoiseSd;
    cfg.horizon = horizon;
    cfg.replications = reps;
    cfg.master_seed = seed;
    return cfg;
}

inline Figure3Row figure3_row(const ExperimentConfig& cfg, unsigned workers) {
    const auto batch = run_batch(cfg, workers);
    Figure3Row row;
    row.planner = cfg.policy.planner.kind == PlannerKind::Optimistic ? "optimistic" : "exhaustive";
    row.budget = cfg.policy.planner.budget;
    row.reward = batch.reward;
    if (cfg.policy.planner.kind == PlannerKind::Optimistic) {
        double depth = 0.0, final_depth = 0.0, early = 0.0;
        for (const auto& r : batch.reps) {
            depth += r.mean_depth_reached;
            final_depth += r.final_depth_reached;
            early += r.early_stop_rate;
        }
        const double n = static_cast<double>(batch.reps.size());
        row.mean_depth = depth / n;
        row.mean_final_depth = final_depth / n;
        row.early_stop_rate = early / n;
    }
    return row;
}

/// One row per optimistic budget, plus an exhaustive row when the tree is small
/// enough to enumerate. All rows share seeds, hence environments.
inline std::vector<Figure3Row> run_figure3(int n_arms, int d, const std::vector<int>& budgets, int reps,
                                           std::uint64_t seed, unsigned workers, double lengthscale = 4.0,
                                           long horizon = kHorizon) {
    std::vector<Figure3Row> rows;
    for (int budget : budgets) {
        auto cfg = figure3_config(n_arms, d, lengthscale, reps, seed, horizon);
        cfg.policy.planner = {PlannerKind::Optimistic, budget};
        rows.push_back(figure3_row(cfg, workers));
    }
    if (count_leaves(n_arms, d, false) <= kMaxExhaustiveLeaves) {
        auto cfg = figure3_config(n_arms, d, lengthscale, reps, seed, horizon);
        rows.push_back(figure3_row(cfg, workers));
    }
    return rows;
}

inline void write_figure3_csv(std::ostream& out, const std::vector<Figure3Row>& rows) {
    out << "planner,budget,mean_reward,ci_lo,ci_hi,mean_depth,mean_final_depth,early_stop_rate\n";
    for (const auto& r : rows)
        out << r.planner << ',' << r.budget << ',' << fmt(r.reward.mean) << ',' << fmt(r.reward.lo) << ','
            << fmt(r.reward.hi) << ',' << fmt(r.mean_depth) << ',' << fmt(r.mean_final_depth) << ','
            << fmt(r.early_stop_rate) << '\n';
}

struct PosteriorDumpRow {
    long t = 0;
    int arm = 0;
    int z = 0;
    double mean = 0.0;
    double sd = 0.0;
    double true_f = 0.0;
    int n_obs_at_z = 0;
};

/// Posterior mean and sd of every arm over the grid after the block that ends
/// at or just past each checkpoint round.
inline std::vector<PosteriorDumpRow> run_posterior_dump(const ExperimentConfig& cfg, std::vector<long> checkpoints,
                                                        std::uint64_t rep = 0) {
    if (cfg.policy.kind != PolicyKind::RgpUcb && cfg.policy.kind != PolicyKind::RgpTs)
        throw ConfigError("posterior dump needs a GP policy");
    std::sort(checkpoints.begin(), checkpoints.end());
    std::vector<PosteriorDumpRow> rows;
    std::size_t next = 0;
    run_episode(cfg, rep, [&](const Policy& policy, const World& world, const EnvState& state) {
        const long played = state.t - 1;
        while (next < checkpoints.size() && checkpoints[next] <= played) {
            const auto& posts = policy.posteriors();
            for (int j = 0; j < world.n_arms(); ++j) {
                const auto& post = posts[static_cast<std::size_t>(j)];
                for (int z = 0; z <= world.z_max; ++z) {
                    const auto mv = post.mean_var(z);
                    const auto n = std::count(post.obs_z().begin(), post.obs_z().end(), z);
                    rows.push_back({checkpoints[next], j, z, mv.mean, std::sqrt(mv.var),
                                    world.models[static_cast<std::size_t>(j)].value(z), static_cast<int>(n)});
                }
            }
            ++next;
        }
    });
    return rows;
}

inline void write_posterior_dump_csv(std::ostream& out, const std::vector<PosteriorDumpRow>& rows) {
    out << "t,arm,z,mean,sd,true_f,n_obs\n";
    for (const auto& r : rows)
        out << r.t << ',' << r.arm << ',' << r.z << ',' << fmt(r.mean) << ',' << fmt(r.sd) << ',' << fmt(r.true_f)
            << ',' << r.n_obs_at_z << '\n';
}

}  // namespace recband::presets
