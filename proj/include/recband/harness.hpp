#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <functional>
#include <iomanip>
#include <mutex>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "recband/environment.hpp"
#include "recband/errors.hpp"
#include "recband/lookahead.hpp"
#include "recband/policies.hpp"
#include "recband/rng.hpp"

namespace recband {

struct ExperimentConfig {
    EnvConfig env;
    PolicyConfig policy;
    long horizon = 1000;
    int replications = 1;
    std::uint64_t master_seed = 0;
    std::string output_path;

    void validate() const {
        env.validate();
        policy.validate(env.n_arms());
        if (horizon < 1) throw ConfigError("horizon must be >= 1");
        if (replications < 1) throw ConfigError("replications must be >= 1");
    }
};

struct RoundRecord {
    long t = 0;
    int arm = 0;
    int z = 0;
    double reward = 0.0;
    /// f_arm(z), the noiseless reward.
    double expected = 0.0;
    /// max_j f_j(Z_{j,t}) at the realized covariates.
    double best_instant = 0.0;
};

struct BlockRecord {
    long h = 0;
    long t_start = 0;
    /// Rounds actually played; shorter than d only for a final partial block.
    int depth = 0;
    double m_star = 0.0;
    double m_played = 0.0;
    int depth_reached = -1;
    bool stopped_early = false;
};

struct TrajectoryRecord {
    int d = 1;
    std::vector<RoundRecord> rounds;
    std::vector<BlockRecord> blocks;
};

struct RegretCurve {
    /// Cumulative d-step lookahead regret after each block.
    std::vector<double> lookahead;
    /// Cumulative instantaneous regret after each round.
    std::vector<double> instantaneous;
    double total_reward = 0.0;
    double total_expected_reward = 0.0;
};

/// Called after every block with the policy (posteriors updated) and the state
/// at the start of the next block.
using BlockObserver = std::function<void(const Policy&, const World&, const EnvState&)>;

inline EnvConfig seeded_env(const ExperimentConfig& cfg) {
    EnvConfig env = cfg.env;
    env.master_seed = cfg.master_seed;
    return env;
}

/// One episode: every d rounds the policy picks a leaf, its arms are played, the
/// lookahead oracle is evaluated at the same root covariates, and posteriors are
/// updated. A final partial block plays and scores only the remaining rounds.
inline TrajectoryRecord run_episode(const ExperimentConfig& cfg, std::uint64_t rep_index,
                                    const BlockObserver& observer = {}) {
    cfg.validate();
    const World world = realize_world(seeded_env(cfg), rep_index);
    const int k = world.n_arms();
    std::vector<RandomStream> noise;
    noise.reserve(static_cast<std::size_t>(k));
    for (int j = 0; j < k; ++j)
        noise.push_back(derive_stream(cfg.master_seed, rep_index, static_cast<std::uint64_t>(j), StreamPurpose::RewardNoise));
    Policy policy(cfg.policy, k, world.z_max, cfg.horizon,
                  derive_stream(cfg.master_seed, rep_index, 0, StreamPurpose::Policy), &world);

    TrajectoryRecord traj;
    traj.d = cfg.policy.d;
    traj.rounds.reserve(static_cast<std::size_t>(cfg.horizon));
    EnvState state{cfg.env.start_z(), 1};
    for (long h = 0; state.t <= cfg.horizon; ++h) {
        const int depth = static_cast<int>(std::min<long>(cfg.policy.d, cfg.horizon - state.t + 1));
        const auto plan = policy.plan(state.z, state.t);
        const auto oracle = oracle_select(world.models, state.z, world.z_max, depth, cfg.policy.single_play);
        BlockRecord block{h, state.t, depth, oracle.value, 0.0, plan.depth_reached, plan.stopped_early};
        for (int l = 0; l < depth; ++l) {
            const int arm = plan.arms.at(static_cast<std::size_t>(l));
            const int z = state.z[static_cast<std::size_t>(arm)];
            double best_instant = -std::numeric_limits<double>::infinity();
            for (int j = 0; j < k; ++j)
                best_instant = std::max(best_instant, world.models[static_cast<std::size_t>(j)].value(state.z[static_cast<std::size_t>(j)]));
            auto step = env_step(state, world, arm, noise[static_cast<std::size_t>(arm)]);
            traj.rounds.push_back({state.t, arm, z, step.reward, step.expected, best_instant});
            policy.observe(arm, z, step.reward);
            block.m_played += step.expected;
            state = std::move(step.next);
        }
        policy.end_block();
        traj.blocks.push_back(block);
        if (observer) observer(policy, world, state);
    }
    return traj;
}

inline RegretCurve regret_from_trajectory(const TrajectoryRecord& traj) {
    RegretCurve curve;
    double cum = 0.0;
    curve.lookahead.reserve(traj.blocks.size());
    for (const auto& b : traj.blocks) {
        cum += b.m_star - b.m_played;
        curve.lookahead.push_back(cum);
    }
    cum = 0.0;
    curve.instantaneous.reserve(traj.rounds.size());
    for (const auto& r : traj.rounds) {
        cum += r.best_instant - r.expected;
        curve.instantaneous.push_back(cum);
        curve.total_reward += r.reward;
        curve.total_expected_reward += r.expected;
    }
    return curve;
}

struct ReplicationSummary {
    std::uint64_t rep = 0;
    double total_reward = 0.0;
    double total_expected_reward = 0.0;
    double lookahead_regret = 0.0;
    double instantaneous_regret = 0.0;
    /// Mean optimistic-planner depth d_N over blocks; -1 without a planner.
    double mean_depth_reached = -1.0;
    int final_depth_reached = -1;
    double early_stop_rate = 0.0;
};

/// Mean with a normal-approximation 95% interval, mean +- 1.96 sd / sqrt(n).
struct Interval {
    double mean = 0.0;
    double lo = 0.0;
    double hi = 0.0;
    double sd = 0.0;
    std::size_t n = 0;
};

inline Interval normal_interval(const std::vector<double>& xs) {
    Interval out;
    out.n = xs.size();
    if (xs.empty()) return out;
    double sum = 0.0;
    for (double x : xs) sum += x;
    out.mean = sum / static_cast<double>(xs.size());
    if (xs.size() > 1) {
        double ss = 0.0;
        for (double x : xs) ss += (x - out.mean) * (x - out.mean);
        out.sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
    }
    const double half = 1.96 * out.sd / std::sqrt(static_cast<double>(xs.size()));
    out.lo = out.mean - half;
    out.hi = out.mean + half;
    return out;
}

struct BatchResult {
    std::vector<ReplicationSummary> reps;
    Interval reward;
    Interval lookahead_regret;
    Interval instantaneous_regret;
    /// Mean cumulative instantaneous regret after each round, averaged over replications.
    std::vector<double> mean_instantaneous_curve;
};

inline ReplicationSummary summarize(std::uint64_t rep, const TrajectoryRecord& traj) {
    const auto curve = regret_from_trajectory(traj);
    ReplicationSummary s;
    s.rep = rep;
    s.total_reward = curve.total_reward;
    s.total_expected_reward = curve.total_expected_reward;
    s.lookahead_regret = curve.lookahead.empty() ? 0.0 : curve.lookahead.back();
    s.instantaneous_regret = curve.instantaneous.empty() ? 0.0 : curve.instantaneous.back();
    double depth_sum = 0.0;
    int planned = 0;
    int early = 0;
    for (const auto& b : traj.blocks) {
        if (b.depth_reached < 0) continue;
        depth_sum += b.depth_reached;
        ++planned;
        early += b.stopped_early ? 1 : 0;
    }
    if (planned > 0) {
        s.mean_depth_reached = depth_sum / planned;
        s.final_depth_reached = traj.blocks.back().depth_reached;
        s.early_stop_rate = static_cast<double>(early) / planned;
    }
    return s;
}

/// Worker count from RECBAND_WORKERS, else the hardware concurrency.
inline unsigned default_workers() {
    if (const char* env = std::getenv("RECBAND_WORKERS")) {
        const long v = std::strtol(env, nullptr, 10);
        if (v >= 1) return static_cast<unsigned>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

/// Runs fn(i) for i in [0, n) on `workers` threads. The first exception is rethrown.
template <class Fn>
void parallel_for(std::size_t n, unsigned workers, Fn&& fn) {
    workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(1, n))));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

/// All replications on independent sub-streams. Results are keyed by replication
/// index before reduction, so output does not depend on the worker count.
inline BatchResult run_batch(const ExperimentConfig& cfg, unsigned workers = default_workers()) {
    cfg.validate();
    const auto n = static_cast<std::size_t>(cfg.replications);
    std::vector<ReplicationSummary> reps(n);
    std::vector<std::vector<double>> curves(n);
    parallel_for(n, workers, [&](std::size_t i) {
        const auto traj = run_episode(cfg, i);
        reps[i] = summarize(i, traj);
        curves[i] = regret_from_trajectory(traj).instantaneous;
    });

    BatchResult out;
    out.reps = std::move(reps);
    std::vector<double> reward, lookahead, inst;
    for (const auto& r : out.reps) {
        reward.push_back(r.total_reward);
        lookahead.push_back(r.lookahead_regret);
        inst.push_back(r.instantaneous_regret);
    }
    out.reward = normal_interval(reward);
    out.lookahead_regret = normal_interval(lookahead);
    out.instantaneous_regret = normal_interval(inst);
    out.mean_instantaneous_curve.assign(static_cast<std::size_t>(cfg.horizon), 0.0);
    for (const auto& c : curves)
        for (std::size_t t = 0; t < c.size(); ++t) out.mean_instantaneous_curve[t] += c[t] / static_cast<double>(n);
    return out;
}

/// Fixed-format number for CSV output.
inline std::string fmt(double x) {
    std::ostringstream os;
    os << std::setprecision(10) << x;
    return os.str();
}

inline void write_replications_csv(std::ostream& out, const BatchResult& batch) {
    out << "rep,total_reward,total_expected_reward,lookahead_regret,instantaneous_regret,mean_depth_reached,"
           "final_depth_reached\n";
    for (const auto& r : batch.reps)
        out << r.rep << ',' << fmt(r.total_reward) << ',' << fmt(r.total_expected_reward) << ','
            << fmt(r.lookahead_regret) << ',' << fmt(r.instantaneous_regret) << ',' << fmt(r.mean_depth_reached)
            << ',' << r.final_depth_reached << '\n';
}

inline void write_aggregate_csv(std::ostream& out, const BatchResult& batch) {
    out << "metric,mean,ci_lo,ci_hi\n";
    auto row = [&out](const char* name, const Interval& iv) {
        out << name << ',' << fmt(iv.mean) << ',' << fmt(iv.lo) << ',' << fmt(iv.hi) << '\n';
    };
    row("total_reward", batch.reward);
    row("lookahead_regret", batch.lookahead_regret);
    row("instantaneous_regret", batch.instantaneous_regret);
}

}  // namespace recband
