#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "recband/environment.hpp"
#include "recband/errors.hpp"
#include "recband/gp.hpp"
#include "recband/lookahead.hpp"
#include "recband/planner.hpp"
#include "recband/rng.hpp"

namespace recband {

enum class PolicyKind { RgpUcb, RgpTs, UcbZ, DStepOracle };
enum class PlannerKind { Exhaustive, Optimistic };

struct PlannerConfig {
    PlannerKind kind = PlannerKind::Exhaustive;
    int budget = 0;
};

struct PolicyConfig {
    PolicyKind kind = PolicyKind::RgpUcb;
    int d = 1;
    bool single_play = false;
    PlannerConfig planner{};
    KernelSpec kernel{};
    double noise_sd = 0.1;

    void validate(int n_arms) const {
        if (d < 1) throw ConfigError("lookahead depth d must be >= 1");
        if (single_play && d > n_arms) throw DepthExceedsArms(d, n_arms);
        if (!(noise_sd >= 0.0)) throw ConfigError("policy noise_sd must be >= 0");
        if (planner.kind == PlannerKind::Optimistic) {
            if (kind != PolicyKind::RgpTs)
                throw ConfigError("optimistic planning is only available for Thompson sampling");
            if (single_play) throw ConfigError("optimistic planning searches the multiple-play tree only");
            if (planner.budget < 1) throw ConfigError("optimistic planner budget must be >= 1");
        }
        if (kind == PolicyKind::UcbZ && d != 1) throw ConfigError("UCB-Z selects one arm per round; use d = 1");
        if (kind == PolicyKind::RgpUcb || kind == PolicyKind::RgpTs) kernel.validate();
    }
};

inline std::string to_string(PolicyKind kind) {
    switch (kind) {
        case PolicyKind::RgpUcb: return "rgp_ucb";
        case PolicyKind::RgpTs: return "rgp_ts";
        case PolicyKind::UcbZ: return "ucb_z";
        case PolicyKind::DStepOracle: return "oracle";
    }
    return "unknown";
}

/// Confidence width sqrt(2 log((K |Z|)^d (t + d - 1)^2)).
inline double alpha_t(int n_arms, int z_card, int d, long t) {
    const double log_term = d * std::log(static_cast<double>(n_arms) * z_card) + 2.0 * std::log(static_cast<double>(t + d - 1));
    return std::sqrt(std::max(0.0, 2.0 * log_term));
}

/// Leaf maximizing eta + alpha_t * sqrt(var) over the exhaustive lookahead tree.
inline LeafPath ucb_select(std::span<const GpPosterior> posteriors, std::span<const int> root_z, int z_max,
                           const PolicyConfig& cfg, long t) {
    const int k = static_cast<int>(root_z.size());
    const double alpha = alpha_t(k, z_max + 1, cfg.d, t);
    if (cfg.d == 1) {
        // One step: per-arm score without the generic leaf machinery.
        return best_leaf_additive(root_z, 1, z_max, false, [&](int arm, int z) {
                   const auto mv = posteriors[static_cast<std::size_t>(arm)].mean_var(z);
                   return mv.mean + alpha * std::sqrt(mv.var);
               }).leaf;
    }
    return best_leaf_exhaustive(
               root_z, cfg.d, z_max,
               [&](std::span<const LeafStep> steps) {
                   const auto stats = leaf_stats(steps, posteriors);
                   return stats.eta + alpha * std::sqrt(stats.var);
               },
               cfg.single_play)
        .leaf;
}

struct TsSelection {
    LeafPath leaf;
    SampleTable table;
    std::optional<PlanResult> plan;
};

/// One joint posterior draw per arm at its reachable lookahead covariates.
inline SampleTable sample_lookahead_table(std::span<const GpPosterior> posteriors, std::span<const int> root_z,
                                          int z_max, int d, RandomStream& rng) {
    SampleTable table(static_cast<int>(root_z.size()), z_max);
    for (std::size_t j = 0; j < root_z.size(); ++j) {
        const auto points = lookahead_covariates(root_z[j], d, z_max);
        const auto draw = posterior_joint_sample(posteriors[j], points, rng);
        for (std::size_t i = 0; i < points.size(); ++i) table.set(static_cast<int>(j), points[i], draw[i]);
    }
    return table;
}

inline TsSelection ts_select(std::span<const GpPosterior> posteriors, std::span<const int> root_z, int z_max,
                             const PolicyConfig& cfg, RandomStream& rng) {
    TsSelection out;
    out.table = sample_lookahead_table(posteriors, root_z, z_max, cfg.d, rng);
    if (cfg.planner.kind == PlannerKind::Optimistic) {
        out.plan = op_search(out.table, root_z, cfg.d, cfg.planner.budget);
        out.leaf = out.plan->leaf;
    } else {
        const auto& table = out.table;
        out.leaf = best_leaf_additive(root_z, cfg.d, z_max, cfg.single_play,
                                      [&table](int arm, int z) { return table.at(arm, z); })
                       .leaf;
    }
    return out;
}

/// Exploration bonus sqrt(noise^2 (2 + 6 log T) / n).
inline double ucbz_bonus(double noise_sd, long horizon, long count) {
    return std::sqrt(noise_sd * noise_sd * (2.0 + 6.0 * std::log(static_cast<double>(horizon))) / static_cast<double>(count));
}

/// Per-(arm, z) sample means and counts for the UCB-Z baseline, plus its
/// initialization schedule.
///
/// Initialization visits pairs in arm-major, increasing-z order. For the first
/// unsampled pair (j, z*): play j if Z_j = z* or Z_j > z* (a reset), otherwise
/// wait by playing another arm, preferring arms whose current pair is already
/// sampled and, among those, the largest covariate. Each pair costs at most
/// |Z| + 1 rounds. With one arm only z = 0 is reachable and no schedule is run.
class UcbZState {
public:
    UcbZState(int n_arms, int z_max)
        : n_arms_(n_arms), z_max_(z_max),
          counts_(static_cast<std::size_t>(n_arms) * (z_max + 1), 0),
          means_(static_cast<std::size_t>(n_arms) * (z_max + 1), 0.0) {}

    [[nodiscard]] long count(int arm, int z) const { return counts_[index(arm, z)]; }
    [[nodiscard]] double mean(int arm, int z) const { return means_[index(arm, z)]; }
    [[nodiscard]] long total() const noexcept { return total_; }
    [[nodiscard]] int n_arms() const noexcept { return n_arms_; }
    [[nodiscard]] int z_max() const noexcept { return z_max_; }

    /// Pair (arm, z) the initialization schedule still needs, if any.
    [[nodiscard]] std::optional<std::pair<int, int>> pending_pair() const {
        if (n_arms_ == 1) return std::nullopt;
        for (; cursor_ < counts_.size(); ++cursor_)
            if (counts_[cursor_] == 0)
                return std::pair<int, int>{static_cast<int>(cursor_ / (z_max_ + 1)), static_cast<int>(cursor_ % (z_max_ + 1))};
        return std::nullopt;
    }

    [[nodiscard]] bool initialized() const { return !pending_pair().has_value(); }

    void update(int arm, int z, double y) {
        const auto i = index(arm, z);
        ++counts_[i];
        means_[i] += (y - means_[i]) / static_cast<double>(counts_[i]);
        ++total_;
    }

private:
    [[nodiscard]] std::size_t index(int arm, int z) const {
        return static_cast<std::size_t>(arm) * (z_max_ + 1) + static_cast<std::size_t>(z);
    }

    int n_arms_;
    int z_max_;
    std::vector<long> counts_;
    std::vector<double> means_;
    long total_ = 0;
    mutable std::size_t cursor_ = 0;
};

inline int ucbz_select(const UcbZState& state, std::span<const int> root_z, long /*t*/, long horizon, double noise_sd) {
    const int k = state.n_arms();
    if (auto pending = state.pending_pair()) {
        const auto [arm, target] = *pending;
        if (root_z[static_cast<std::size_t>(arm)] >= target) return arm;
        int filler = -1;
        bool filler_sampled = false;
        for (int i = 0; i < k; ++i) {
            if (i == arm) continue;
            const int zi = root_z[static_cast<std::size_t>(i)];
            const bool sampled = state.count(i, zi) > 0;
            if (filler < 0 || (sampled && !filler_sampled) ||
                (sampled == filler_sampled && zi > root_z[static_cast<std::size_t>(filler)])) {
                filler = i;
                filler_sampled = sampled;
            }
        }
        return filler;
    }
    int best = 0;
    double best_score = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < k; ++j) {
        const int z = root_z[static_cast<std::size_t>(j)];
        const long n = state.count(j, z);
        const double score = n == 0 ? std::numeric_limits<double>::infinity()
                                    : state.mean(j, z) + ucbz_bonus(noise_sd, horizon, n);
        if (score > best_score) {
            best_score = score;
            best = j;
        }
    }
    return best;
}

/// Best leaf under the true recovery functions and its value M*.
inline BestLeaf oracle_select(const std::vector<RecoveryModel>& models, std::span<const int> root_z, int z_max, int d,
                              bool single_play) {
    return best_leaf_additive(root_z, d, z_max, single_play,
                              [&models](int arm, int z) { return models[static_cast<std::size_t>(arm)].value(z); });
}

/// A policy instance for one episode: owns its posteriors, UCB-Z statistics and
/// sampling stream.
class Policy {
public:
    struct Plan {
        std::vector<int> arms;
        /// Optimistic planner diagnostics; -1 when no planner ran.
        int depth_reached = -1;
        int nodes_expanded = 0;
        bool stopped_early = false;
    };

    Policy(PolicyConfig cfg, int n_arms, int z_max, long horizon, RandomStream rng, const World* world = nullptr)
        : cfg_(cfg), n_arms_(n_arms), z_max_(z_max), horizon_(horizon), rng_(rng), world_(world),
          ucbz_(n_arms, z_max) {
        cfg_.validate(n_arms);
        if (cfg_.kind == PolicyKind::DStepOracle && world_ == nullptr)
            throw ConfigError("oracle policy needs the true recovery functions");
        if (cfg_.kind == PolicyKind::RgpUcb || cfg_.kind == PolicyKind::RgpTs) {
            posteriors_.reserve(static_cast<std::size_t>(n_arms));
            for (int j = 0; j < n_arms; ++j) posteriors_.emplace_back(cfg_.kernel, cfg_.noise_sd, z_max);
        }
    }

    [[nodiscard]] const PolicyConfig& config() const noexcept { return cfg_; }
    [[nodiscard]] const std::vector<GpPosterior>& posteriors() const noexcept { return posteriors_; }
    [[nodiscard]] const UcbZState& ucbz_state() const noexcept { return ucbz_; }

    /// Arms to play for the block starting at round t from covariates root_z.
    Plan plan(std::span<const int> root_z, long t) {
        Plan out;
        switch (cfg_.kind) {
            case PolicyKind::RgpUcb:
                out.arms = ucb_select(posteriors_, root_z, z_max_, cfg_, t).arms();
                break;
            case PolicyKind::RgpTs: {
                auto sel = ts_select(posteriors_, root_z, z_max_, cfg_, rng_);
                out.arms = sel.leaf.arms();
                if (sel.plan) {
                    out.depth_reached = sel.plan->depth_reached;
                    out.nodes_expanded = sel.plan->nodes_expanded;
                    out.stopped_early = sel.plan->stopped_early;
                }
                break;
            }
            case PolicyKind::UcbZ:
                out.arms = {ucbz_select(ucbz_, root_z, t, horizon_, cfg_.noise_sd)};
                break;
            case PolicyKind::DStepOracle:
                out.arms = oracle_select(world_->models, root_z, z_max_, cfg_.d, cfg_.single_play).leaf.arms();
                break;
        }
        return out;
    }

    /// Record a reward. GP posteriors are only updated by end_block().
    void observe(int arm, int z, double y) {
        if (cfg_.kind == PolicyKind::UcbZ) {
            ucbz_.update(arm, z, y);
        } else if (!posteriors_.empty()) {
            pending_.push_back({arm, z, y});
        }
    }

    void end_block() {
        for (const auto& p : pending_) posteriors_[static_cast<std::size_t>(p.arm)].append(p.z, p.y);
        pending_.clear();
    }

private:
    struct PendingObs {
        int arm;
        int z;
        double y;
    };

    PolicyConfig cfg_;
    int n_arms_;
    int z_max_;
    long horizon_;
    RandomStream rng_;
    const World* world_;
    std::vector<GpPosterior> posteriors_;
    UcbZState ucbz_;
    std::vector<PendingObs> pending_;
};

}  // namespace recband
