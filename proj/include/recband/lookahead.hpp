#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "recband/environment.hpp"
#include "recband/errors.hpp"
#include "recband/gp.hpp"

namespace recband {

/// One play inside a lookahead: the arm and its covariate at the time it is played.
struct LeafStep {
    int arm = 0;
    int z = 0;
    bool operator==(const LeafStep&) const = default;
};

/// A root-to-leaf path of the d-step lookahead tree.
struct LeafPath {
    std::vector<LeafStep> steps;
    std::vector<int> root_z;

    [[nodiscard]] std::size_t depth() const noexcept { return steps.size(); }
    [[nodiscard]] std::vector<int> arms() const {
        std::vector<int> out;
        out.reserve(steps.size());
        for (const auto& s : steps) out.push_back(s.arm);
        return out;
    }
    bool operator==(const LeafPath&) const = default;
};

/// Posterior mean and variance of the summed reward along a leaf path.
struct LeafStats {
    double eta = 0.0;
    double var = 0.0;
};

inline constexpr double kMaxExhaustiveLeaves = 1e7;

/// K^d for multiple play, K (K-1) ... (K-d+1) for single play.
inline double count_leaves(int n_arms, int depth, bool single_play) {
    double count = 1.0;
    for (int l = 0; l < depth; ++l) count *= single_play ? static_cast<double>(n_arms - l) : static_cast<double>(n_arms);
    return count;
}

inline void check_lookahead_args(int n_arms, int depth, bool single_play) {
    if (n_arms < 1) throw std::invalid_argument("lookahead needs at least one arm");
    if (depth < 1) throw std::invalid_argument("lookahead depth must be >= 1");
    if (single_play && depth > n_arms) throw DepthExceedsArms(depth, n_arms);
}

/// Arm sequence replayed through the covariate dynamics from `root_z`.
inline LeafPath replay_path(std::span<const int> root_z, std::span<const int> arms, int z_max) {
    LeafPath path;
    path.root_z.assign(root_z.begin(), root_z.end());
    std::vector<int> z = path.root_z;
    for (int arm : arms) {
        path.steps.push_back({arm, z.at(static_cast<std::size_t>(arm))});
        z = advance_covariates(z, arm, z_max);
    }
    return path;
}

namespace detail {

template <class Visit>
void visit_leaves(std::vector<std::vector<int>>& z_stack, std::vector<LeafStep>& steps, std::vector<char>& used,
                  std::size_t level, int z_max, bool single_play, Visit& visit) {
    if (level == steps.size()) {
        visit(std::span<const LeafStep>(steps));
        return;
    }
    const auto& z = z_stack[level];
    auto& next = z_stack[level + 1];
    for (std::size_t a = 0; a < z.size(); ++a) {
        if (single_play && used[a]) continue;
        steps[level] = {static_cast<int>(a), z[a]};
        for (std::size_t j = 0; j < z.size(); ++j) next[j] = std::min(z_max, z[j] + 1);
        next[a] = 0;
        used[a] = 1;
        visit_leaves(z_stack, steps, used, level + 1, z_max, single_play, visit);
        used[a] = 0;
    }
}

}  // namespace detail

/// Calls visit(span<const LeafStep>) for every leaf in lexicographic arm order.
template <class Visit>
void for_each_leaf(std::span<const int> root_z, int depth, int z_max, bool single_play, Visit&& visit) {
    check_lookahead_args(static_cast<int>(root_z.size()), depth, single_play);
    std::vector<std::vector<int>> z_stack(static_cast<std::size_t>(depth) + 1,
                                          std::vector<int>(root_z.begin(), root_z.end()));
    std::vector<LeafStep> steps(static_cast<std::size_t>(depth));
    std::vector<char> used(root_z.size(), 0);
    detail::visit_leaves(z_stack, steps, used, 0, z_max, single_play, visit);
}

inline std::vector<LeafPath> enumerate_leaves(std::span<const int> root_z, int depth, int z_max, bool single_play) {
    check_lookahead_args(static_cast<int>(root_z.size()), depth, single_play);
    const double count = count_leaves(static_cast<int>(root_z.size()), depth, single_play);
    if (count > kMaxExhaustiveLeaves) throw TreeTooLarge(count);
    std::vector<LeafPath> leaves;
    leaves.reserve(static_cast<std::size_t>(count));
    for_each_leaf(root_z, depth, z_max, single_play, [&](std::span<const LeafStep> steps) {
        leaves.push_back({std::vector<LeafStep>(steps.begin(), steps.end()),
                          std::vector<int>(root_z.begin(), root_z.end())});
    });
    return leaves;
}

/// M_i: the sum of true recovery values along the path.
inline double leaf_reward_true(std::span<const LeafStep> steps, const std::vector<RecoveryModel>& models) {
    double total = 0.0;
    for (const auto& s : steps) total += models.at(static_cast<std::size_t>(s.arm)).value(s.z);
    return total;
}

inline double leaf_reward_true(const LeafPath& path, const std::vector<RecoveryModel>& models) {
    return leaf_reward_true(std::span<const LeafStep>(path.steps), models);
}

/// Mean and variance of the leaf reward under posteriors frozen at the root.
/// Plays of distinct arms are independent; repeated plays of one arm contribute
/// that arm's posterior covariance.
inline LeafStats leaf_stats(std::span<const LeafStep> steps, std::span<const GpPosterior> posteriors) {
    LeafStats stats;
    for (std::size_t l = 0; l < steps.size(); ++l) {
        const auto& post = posteriors[static_cast<std::size_t>(steps[l].arm)];
        const auto mv = post.mean_var(steps[l].z);
        stats.eta += mv.mean;
        stats.var += mv.var;
        for (std::size_t q = l + 1; q < steps.size(); ++q)
            if (steps[q].arm == steps[l].arm) stats.var += 2.0 * post.cov(steps[l].z, steps[q].z);
    }
    stats.var = std::max(0.0, stats.var);
    return stats;
}

inline LeafStats leaf_stats(const LeafPath& path, std::span<const GpPosterior> posteriors) {
    return leaf_stats(std::span<const LeafStep>(path.steps), posteriors);
}

struct BestLeaf {
    LeafPath leaf;
    double value = -std::numeric_limits<double>::infinity();
};

inline void check_exhaustive_size(std::size_t n_arms, int depth, bool single_play) {
    check_lookahead_args(static_cast<int>(n_arms), depth, single_play);
    const double count = count_leaves(static_cast<int>(n_arms), depth, single_play);
    if (count > kMaxExhaustiveLeaves) throw TreeTooLarge(count);
}

/// Argmax of value_fn(span<const LeafStep>) over all leaves; the first leaf in
/// enumeration order wins ties.
template <class ValueFn>
BestLeaf best_leaf_exhaustive(std::span<const int> root_z, int depth, int z_max, ValueFn&& value_fn, bool single_play) {
    check_exhaustive_size(root_z.size(), depth, single_play);
    BestLeaf best;
    best.leaf.root_z.assign(root_z.begin(), root_z.end());
    for_each_leaf(root_z, depth, z_max, single_play, [&](std::span<const LeafStep> steps) {
        const double v = value_fn(steps);
        if (v > best.value || best.leaf.steps.empty()) {
            best.value = v;
            best.leaf.steps.assign(steps.begin(), steps.end());
        }
    });
    return best;
}

namespace detail {

template <class StepValue>
void additive_search(std::vector<std::vector<int>>& z_stack, std::vector<LeafStep>& steps, std::vector<char>& used,
                     std::size_t level, double partial, int z_max, bool single_play, StepValue& step_value,
                     BestLeaf& best) {
    if (level == steps.size()) {
        if (partial > best.value || best.leaf.steps.empty()) {
            best.value = partial;
            best.leaf.steps = steps;
        }
        return;
    }
    const auto& z = z_stack[level];
    auto& next = z_stack[level + 1];
    for (std::size_t a = 0; a < z.size(); ++a) {
        if (single_play && used[a]) continue;
        steps[level] = {static_cast<int>(a), z[a]};
        const double v = partial + step_value(static_cast<int>(a), z[a]);
        for (std::size_t j = 0; j < z.size(); ++j) next[j] = std::min(z_max, z[j] + 1);
        next[a] = 0;
        used[a] = 1;
        additive_search(z_stack, steps, used, level + 1, v, z_max, single_play, step_value, best);
        used[a] = 0;
    }
}

}  // namespace detail

/// Exhaustive argmax when the leaf value is a sum of per-step values
/// step_value(arm, z); partial sums are shared along the tree.
template <class StepValue>
BestLeaf best_leaf_additive(std::span<const int> root_z, int depth, int z_max, bool single_play, StepValue&& step_value) {
    check_exhaustive_size(root_z.size(), depth, single_play);
    std::vector<std::vector<int>> z_stack(static_cast<std::size_t>(depth) + 1,
                                          std::vector<int>(root_z.begin(), root_z.end()));
    std::vector<LeafStep> steps(static_cast<std::size_t>(depth));
    std::vector<char> used(root_z.size(), 0);
    BestLeaf best;
    best.leaf.root_z.assign(root_z.begin(), root_z.end());
    detail::additive_search(z_stack, steps, used, 0, 0.0, z_max, single_play, step_value, best);
    return best;
}

}  // namespace recband
