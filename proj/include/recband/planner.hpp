#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <queue>
#include <span>
#include <vector>

#include "recband/errors.hpp"
#include "recband/lookahead.hpp"

namespace recband {

/// Sampled recovery values f~_j(z) for the covariates each arm can reach within
/// one lookahead. Entries that were not sampled are absent.
class SampleTable {
public:
    SampleTable() = default;
    SampleTable(int n_arms, int z_max)
        : z_max_(z_max),
          values_(static_cast<std::size_t>(n_arms),
                  std::vector<double>(static_cast<std::size_t>(z_max) + 1, std::numeric_limits<double>::quiet_NaN())) {}

    /// Every covariate of every arm present.
    static SampleTable dense(const std::vector<std::vector<double>>& values) {
        SampleTable table(static_cast<int>(values.size()), values.empty() ? 0 : static_cast<int>(values[0].size()) - 1);
        table.values_ = values;
        return table;
    }

    [[nodiscard]] int n_arms() const noexcept { return static_cast<int>(values_.size()); }
    [[nodiscard]] int z_max() const noexcept { return z_max_; }

    void set(int arm, int z, double value) { values_.at(static_cast<std::size_t>(arm)).at(static_cast<std::size_t>(z)) = value; }

    [[nodiscard]] bool has(int arm, int z) const {
        if (arm < 0 || arm >= n_arms() || z < 0 || z > z_max_) return false;
        return !std::isnan(values_[static_cast<std::size_t>(arm)][static_cast<std::size_t>(z)]);
    }

    [[nodiscard]] double at(int arm, int z) const {
        if (!has(arm, z))
            throw std::out_of_range("sample table has no entry for arm " + std::to_string(arm) + " at z=" +
                                    std::to_string(z));
        return values_[static_cast<std::size_t>(arm)][static_cast<std::size_t>(z)];
    }

    [[nodiscard]] double max_value() const { return extreme(true); }
    [[nodiscard]] double min_value() const { return extreme(false); }

    [[nodiscard]] const std::vector<double>& row(int arm) const { return values_.at(static_cast<std::size_t>(arm)); }

private:
    [[nodiscard]] double extreme(bool want_max) const {
        double out = want_max ? -std::numeric_limits<double>::infinity() : std::numeric_limits<double>::infinity();
        for (const auto& row : values_)
            for (double v : row)
                if (!std::isnan(v)) out = want_max ? std::max(out, v) : std::min(out, v);
        return out;
    }

    int z_max_ = 0;
    std::vector<std::vector<double>> values_;
};

/// Covariates arm j can be played at during a d-step lookahead from root_z:
/// (root_z, ..., root_z + d - 1, 0, ..., d - 1), capped at z_max, with duplicates kept.
inline std::vector<int> lookahead_covariates(int root_z, int depth, int z_max) {
    std::vector<int> out;
    out.reserve(2 * static_cast<std::size_t>(depth));
    for (int i = 0; i < depth; ++i) out.push_back(std::min(z_max, root_z + i));
    for (int i = 0; i < depth; ++i) out.push_back(std::min(z_max, i));
    return out;
}

/// max{f~(z), ..., f~(z + l), f~(0), ..., f~(l)} with indices capped at z_max;
/// covariates missing from the table are unreachable and skipped.
inline double g_max(const SampleTable& table, int arm, int z, int l) {
    double best = -std::numeric_limits<double>::infinity();
    const int zm = table.z_max();
    for (int i = 0; i <= l; ++i) {
        const int up = std::min(zm, z + i);
        if (table.has(arm, up)) best = std::max(best, table.at(arm, up));
        const int low = std::min(zm, i);
        if (table.has(arm, low)) best = std::max(best, table.at(arm, low));
    }
    return best;
}

/// Upper bound on the reward collectable in `remaining` more plays from z_vec.
inline double psi(const SampleTable& table, std::span<const int> z_vec, int remaining) {
    if (remaining <= 0) return 0.0;
    double best = -std::numeric_limits<double>::infinity();
    for (int j = 0; j < table.n_arms(); ++j) best = std::max(best, g_max(table, j, z_vec[static_cast<std::size_t>(j)], remaining));
    return remaining * best;
}

struct PlanResult {
    /// Always d steps long; steps past the selected node are the greedy completion.
    LeafPath leaf;
    /// Sum of f~ along the selected node, before completion.
    double value = 0.0;
    /// Sum of f~ over the whole returned leaf.
    double completed_value = 0.0;
    int depth_reached = 0;
    int nodes_expanded = 0;
    int budget = 0;
    bool stopped_early = false;
    bool greedy_completed = false;
};

/// One node selection of the optimistic planner.
struct OpTraceRow {
    int step = 0;
    int depth = 0;
    double b = 0.0;
    double u = 0.0;
    std::vector<int> path;
};

inline void write_op_trace_csv(std::ostream& out, const std::vector<OpTraceRow>& rows) {
    out << "step,depth,b,u\n";
    for (const auto& r : rows) out << r.step << ',' << r.depth << ',' << r.b << ',' << r.u << '\n';
}

namespace detail {

/// g_max for every (arm, z, l), l in 1..depth, so bounds cost O(K) per node.
class GTable {
public:
    GTable(const SampleTable& table, int depth)
        : arms_(table.n_arms()), zs_(table.z_max() + 1), depth_(depth),
          data_(static_cast<std::size_t>(arms_ * zs_ * (depth + 1)), -std::numeric_limits<double>::infinity()) {
        for (int j = 0; j < arms_; ++j)
            for (int z = 0; z < zs_; ++z)
                for (int l = 1; l <= depth; ++l) data_[index(j, z, l)] = g_max(table, j, z, l);
    }

    [[nodiscard]] double g(int arm, int z, int l) const { return data_[index(arm, z, l)]; }

    [[nodiscard]] double psi(std::span<const int> z_vec, int remaining) const {
        if (remaining <= 0) return 0.0;
        double best = -std::numeric_limits<double>::infinity();
        for (int j = 0; j < arms_; ++j) best = std::max(best, g(j, z_vec[static_cast<std::size_t>(j)], remaining));
        return remaining * best;
    }

private:
    [[nodiscard]] std::size_t index(int arm, int z, int l) const {
        return (static_cast<std::size_t>(arm) * zs_ + static_cast<std::size_t>(z)) * (depth_ + 1) + static_cast<std::size_t>(l);
    }

    int arms_;
    int zs_;
    int depth_;
    std::vector<double> data_;
};

struct PlanNode {
    std::vector<int> path;
    std::vector<int> z;
    double u = 0.0;
    double b = 0.0;
    [[nodiscard]] int depth() const noexcept { return static_cast<int>(path.size()); }
};

/// Strict "a is preferred over b": larger b, then deeper, then lexicographically smaller path.
inline bool preferred(const PlanNode& a, const PlanNode& b) {
    if (a.b != b.b) return a.b > b.b;
    if (a.depth() != b.depth()) return a.depth() > b.depth();
    return a.path < b.path;
}

}  // namespace detail

/// Budgeted best-first search over the lookahead tree of `table`.
///
/// Each step moves the frontier node with the largest b = u + psi into the
/// expanded tree and adds its K children. Selecting a depth-d node stops the
/// search; that node is optimal. Otherwise, after `budget` steps every generated
/// node is completed to depth d greedily by g_max and the best completion wins,
/// starting from the max-b node at the deepest expanded depth d_N.
inline PlanResult op_search(const SampleTable& table, std::span<const int> root_z, int depth, int budget,
                            std::vector<OpTraceRow>* trace = nullptr) {
    if (depth < 1) throw std::invalid_argument("op_search: depth must be >= 1");
    if (budget < 1) throw std::invalid_argument("op_search: budget must be >= 1");
    if (static_cast<int>(root_z.size()) != table.n_arms())
        throw std::invalid_argument("op_search: root covariates do not match table arms");
    const int n_arms = table.n_arms();
    const int z_max = table.z_max();
    const detail::GTable gtab(table, depth);

    std::vector<detail::PlanNode> nodes;
    auto worse = [&nodes](std::size_t a, std::size_t b) { return detail::preferred(nodes[b], nodes[a]); };
    std::priority_queue<std::size_t, std::vector<std::size_t>, decltype(worse)> frontier(worse);

    auto add_children = [&](std::size_t parent) {
        for (int a = 0; a < n_arms; ++a) {
            detail::PlanNode child;
            const auto& p = nodes[parent];
            child.path = p.path;
            child.path.push_back(a);
            child.u = p.u + table.at(a, p.z[static_cast<std::size_t>(a)]);
            child.z = advance_covariates(p.z, a, z_max);
            child.b = child.u + gtab.psi(child.z, depth - child.depth());
            nodes.push_back(std::move(child));
            frontier.push(nodes.size() - 1);
        }
    };

    nodes.push_back({{}, std::vector<int>(root_z.begin(), root_z.end()), 0.0, gtab.psi(root_z, depth)});
    add_children(0);

    PlanResult result;
    result.budget = budget;
    int deepest = 0;
    for (int n = 1; n <= budget && !frontier.empty(); ++n) {
        const std::size_t pick = frontier.top();
        frontier.pop();
        result.nodes_expanded = n;
        const auto& node = nodes[pick];
        if (trace) trace->push_back({n, node.depth(), node.b, node.u, node.path});
        if (node.depth() == depth) {
            result.leaf = replay_path(root_z, node.path, z_max);
            result.value = node.u;
            result.completed_value = node.u;
            result.depth_reached = depth;
            result.stopped_early = true;
            return result;
        }
        deepest = std::max(deepest, node.depth());
        add_children(pick);
    }

    // Greedy completion of a node to depth d by g_max; returns its total f~.
    auto complete = [&](const detail::PlanNode& node, std::vector<int>* arms_out) {
        std::vector<int> z = node.z;
        double total = node.u;
        for (int remaining = depth - node.depth(); remaining > 0; --remaining) {
            int pick = 0;
            for (int j = 1; j < n_arms; ++j)
                if (gtab.g(j, z[static_cast<std::size_t>(j)], remaining) > gtab.g(pick, z[static_cast<std::size_t>(pick)], remaining))
                    pick = j;
            total += table.at(pick, z[static_cast<std::size_t>(pick)]);
            if (arms_out) arms_out->push_back(pick);
            z = advance_covariates(z, pick, z_max);
        }
        return total;
    };

    // The max-b node at depth d_N seeds the choice; any generated node whose
    // completion scores higher replaces it. Nodes generated under a budget are a
    // prefix of those generated under a larger one, so the returned value never
    // decreases with the budget. Completions never exceed b, which prunes the scan.
    const detail::PlanNode* best = nullptr;
    for (std::size_t idx = 1; idx < nodes.size(); ++idx)
        if (nodes[idx].depth() == deepest && (best == nullptr || detail::preferred(nodes[idx], *best)))
            best = &nodes[idx];
    double best_score = complete(*best, nullptr);
    for (std::size_t idx = 1; idx < nodes.size(); ++idx) {
        const auto& node = nodes[idx];
        if (&node == best || node.b + 1e-9 * (1.0 + std::abs(node.b)) < best_score) continue;
        const double score = complete(node, nullptr);
        if (score > best_score || (score == best_score && detail::preferred(node, *best))) {
            best = &node;
            best_score = score;
        }
    }

    std::vector<int> arms = best->path;
    const double completed = complete(*best, &arms);
    result.leaf = replay_path(root_z, arms, z_max);
    result.value = best->u;
    result.completed_value = completed;
    result.depth_reached = deepest;
    result.greedy_completed = best->depth() < depth;
    return result;
}

/// Suboptimality bound of a budget-exhausted search, given the near-optimality
/// proportion lambda in (1/K, 1] and the depth d0 from which it holds. Zero when
/// the search stopped early; clipped below at zero.
inline double op_error_bound(const SampleTable& table, const PlanResult& result, double lambda, int d0) {
    const int k = table.n_arms();
    if (!(lambda > 1.0 / k) || !(lambda <= 1.0))
        throw InvalidLambda("lambda must lie in (1/K, 1], got " + std::to_string(lambda));
    if (result.stopped_early) return 0.0;
    const double delta = table.max_value() - std::min(table.min_value(), 0.0);
    if (delta == 0.0) return 0.0;
    const double n0 = (std::pow(static_cast<double>(k), d0 + 1) - 1.0) / (k - 1.0);
    const double budget = result.budget;
    if (!(budget > n0)) throw std::invalid_argument("op_error_bound: budget must exceed n0");
    const double log_lk = std::log(lambda * k);
    const double d = static_cast<double>(result.leaf.depth());
    const double bound = (d - std::log(budget - n0) / log_lk - std::log(lambda * k - 1.0) / log_lk + 1.0) * delta;
    return std::max(0.0, bound);
}

}  // namespace recband
