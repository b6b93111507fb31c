#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "recband/errors.hpp"
#include "recband/kernel.hpp"
#include "recband/rng.hpp"

namespace recband {

struct MeanVar {
    double mean = 0.0;
    double var = 0.0;
};

namespace detail {

/// In-place lower Cholesky of a dense row-major n x n matrix. The strict upper
/// triangle is zeroed. Returns false on a non-positive pivot.
inline bool cholesky_in_place(std::vector<double>& a, std::size_t n) {
    for (std::size_t j = 0; j < n; ++j) {
        double diag = a[j * n + j];
        for (std::size_t k = 0; k < j; ++k) diag -= a[j * n + k] * a[j * n + k];
        if (!(diag > 0.0) || !std::isfinite(diag)) return false;
        const double ljj = std::sqrt(diag);
        a[j * n + j] = ljj;
        for (std::size_t i = j + 1; i < n; ++i) {
            double s = a[i * n + j];
            for (std::size_t k = 0; k < j; ++k) s -= a[i * n + k] * a[j * n + k];
            a[i * n + j] = s / ljj;
        }
        for (std::size_t k = j + 1; k < n; ++k) a[j * n + k] = 0.0;
    }
    return true;
}

/// Cholesky of `cov` with diagonal jitter escalated by 10x from `start` up to
/// `limit` (both absolute). Throws FactorizationFailure when every level fails.
inline std::vector<double> jittered_cholesky(const std::vector<double>& cov, std::size_t n,
                                             double start, double limit) {
    for (double jitter = start; jitter <= limit * (1.0 + 1e-9); jitter *= 10.0) {
        std::vector<double> a = cov;
        for (std::size_t i = 0; i < n; ++i) a[i * n + i] += jitter;
        if (cholesky_in_place(a, n)) return a;
    }
    throw FactorizationFailure("covariance of size " + std::to_string(n) +
                               " not positive definite after jitter escalation");
}

}  // namespace detail

/// Exact GP posterior for one arm over the covariate grid {0, ..., z_max}.
///
/// The lower Cholesky factor L of (K_N + (noise^2 + jitter) I) is stored packed by
/// rows and grows by one row per observation. Posterior mean and covariance over
/// the whole grid are cached and refreshed with the rank-1 update
///   C <- C - c c^T / s,  m <- m + c (y - m[z]) / s,  c = C[:, z], s = C[z, z] + noise^2 + jitter,
/// so grid queries are O(1). The `*_direct` queries recompute from the factor and
/// are used to cross-check the cache.
///
/// Queries are const and safe to call concurrently; append requires exclusive access.
class GpPosterior {
public:
    static constexpr double kJitterStart = 1e-10;
    static constexpr double kJitterLimit = 1e-6;

    GpPosterior(KernelSpec spec, double noise_sd, int z_max)
        : spec_(spec), noise_sd_(noise_sd), z_max_(z_max) {
        spec_.validate();
        if (!(noise_sd >= 0.0) || !std::isfinite(noise_sd))
            throw std::invalid_argument("noise_sd must be >= 0");
        if (z_max < 0) throw std::invalid_argument("z_max must be >= 0");
        jitter_ = kJitterStart * spec_.signal_variance;
        rebuild_cache();
    }

    [[nodiscard]] const KernelSpec& spec() const noexcept { return spec_; }
    [[nodiscard]] double noise_sd() const noexcept { return noise_sd_; }
    [[nodiscard]] int z_max() const noexcept { return z_max_; }
    [[nodiscard]] std::size_t n_obs() const noexcept { return obs_z_.size(); }
    [[nodiscard]] const std::vector<int>& obs_z() const noexcept { return obs_z_; }
    [[nodiscard]] const std::vector<double>& obs_y() const noexcept { return obs_y_; }
    /// Absolute jitter currently on the Gram diagonal.
    [[nodiscard]] double jitter() const noexcept { return jitter_; }
    [[nodiscard]] double effective_noise_var() const noexcept { return noise_sd_ * noise_sd_ + jitter_; }

    /// Entry (i, j) of the lower-triangular factor; zero above the diagonal.
    [[nodiscard]] double factor(std::size_t i, std::size_t j) const {
        if (j > i) return 0.0;
        return chol_[i * (i + 1) / 2 + j];
    }

    [[nodiscard]] bool on_grid(int z) const noexcept { return z >= 0 && z <= z_max_; }

    [[nodiscard]] MeanVar mean_var(int z) const {
        if (!on_grid(z)) return mean_var_direct(z);
        const auto g = static_cast<std::size_t>(z);
        return {grid_mean_[g], std::max(0.0, grid_cov_[g * grid_size() + g])};
    }

    [[nodiscard]] double cov(int z1, int z2) const {
        if (!on_grid(z1) || !on_grid(z2)) return cov_direct(z1, z2);
        return grid_cov_[static_cast<std::size_t>(z1) * grid_size() + static_cast<std::size_t>(z2)];
    }

    [[nodiscard]] MeanVar mean_var_direct(int z) const {
        const auto v = whitened_cross(z);
        double mean = 0.0;
        double reduction = 0.0;
        for (std::size_t i = 0; i < v.size(); ++i) {
            mean += v[i] * alpha_[i];
            reduction += v[i] * v[i];
        }
        return {mean, std::max(0.0, kernel_eval(spec_, z, z) - reduction)};
    }

    [[nodiscard]] double cov_direct(int z1, int z2) const {
        const auto v1 = whitened_cross(z1);
        const auto v2 = whitened_cross(z2);
        double reduction = 0.0;
        for (std::size_t i = 0; i < v1.size(); ++i) reduction += v1[i] * v2[i];
        return kernel_eval(spec_, z1, z2) - reduction;
    }

    /// Condition on one more observation by extending the factor by one row.
    void append(int z, double y) {
        if (!on_grid(z))
            throw std::invalid_argument("observation covariate " + std::to_string(z) + " outside grid");
        const std::size_t n = n_obs();
        std::vector<double> cross(n);
        for (std::size_t i = 0; i < n; ++i) cross[i] = kernel_eval(spec_, obs_z_[i], z);
        const auto row = solve_lower(cross);
        double pivot = kernel_eval(spec_, z, z) + effective_noise_var();
        double dot_alpha = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            pivot -= row[i] * row[i];
            dot_alpha += row[i] * alpha_[i];
        }
        obs_z_.push_back(z);
        obs_y_.push_back(y);
        if (!(pivot > 0.0) || !std::isfinite(pivot)) {
            escalate_and_refit();
            return;
        }
        const double lnn = std::sqrt(pivot);
        chol_.insert(chol_.end(), row.begin(), row.end());
        chol_.push_back(lnn);
        alpha_.push_back((y - dot_alpha) / lnn);

        // Rank-1 refresh of the grid cache; `pivot` equals C[z, z] + noise^2 + jitter.
        const std::size_t g = grid_size();
        const auto zi = static_cast<std::size_t>(z);
        std::vector<double> c(g);
        for (std::size_t a = 0; a < g; ++a) c[a] = grid_cov_[a * g + zi];
        const double innovation = (y - grid_mean_[zi]) / pivot;
        for (std::size_t a = 0; a < g; ++a) {
            grid_mean_[a] += c[a] * innovation;
            const double ca = c[a] / pivot;
            for (std::size_t b = 0; b < g; ++b) grid_cov_[a * g + b] -= ca * c[b];
        }
    }

    /// Full refactorization from the stored observations, restarting jitter escalation.
    void refit() {
        jitter_ = kJitterStart * spec_.signal_variance;
        factor_all();
    }

private:
    [[nodiscard]] std::size_t grid_size() const noexcept { return static_cast<std::size_t>(z_max_) + 1; }

    /// L^{-1} k_N(z).
    [[nodiscard]] std::vector<double> whitened_cross(int z) const {
        const std::size_t n = n_obs();
        std::vector<double> cross(n);
        for (std::size_t i = 0; i < n; ++i) cross[i] = kernel_eval(spec_, obs_z_[i], z);
        return solve_lower(cross);
    }

    [[nodiscard]] std::vector<double> solve_lower(const std::vector<double>& b) const {
        std::vector<double> x(b.size());
        for (std::size_t i = 0; i < b.size(); ++i) {
            const double* row = chol_.data() + i * (i + 1) / 2;
            double s = b[i];
            for (std::size_t k = 0; k < i; ++k) s -= row[k] * x[k];
            x[i] = s / row[i];
        }
        return x;
    }

    void escalate_and_refit() {
        jitter_ *= 10.0;
        factor_all();
    }

    void factor_all() {
        const std::size_t n = n_obs();
        std::vector<double> gram(n * n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) gram[i * n + j] = kernel_eval(spec_, obs_z_[i], obs_z_[j]);
        for (std::size_t i = 0; i < n; ++i) gram[i * n + i] += noise_sd_ * noise_sd_;

        const double limit = kJitterLimit * spec_.signal_variance;
        std::vector<double> dense;
        bool ok = false;
        for (; jitter_ <= limit * (1.0 + 1e-9); jitter_ *= 10.0) {
            dense = gram;
            for (std::size_t i = 0; i < n; ++i) dense[i * n + i] += jitter_;
            if (detail::cholesky_in_place(dense, n)) {
                ok = true;
                break;
            }
        }
        if (!ok)
            throw FactorizationFailure("Gram matrix with " + std::to_string(n) +
                                       " observations not positive definite after jitter escalation");
        chol_.clear();
        chol_.reserve(n * (n + 1) / 2);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j <= i; ++j) chol_.push_back(dense[i * n + j]);
        alpha_ = solve_lower(obs_y_);
        rebuild_cache();
    }

    void rebuild_cache() {
        const std::size_t g = grid_size();
        std::vector<std::vector<double>> whitened(g);
        grid_mean_.assign(g, 0.0);
        grid_cov_.assign(g * g, 0.0);
        for (std::size_t a = 0; a < g; ++a) {
            whitened[a] = whitened_cross(static_cast<int>(a));
            for (std::size_t i = 0; i < whitened[a].size(); ++i) grid_mean_[a] += whitened[a][i] * alpha_[i];
        }
        for (std::size_t a = 0; a < g; ++a) {
            for (std::size_t b = 0; b <= a; ++b) {
                double reduction = 0.0;
                for (std::size_t i = 0; i < whitened[a].size(); ++i) reduction += whitened[a][i] * whitened[b][i];
                const double value = kernel_eval(spec_, static_cast<int>(a), static_cast<int>(b)) - reduction;
                grid_cov_[a * g + b] = value;
                grid_cov_[b * g + a] = value;
            }
        }
    }

    KernelSpec spec_;
    double noise_sd_;
    int z_max_;
    double jitter_ = 0.0;
    std::vector<int> obs_z_;
    std::vector<double> obs_y_;
    std::vector<double> chol_;
    std::vector<double> alpha_;
    std::vector<double> grid_mean_;
    std::vector<double> grid_cov_;

    friend GpPosterior posterior_fit(const KernelSpec&, double, std::span<const int>, std::span<const double>, int);
};

/// Batch posterior from a full factorization of the Gram matrix.
inline GpPosterior posterior_fit(const KernelSpec& spec, double noise_sd, std::span<const int> zs,
                                 std::span<const double> ys, int z_max) {
    if (zs.size() != ys.size()) throw std::invalid_argument("posterior_fit: zs and ys differ in length");
    GpPosterior post(spec, noise_sd, z_max);
    for (int z : zs)
        if (!post.on_grid(z)) throw std::invalid_argument("posterior_fit: covariate outside grid");
    post.obs_z_.assign(zs.begin(), zs.end());
    post.obs_y_.assign(ys.begin(), ys.end());
    post.factor_all();
    return post;
}

/// Grid sized to the largest observed covariate.
inline GpPosterior posterior_fit(const KernelSpec& spec, double noise_sd, std::span<const int> zs,
                                 std::span<const double> ys) {
    int z_max = 0;
    for (int z : zs) z_max = std::max(z_max, z);
    return posterior_fit(spec, noise_sd, zs, ys, z_max);
}

inline MeanVar posterior_mean_var(const GpPosterior& post, int z) { return post.mean_var(z); }

inline double posterior_cov(const GpPosterior& post, int z1, int z2) { return post.cov(z1, z2); }

inline GpPosterior posterior_append(GpPosterior post, int z, double y) {
    post.append(z, y);
    return post;
}

/// Distinct entries of `zs` in first-appearance order, plus the position of each
/// input entry in that list.
struct Deduplicated {
    std::vector<int> points;
    std::vector<std::size_t> index_of;
};

inline Deduplicated deduplicate(std::span<const int> zs) {
    Deduplicated out;
    out.index_of.reserve(zs.size());
    for (int z : zs) {
        auto it = std::find(out.points.begin(), out.points.end(), z);
        if (it == out.points.end()) {
            out.index_of.push_back(out.points.size());
            out.points.push_back(z);
        } else {
            out.index_of.push_back(static_cast<std::size_t>(it - out.points.begin()));
        }
    }
    return out;
}

/// One joint draw of f at `zs`. Duplicated covariates receive identical values.
inline std::vector<double> posterior_joint_sample(const GpPosterior& post, std::span<const int> zs,
                                                  RandomStream& rng) {
    if (zs.empty()) throw std::invalid_argument("posterior_joint_sample: empty covariate list");
    const auto dedup = deduplicate(zs);
    const std::size_t n = dedup.points.size();
    std::vector<double> mean(n);
    std::vector<double> cov(n * n);
    for (std::size_t i = 0; i < n; ++i) {
        mean[i] = post.mean_var(dedup.points[i]).mean;
        for (std::size_t j = 0; j < n; ++j) cov[i * n + j] = post.cov(dedup.points[i], dedup.points[j]);
    }
    const double sv = post.spec().signal_variance;
    const auto chol = detail::jittered_cholesky(cov, n, GpPosterior::kJitterStart * sv,
                                                GpPosterior::kJitterLimit * sv);
    std::vector<double> eps(n);
    for (auto& e : eps) e = rng.normal();
    std::vector<double> draw(n);
    for (std::size_t i = 0; i < n; ++i) {
        double s = mean[i];
        for (std::size_t k = 0; k <= i; ++k) s += chol[i * n + k] * eps[k];
        draw[i] = s;
    }
    std::vector<double> out(zs.size());
    for (std::size_t i = 0; i < zs.size(); ++i) out[i] = draw[dedup.index_of[i]];
    return out;
}

/// 0.5 * sum_t log(1 + var(z_t; t-1) / noise^2), conditioning sequentially on zs.
/// Independent of the observed values, so conditioning uses y = 0.
inline double information_gain(const KernelSpec& spec, double noise_sd, std::span<const int> zs) {
    if (noise_sd == 0.0) throw NoiseZero();
    if (zs.empty()) return 0.0;
    const int z_max = *std::max_element(zs.begin(), zs.end());
    GpPosterior post(spec, noise_sd, std::max(0, z_max));
    const double noise_var = noise_sd * noise_sd;
    double gain = 0.0;
    for (int z : zs) {
        gain += 0.5 * std::log1p(post.mean_var(z).var / noise_var);
        post.append(z, 0.0);
    }
    return gain;
}

}  // namespace recband
