#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "recband/errors.hpp"
#include "recband/gp.hpp"
#include "recband/kernel.hpp"
#include "recband/rng.hpp"

namespace recband {

enum class RecoveryKind { GpSample, Logistic, ModGamma };

/// Description of one arm's recovery function, before it is tabulated.
struct ModelSpec {
    RecoveryKind kind = RecoveryKind::Logistic;
    /// (theta0, theta1, theta2) for Logistic and ModGamma.
    std::array<double, 3> theta{};
    /// Prior for GpSample.
    KernelSpec kernel{};
    /// Fixed seed for GpSample; when absent the seed is derived from the
    /// experiment's master seed, replication and arm.
    std::optional<std::uint64_t> seed;

    static ModelSpec logistic(double t0, double t1, double t2) {
        return {RecoveryKind::Logistic, {t0, t1, t2}, {}, std::nullopt};
    }
    static ModelSpec mod_gamma(double t0, double t1, double t2) {
        return {RecoveryKind::ModGamma, {t0, t1, t2}, {}, std::nullopt};
    }
    static ModelSpec gp_sample(const KernelSpec& kernel, std::optional<std::uint64_t> seed = std::nullopt) {
        return {RecoveryKind::GpSample, {}, kernel, seed};
    }
};

inline double logistic_recovery(const std::array<double, 3>& theta, double z) {
    return theta[0] / (1.0 + std::exp(-theta[1] * (z - theta[2])));
}

/// Normalizer C of the modified gamma recovery f(z) = theta0 C exp(-theta1 z) z^theta2.
inline double mod_gamma_normalizer(double theta1, double theta2) {
    return std::exp(theta2) * std::pow(theta1 / theta2, theta2);
}

inline double mod_gamma_recovery(const std::array<double, 3>& theta, double z) {
    if (z <= 0.0) return 0.0;
    return theta[0] * mod_gamma_normalizer(theta[1], theta[2]) * std::exp(-theta[1] * z) *
           std::pow(z, theta[2]);
}

/// A recovery function tabulated on {0, ..., z_max}. The table is fixed at
/// construction and never changes during an episode.
class RecoveryModel {
public:
    RecoveryModel(const ModelSpec& spec, int z_max, std::uint64_t seed) : spec_(spec) {
        if (z_max < 0) throw ConfigError("z_max must be >= 0");
        table_.resize(static_cast<std::size_t>(z_max) + 1);
        switch (spec.kind) {
            case RecoveryKind::Logistic:
                for (int z = 0; z <= z_max; ++z) table_[z] = logistic_recovery(spec.theta, z);
                break;
            case RecoveryKind::ModGamma:
                if (!(spec.theta[1] > 0.0) || !(spec.theta[2] > 0.0))
                    throw ConfigError("modified gamma needs theta1 > 0 and theta2 > 0");
                for (int z = 0; z <= z_max; ++z) table_[z] = mod_gamma_recovery(spec.theta, z);
                break;
            case RecoveryKind::GpSample: {
                seed_ = spec.seed.value_or(seed);
                GpPosterior prior(spec.kernel, 0.0, z_max);
                std::vector<int> grid(table_.size());
                std::iota(grid.begin(), grid.end(), 0);
                RandomStream rng(seed_);
                table_ = posterior_joint_sample(prior, grid, rng);
                break;
            }
        }
        for (double v : table_)
            if (!std::isfinite(v)) throw ConfigError("recovery function produced a non-finite value");
    }

    [[nodiscard]] double value(int z) const { return table_.at(static_cast<std::size_t>(z)); }
    [[nodiscard]] std::span<const double> table() const noexcept { return table_; }
    [[nodiscard]] const ModelSpec& spec() const noexcept { return spec_; }
    [[nodiscard]] int z_max() const noexcept { return static_cast<int>(table_.size()) - 1; }
    /// Seed actually used for a GpSample draw.
    [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }

private:
    ModelSpec spec_;
    std::vector<double> table_;
    std::uint64_t seed_ = 0;
};

inline double recovery_value(const RecoveryModel& model, int z) { return model.value(z); }

struct EnvConfig {
    int z_max = 30;
    double noise_sd = 0.1;
    std::vector<ModelSpec> models;
    /// Empty means all zeros.
    std::vector<int> initial_z;
    std::uint64_t master_seed = 0;

    [[nodiscard]] int n_arms() const noexcept { return static_cast<int>(models.size()); }

    [[nodiscard]] std::vector<int> start_z() const {
        if (initial_z.empty()) return std::vector<int>(models.size(), 0);
        return initial_z;
    }

    void validate() const {
        if (models.empty()) throw ConfigError("environment needs at least one arm");
        if (z_max < 1) throw ConfigError("z_max must be >= 1");
        if (!(noise_sd >= 0.0) || !std::isfinite(noise_sd)) throw ConfigError("noise_sd must be >= 0");
        if (!initial_z.empty()) {
            if (initial_z.size() != models.size())
                throw ConfigError("initial_z has " + std::to_string(initial_z.size()) + " entries for " +
                                  std::to_string(models.size()) + " arms");
            for (int z : initial_z)
                if (z < 0 || z > z_max) throw ConfigError("initial_z entry outside [0, z_max]");
        }
        for (const auto& m : models)
            if (m.kind == RecoveryKind::GpSample) m.kernel.validate();
    }
};

struct EnvState {
    std::vector<int> z;
    long t = 1;
};

/// Tabulated recovery functions for one replication.
struct World {
    int z_max = 0;
    double noise_sd = 0.0;
    std::vector<RecoveryModel> models;

    [[nodiscard]] int n_arms() const noexcept { return static_cast<int>(models.size()); }
};

inline World realize_world(const EnvConfig& config, std::uint64_t replication) {
    config.validate();
    World world{config.z_max, config.noise_sd, {}};
    world.models.reserve(config.models.size());
    for (std::size_t j = 0; j < config.models.size(); ++j) {
        const auto seed = derive_stream(config.master_seed, replication, j, StreamPurpose::RecoveryModel).key();
        world.models.emplace_back(config.models[j], config.z_max, seed);
    }
    return world;
}

/// Played arm resets to 0; every other arm ages by one round, capped at z_max.
inline std::vector<int> advance_covariates(std::span<const int> z, int played, int z_max) {
    if (played < 0 || static_cast<std::size_t>(played) >= z.size())
        throw std::out_of_range("played arm index " + std::to_string(played) + " out of range");
    std::vector<int> next(z.size());
    for (std::size_t j = 0; j < z.size(); ++j) next[j] = std::min(z_max, z[j] + 1);
    next[static_cast<std::size_t>(played)] = 0;
    return next;
}

struct StepResult {
    double reward = 0.0;
    double expected = 0.0;
    EnvState next;
};

/// Noisy reward f_played(z_played) + N(0, noise_sd^2) and the next state.
inline StepResult env_step(const EnvState& state, const World& world, int played, RandomStream& rng) {
    const double f = world.models.at(static_cast<std::size_t>(played)).value(state.z[static_cast<std::size_t>(played)]);
    const double noise = world.noise_sd > 0.0 ? world.noise_sd * rng.normal() : 0.0;
    return {f + noise, f, EnvState{advance_covariates(state.z, played, world.z_max), state.t + 1}};
}

}  // namespace recband
