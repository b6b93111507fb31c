#pragma once

// Experiment configuration files (JSON).
//
//   {
//     "env": {
//       "z_max": 30, "noise_sd": 0.1, "initial_z": [0, 0],
//       "arms": [ {"kind": "logistic", "theta": [0.5, 0.4, 10.0]},
//                 {"kind": "gamma", "theta": [2.0, 0.25, 0.5]},
//                 {"kind": "gp", "kernel": {"family": "se", "lengthscale": 2}, "seed": 11} ],
//       "fixture": "logistic" | "gamma",          (instead of "arms")
//       "gp_arms": {"count": 10, "kernel": {...}}  (instead of "arms")
//     },
//     "policy": {
//       "kind": "rgp_ucb" | "rgp_ts" | "ucb_z" | "oracle",
//       "d": 1, "single_play": false,
//       "planner": {"kind": "exhaustive"} | {"kind": "optimistic", "budget": 2000},
//       "kernel": {"family": "se" | "matern" | "linear", "lengthscale": 5, "signal_variance": 1, "nu": 2.5},
//       "noise_sd": 0.1
//     },
//     "run": {"horizon": 1000, "replications": 100, "seed": 1, "output": "results.csv"}
//   }

#include <fstream>
#include <optional>
#include <string>

#include "json.hpp"
#include "recband/errors.hpp"
#include "recband/fixtures.hpp"
#include "recband/harness.hpp"

namespace recband {

using nlohmann::json;

namespace detail {

template <class T>
T get_or(const json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("field '") + key + "': " + e.what());
    }
}

inline const json& require(const json& j, const char* key, const char* where) {
    if (!j.is_object() || !j.contains(key)) throw ConfigError(std::string(where) + ": missing field '" + key + "'");
    return j.at(key);
}

}  // namespace detail

inline KernelSpec kernel_from_json(const json& j) {
    KernelSpec spec;
    const auto family = detail::get_or<std::string>(j, "family", "se");
    if (family == "se" || family == "squared_exponential") {
        spec.family = KernelFamily::SquaredExponential;
    } else if (family == "matern") {
        spec.family = KernelFamily::Matern;
    } else if (family == "linear") {
        spec.family = KernelFamily::Linear;
    } else {
        throw ConfigError("unknown kernel family '" + family + "'");
    }
    spec.lengthscale = detail::get_or<double>(j, "lengthscale", 1.0);
    spec.signal_variance = detail::get_or<double>(j, "signal_variance", 1.0);
    spec.nu = detail::get_or<double>(j, "nu", 2.5);
    try {
        spec.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    return spec;
}

inline json kernel_to_json(const KernelSpec& spec) {
    json j{{"family", to_string(spec.family)}, {"lengthscale", spec.lengthscale}, {"signal_variance", spec.signal_variance}};
    if (spec.family == KernelFamily::Matern) j["nu"] = spec.nu;
    return j;
}

inline ModelSpec model_from_json(const json& j) {
    const auto kind = detail::require(j, "kind", "arm").get<std::string>();
    if (kind == "logistic" || kind == "gamma") {
        const auto& theta = detail::require(j, "theta", "arm");
        if (!theta.is_array() || theta.size() != 3) throw ConfigError("arm theta must have three entries");
        const auto t = theta.get<std::vector<double>>();
        return kind == "logistic" ? ModelSpec::logistic(t[0], t[1], t[2]) : ModelSpec::mod_gamma(t[0], t[1], t[2]);
    }
    if (kind == "gp") {
        auto spec = ModelSpec::gp_sample(kernel_from_json(j.value("kernel", json::object())));
        if (j.contains("seed")) spec.seed = j.at("seed").get<std::uint64_t>();
        return spec;
    }
    throw ConfigError("unknown arm kind '" + kind + "'");
}

inline json model_to_json(const ModelSpec& m) {
    switch (m.kind) {
        case RecoveryKind::Logistic: return {{"kind", "logistic"}, {"theta", m.theta}};
        case RecoveryKind::ModGamma: return {{"kind", "gamma"}, {"theta", m.theta}};
        case RecoveryKind::GpSample: {
            json j{{"kind", "gp"}, {"kernel", kernel_to_json(m.kernel)}};
            if (m.seed) j["seed"] = *m.seed;
            return j;
        }
    }
    return {};
}

inline std::vector<ModelSpec> models_from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open recovery model file '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("'" + path + "': " + e.what());
    }
    std::vector<ModelSpec> out;
    for (const auto& arm : detail::require(j, "arms", path.c_str())) out.push_back(model_from_json(arm));
    return out;
}

inline EnvConfig env_from_json(const json& j) {
    EnvConfig env;
    env.z_max = detail::get_or<int>(j, "z_max", 30);
    env.noise_sd = detail::get_or<double>(j, "noise_sd", 0.1);
    env.initial_z = detail::get_or<std::vector<int>>(j, "initial_z", {});
    if (j.contains("arms")) {
        for (const auto& arm : j.at("arms")) env.models.push_back(model_from_json(arm));
    } else if (j.contains("fixture")) {
        const auto name = j.at("fixture").get<std::string>();
        if (name == "logistic") env.models = fixtures::logistic_models();
        else if (name == "gamma") env.models = fixtures::gamma_models();
        else throw ConfigError("unknown fixture '" + name + "'");
    } else if (j.contains("fixture_file")) {
        env.models = models_from_file(j.at("fixture_file").get<std::string>());
    } else if (j.contains("gp_arms")) {
        const auto& g = j.at("gp_arms");
        const int count = detail::get_or<int>(g, "count", 10);
        if (count < 1) throw ConfigError("gp_arms.count must be >= 1");
        env.models.assign(static_cast<std::size_t>(count), ModelSpec::gp_sample(kernel_from_json(g.value("kernel", json::object()))));
    } else {
        throw ConfigError("env: one of 'arms', 'fixture', 'fixture_file' or 'gp_arms' is required");
    }
    return env;
}

inline json env_to_json(const EnvConfig& env) {
    json arms = json::array();
    for (const auto& m : env.models) arms.push_back(model_to_json(m));
    return {{"z_max", env.z_max}, {"noise_sd", env.noise_sd}, {"initial_z", env.start_z()}, {"arms", arms}};
}

inline PolicyKind policy_kind_from_string(const std::string& s) {
    if (s == "rgp_ucb") return PolicyKind::RgpUcb;
    if (s == "rgp_ts") return PolicyKind::RgpTs;
    if (s == "ucb_z") return PolicyKind::UcbZ;
    if (s == "oracle") return PolicyKind::DStepOracle;
    throw ConfigError("unknown policy kind '" + s + "'");
}

inline PolicyConfig policy_from_json(const json& j) {
    PolicyConfig cfg;
    cfg.kind = policy_kind_from_string(detail::require(j, "kind", "policy").get<std::string>());
    cfg.d = detail::get_or<int>(j, "d", 1);
    cfg.single_play = detail::get_or<bool>(j, "single_play", false);
    cfg.noise_sd = detail::get_or<double>(j, "noise_sd", 0.1);
    if (j.contains("kernel")) cfg.kernel = kernel_from_json(j.at("kernel"));
    if (j.contains("planner")) {
        const auto& p = j.at("planner");
        const auto kind = detail::get_or<std::string>(p, "kind", "exhaustive");
        if (kind == "exhaustive") {
            cfg.planner = {PlannerKind::Exhaustive, 0};
        } else if (kind == "optimistic") {
            cfg.planner = {PlannerKind::Optimistic, detail::get_or<int>(p, "budget", 0)};
        } else {
            throw ConfigError("unknown planner '" + kind + "'");
        }
    }
    return cfg;
}

inline json policy_to_json(const PolicyConfig& cfg) {
    json planner = cfg.planner.kind == PlannerKind::Exhaustive
                       ? json{{"kind", "exhaustive"}}
                       : json{{"kind", "optimistic"}, {"budget", cfg.planner.budget}};
    return {{"kind", to_string(cfg.kind)}, {"d", cfg.d}, {"single_play", cfg.single_play}, {"planner", planner},
            {"kernel", kernel_to_json(cfg.kernel)}, {"noise_sd", cfg.noise_sd}};
}

inline ExperimentConfig experiment_from_json(const json& j) {
    ExperimentConfig cfg;
    cfg.env = env_from_json(detail::require(j, "env", "config"));
    cfg.policy = policy_from_json(detail::require(j, "policy", "config"));
    const json run = j.value("run", json::object());
    cfg.horizon = detail::get_or<long>(run, "horizon", 1000);
    cfg.replications = detail::get_or<int>(run, "replications", 1);
    cfg.master_seed = detail::get_or<std::uint64_t>(run, "seed", 0);
    cfg.output_path = detail::get_or<std::string>(run, "output", "");
    cfg.validate();
    return cfg;
}

inline json experiment_to_json(const ExperimentConfig& cfg) {
    return {{"env", env_to_json(cfg.env)},
            {"policy", policy_to_json(cfg.policy)},
            {"run", {{"horizon", cfg.horizon}, {"replications", cfg.replications}, {"seed", cfg.master_seed}, {"output", cfg.output_path}}}};
}

inline ExperimentConfig load_experiment(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file '" + path + "'");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("'" + path + "': " + e.what());
    }
    return experiment_from_json(j);
}

}  // namespace recband
