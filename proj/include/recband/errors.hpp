#pragma once

#include <stdexcept>
#include <string>

namespace recband {

/// Gram or joint covariance matrix stayed non positive definite after jitter escalation.
class FactorizationFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Information gain requested with zero observation noise.
class NoiseZero : public std::invalid_argument {
public:
    NoiseZero() : std::invalid_argument("information gain is undefined for noise_sd = 0") {}
};

class DepthExceedsArms : public std::invalid_argument {
public:
    DepthExceedsArms(int depth, int arms)
        : std::invalid_argument("single-play lookahead depth " + std::to_string(depth) +
                                " exceeds number of arms " + std::to_string(arms)) {}
};

/// Exhaustive enumeration would exceed the leaf guard; use the optimistic planner instead.
class TreeTooLarge : public std::runtime_error {
public:
    explicit TreeTooLarge(double leaves)
        : std::runtime_error("lookahead tree has " + std::to_string(leaves) +
                             " leaves, above the exhaustive-search limit") {}
};

class InvalidLambda : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Invalid experiment, policy or environment configuration.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class IoFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace recband
