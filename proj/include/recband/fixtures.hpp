#pragma once

#include <array>
#include <vector>

#include "recband/environment.hpp"

namespace recband::fixtures {

/// Logistic recovery parameters (theta0, theta1, theta2) for the ten-arm parametric benchmark.
inline constexpr std::array<std::array<double, 3>, 10> kLogisticTheta{{
    {0.584, 0.521, 12.239},
    {0.971, 0.357, 10.460},
    {0.121, 0.622, 25.631},
    {0.240, 0.943, 18.870},
    {0.613, 0.925, 20.310},
    {0.480, 0.914, 1.452},
    {0.974, 0.484, 10.128},
    {0.780, 0.422, 0.396},
    {0.658, 0.591, 23.264},
    {0.687, 0.753, 7.908},
}};

/// Modified gamma recovery parameters for the same benchmark.
inline constexpr std::array<std::array<double, 3>, 10> kGammaTheta{{
    {2.068, 0.249, 0.508},
    {5.023, 0.375, 0.551},
    {3.657, 0.470, 0.772},
    {0.560, 0.176, 0.569},
    {3.901, 0.747, 0.500},
    {0.600, 0.145, 0.266},
    {6.482, 0.522, 0.554},
    {13.645, 0.748, 0.678},
    {7.365, 0.562, 0.288},
    {2.705, 0.593, 0.381},
}};

inline std::vector<ModelSpec> logistic_models() {
    std::vector<ModelSpec> out;
    for (const auto& t : kLogisticTheta) out.push_back(ModelSpec::logistic(t[0], t[1], t[2]));
    return out;
}

inline std::vector<ModelSpec> gamma_models() {
    std::vector<ModelSpec> out;
    for (const auto& t : kGammaTheta) out.push_back(ModelSpec::mod_gamma(t[0], t[1], t[2]));
    return out;
}

}  // namespace recband::fixtures
