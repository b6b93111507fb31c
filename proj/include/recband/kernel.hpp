#pragma once

#include <cmath>
#include <cstdlib>
#include <stdexcept>
#include <string>

namespace recband {

enum class KernelFamily { SquaredExponential, Matern, Linear };

/// Covariance function over integer covariates (rounds since last play).
///
/// Stationary families (SquaredExponential, Matern) satisfy k(z, z) = signal_variance.
/// Linear is the bias-plus-slope kernel signal_variance * (1 + z z' / lengthscale^2),
/// whose prior variance grows with z.
struct KernelSpec {
    KernelFamily family = KernelFamily::SquaredExponential;
    double lengthscale = 1.0;
    double signal_variance = 1.0;
    /// Smoothness for Matern; one of 0.5, 1.5, 2.5.
    double nu = 2.5;

    static KernelSpec squared_exponential(double lengthscale, double signal_variance = 1.0) {
        return {KernelFamily::SquaredExponential, lengthscale, signal_variance, 2.5};
    }
    static KernelSpec matern(double nu, double lengthscale, double signal_variance = 1.0) {
        return {KernelFamily::Matern, lengthscale, signal_variance, nu};
    }
    static KernelSpec linear(double lengthscale, double signal_variance = 1.0) {
        return {KernelFamily::Linear, lengthscale, signal_variance, 2.5};
    }

    [[nodiscard]] bool stationary() const { return family != KernelFamily::Linear; }

    void validate() const {
        if (!(lengthscale > 0.0) || !std::isfinite(lengthscale))
            throw std::invalid_argument("kernel lengthscale must be > 0");
        if (!(signal_variance > 0.0) || !std::isfinite(signal_variance))
            throw std::invalid_argument("kernel signal_variance must be > 0");
        if (family == KernelFamily::Matern && nu != 0.5 && nu != 1.5 && nu != 2.5)
            throw std::invalid_argument("Matern nu must be 0.5, 1.5 or 2.5, got " + std::to_string(nu));
    }
};

inline double kernel_eval(const KernelSpec& spec, int z, int z2) {
    const double sv = spec.signal_variance;
    const double l = spec.lengthscale;
    switch (spec.family) {
        case KernelFamily::SquaredExponential: {
            const double r = static_cast<double>(z - z2);
            return sv * std::exp(-r * r / (2.0 * l * l));
        }
        case KernelFamily::Matern: {
            const double r = std::abs(static_cast<double>(z - z2)) / l;
            if (spec.nu == 0.5) return sv * std::exp(-r);
            if (spec.nu == 1.5) {
                const double s = std::sqrt(3.0) * r;
                return sv * (1.0 + s) * std::exp(-s);
            }
            const double s = std::sqrt(5.0) * r;
            return sv * (1.0 + s + s * s / 3.0) * std::exp(-s);
        }
        case KernelFamily::Linear:
            return sv * (1.0 + static_cast<double>(z) * static_cast<double>(z2) / (l * l));
    }
    return 0.0;
}

inline std::string to_string(KernelFamily family) {
    switch (family) {
        case KernelFamily::SquaredExponential: return "se";
        case KernelFamily::Matern: return "matern";
        case KernelFamily::Linear: return "linear";
    }
    return "unknown";
}

}  // namespace recband
