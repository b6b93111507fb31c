#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

#include "oracle.hpp"
#include "recband/gp.hpp"

using namespace recband;

namespace {

struct Instance {
    KernelSpec spec;
    double noise;
    int z_max;
    std::vector<int> zs;
    std::vector<double> ys;
};

Instance random_instance(std::mt19937_64& gen) {
    Instance in;
    in.spec = oracle::random_kernel(gen);
    in.noise = std::uniform_real_distribution<double>(0.05, 1.0)(gen);
    in.z_max = std::uniform_int_distribution<int>(1, 30)(gen);
    const int n = std::uniform_int_distribution<int>(0, 20)(gen);
    std::uniform_int_distribution<int> zd(0, in.z_max);
    std::normal_distribution<double> yd(0.0, 1.0);
    for (int i = 0; i < n; ++i) {
        in.zs.push_back(zd(gen));
        in.ys.push_back(yd(gen));
    }
    return in;
}

}  // namespace

TEST(Kernel, SquaredExponentialValues) {
    const auto se = KernelSpec::squared_exponential(2.0);
    EXPECT_DOUBLE_EQ(kernel_eval(se, 5, 5), 1.0);
    EXPECT_NEAR(kernel_eval(se, 0, 2), std::exp(-0.5), 1e-15);
    EXPECT_NEAR(kernel_eval(se, 0, 2), 0.60653, 1e-5);
}

TEST(Kernel, MaternHalfIsExponential) {
    const auto m = KernelSpec::matern(0.5, 1.0);
    EXPECT_NEAR(kernel_eval(m, 0, 3), 0.049787, 1e-6);
}

TEST(Kernel, SymmetricAndDiagonalEqualsSignalVariance) {
    for (const auto& spec : {KernelSpec::squared_exponential(3.0, 2.5), KernelSpec::matern(1.5, 2.0, 0.7),
                             KernelSpec::matern(2.5, 4.0, 1.3)}) {
        for (int a = 0; a <= 10; ++a) {
            EXPECT_DOUBLE_EQ(kernel_eval(spec, a, a), spec.signal_variance);
            for (int b = 0; b <= 10; ++b) EXPECT_DOUBLE_EQ(kernel_eval(spec, a, b), kernel_eval(spec, b, a));
        }
    }
}

TEST(Kernel, MatchesOracleFormulas) {
    std::mt19937_64 gen(3);
    for (int rep = 0; rep < 50; ++rep) {
        const auto spec = oracle::random_kernel(gen);
        for (int a = 0; a <= 30; a += 3)
            for (int b = 0; b <= 30; b += 5) EXPECT_NEAR(kernel_eval(spec, a, b), oracle::kernel(spec, a, b), 1e-12);
    }
}

TEST(Kernel, ValidateRejectsBadHyperparameters) {
    EXPECT_THROW(KernelSpec::squared_exponential(0.0).validate(), std::invalid_argument);
    EXPECT_THROW(KernelSpec::squared_exponential(1.0, -1.0).validate(), std::invalid_argument);
    EXPECT_THROW(KernelSpec::matern(2.0, 1.0).validate(), std::invalid_argument);
    EXPECT_NO_THROW(KernelSpec::matern(1.5, 1.0).validate());
}

TEST(Kernel, GramIsPositiveSemiDefinite) {
    std::mt19937_64 gen(5);
    for (int rep = 0; rep < 30; ++rep) {
        const auto spec = oracle::random_kernel(gen);
        const int n = 31;
        Eigen::MatrixXd g(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) g(i, j) = kernel_eval(spec, i, j);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(g);
        EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-8 * spec.signal_variance * n);
    }
}

TEST(Posterior, EmptyIsPrior) {
    const auto spec = KernelSpec::squared_exponential(2.0);
    const auto post = posterior_fit(spec, 0.1, std::vector<int>{}, std::vector<double>{}, 10);
    for (int z = 0; z <= 10; ++z) {
        const auto mv = posterior_mean_var(post, z);
        EXPECT_EQ(mv.mean, 0.0);
        EXPECT_DOUBLE_EQ(mv.var, 1.0);
        for (int z2 = 0; z2 <= 10; ++z2) EXPECT_DOUBLE_EQ(posterior_cov(post, z, z2), kernel_eval(spec, z, z2));
    }
}

TEST(Posterior, SingleObservationClosedForm) {
    const std::vector<int> zs{3};
    const std::vector<double> ys{1.0};
    const auto post = posterior_fit(KernelSpec::squared_exponential(2.0), 0.1, zs, ys, 10);
    const auto mv = posterior_mean_var(post, 3);
    // jitter of 1e-10 sits on the diagonal next to the noise variance
    EXPECT_NEAR(mv.mean, 1.0 / 1.01, 1e-8);
    EXPECT_NEAR(mv.var, 1.0 - 1.0 / 1.01, 1e-8);
    EXPECT_NEAR(mv.mean, 0.990099, 1e-6);
    EXPECT_NEAR(mv.var, 0.009901, 1e-6);
}

TEST(Posterior, NoiselessInterpolation) {
    const std::vector<int> zs{2, 7};
    const std::vector<double> ys{0.4, -1.2};
    const auto post = posterior_fit(KernelSpec::squared_exponential(2.0), 0.0, zs, ys, 10);
    EXPECT_NEAR(posterior_mean_var(post, 2).mean, 0.4, 1e-6);
    EXPECT_NEAR(posterior_mean_var(post, 7).mean, -1.2, 1e-6);
}

TEST(Posterior, MatchesDenseOracle) {
    std::mt19937_64 gen(11);
    for (int rep = 0; rep < 200; ++rep) {
        const auto in = random_instance(gen);
        const auto post = posterior_fit(in.spec, in.noise, in.zs, in.ys, in.z_max);
        const oracle::Dense ref(in.spec, in.noise, in.zs, in.ys, post.jitter());
        for (int z = 0; z <= in.z_max; ++z) {
            const auto mv = posterior_mean_var(post, z);
            EXPECT_NEAR(mv.mean, ref.mean(z), 1e-8);
            EXPECT_NEAR(mv.var, ref.var(z), 1e-8);
            const auto direct = post.mean_var_direct(z);
            EXPECT_NEAR(direct.mean, ref.mean(z), 1e-8);
            EXPECT_NEAR(direct.var, ref.var(z), 1e-8);
            for (int z2 = 0; z2 <= in.z_max; z2 += 3) EXPECT_NEAR(posterior_cov(post, z, z2), ref.cov(z, z2), 1e-8);
        }
    }
}

TEST(Posterior, AppendMatchesBatchFit) {
    std::mt19937_64 gen(13);
    for (int rep = 0; rep < 50; ++rep) {
        const auto in = random_instance(gen);
        GpPosterior inc(in.spec, in.noise, in.z_max);
        for (std::size_t i = 0; i < in.zs.size(); ++i) inc = posterior_append(inc, in.zs[i], in.ys[i]);
        const auto batch = posterior_fit(in.spec, in.noise, in.zs, in.ys, in.z_max);
        for (int z = 0; z <= in.z_max; ++z) {
            EXPECT_NEAR(inc.mean_var(z).mean, batch.mean_var(z).mean, 1e-8);
            EXPECT_NEAR(inc.mean_var(z).var, batch.mean_var(z).var, 1e-8);
            for (int z2 = 0; z2 <= in.z_max; ++z2) EXPECT_NEAR(inc.cov(z, z2), batch.cov(z, z2), 1e-8);
        }
        for (std::size_t i = 0; i < in.zs.size(); ++i)
            for (std::size_t j = 0; j <= i; ++j) EXPECT_NEAR(inc.factor(i, j), batch.factor(i, j), 1e-8);
    }
}

TEST(Posterior, AppendToEmptyEqualsFit) {
    const auto spec = KernelSpec::squared_exponential(2.0);
    const auto appended = posterior_append(GpPosterior(spec, 0.1, 10), 4, 0.3);
    const auto fit = posterior_fit(spec, 0.1, std::vector<int>{4}, std::vector<double>{0.3}, 10);
    for (int z = 0; z <= 10; ++z) {
        EXPECT_NEAR(appended.mean_var(z).mean, fit.mean_var(z).mean, 1e-12);
        EXPECT_NEAR(appended.mean_var(z).var, fit.mean_var(z).var, 1e-12);
    }
}

TEST(Posterior, VarianceDropsAtAppendedPoint) {
    GpPosterior post(KernelSpec::squared_exponential(2.0), 0.1, 10);
    EXPECT_DOUBLE_EQ(post.mean_var(5).var, 1.0);
    post.append(5, 0.0);
    EXPECT_NEAR(post.mean_var(5).var, 0.009901, 1e-6);
}

TEST(Posterior, TenAppendsMatchRefit) {
    std::mt19937_64 gen(17);
    const auto spec = KernelSpec::matern(2.5, 3.0);
    GpPosterior post(spec, 0.2, 30);
    std::vector<int> zs;
    std::vector<double> ys;
    for (int i = 0; i < 10; ++i) {
        zs.push_back(std::uniform_int_distribution<int>(0, 30)(gen));
        ys.push_back(std::normal_distribution<double>()(gen));
        post.append(zs.back(), ys.back());
    }
    auto refit = post;
    refit.refit();
    for (int z = 0; z <= 30; ++z) {
        EXPECT_LT(std::abs(post.mean_var(z).mean - refit.mean_var(z).mean), 1e-8);
        EXPECT_LT(std::abs(post.mean_var(z).var - refit.mean_var(z).var), 1e-8);
    }
}

TEST(Posterior, VarianceBoundedAndNonIncreasing) {
    std::mt19937_64 gen(19);
    for (int rep = 0; rep < 30; ++rep) {
        const auto spec = oracle::random_kernel(gen);
        if (!spec.stationary()) continue;
        GpPosterior post(spec, 0.1, 30);
        std::vector<double> prev(31);
        for (int z = 0; z <= 30; ++z) prev[z] = post.mean_var(z).var;
        for (int n = 0; n < 25; ++n) {
            post.append(std::uniform_int_distribution<int>(0, 30)(gen), std::normal_distribution<double>()(gen));
            for (int z = 0; z <= 30; ++z) {
                const double v = post.mean_var(z).var;
                EXPECT_GE(v, 0.0);
                EXPECT_LE(v, spec.signal_variance + post.jitter());
                EXPECT_LE(v, prev[z] + 1e-8);
                prev[z] = v;
            }
        }
    }
}

TEST(Posterior, RankOneIdentityAndLemmaBound) {
    std::mt19937_64 gen(23);
    const double noise = 0.3;
    for (int rep = 0; rep < 20; ++rep) {
        const auto spec = oracle::random_kernel(gen);
        if (!spec.stationary()) continue;
        GpPosterior post(spec, noise, 30);
        for (int n = 0; n < 30; ++n) {
            const int zn = std::uniform_int_distribution<int>(0, 30)(gen);
            const auto before = post;
            post.append(zn, std::normal_distribution<double>()(gen));
            const double s_n = before.mean_var(zn).var;
            for (int z = 0; z <= 30; ++z) {
                const double drop = before.mean_var(z).var - post.mean_var(z).var;
                const double k = before.cov(zn, z);
                EXPECT_NEAR(drop, k * k / (s_n + noise * noise), 1e-8);
                EXPECT_LE(drop, s_n / (noise * noise) + 1e-8);
            }
        }
    }
}

TEST(Posterior, CovarianceCauchySchwarz) {
    std::mt19937_64 gen(29);
    for (int rep = 0; rep < 30; ++rep) {
        const auto in = random_instance(gen);
        const auto post = posterior_fit(in.spec, in.noise, in.zs, in.ys, in.z_max);
        for (int a = 0; a <= in.z_max; ++a)
            for (int b = 0; b <= in.z_max; ++b) {
                const double va = post.mean_var(a).var;
                const double vb = post.mean_var(b).var;
                EXPECT_DOUBLE_EQ(post.cov(a, b), post.cov(b, a));
                EXPECT_LE(std::abs(post.cov(a, b)), std::sqrt(va * vb) + 1e-8);
                EXPECT_LE(2 * std::abs(post.cov(a, b)), va + vb + 1e-8);
            }
        for (int a = 0; a <= in.z_max; ++a) EXPECT_NEAR(post.cov(a, a), post.mean_var(a).var, 1e-12);
    }
}

TEST(Posterior, RejectsOffGridAppendAndMismatchedFit) {
    GpPosterior post(KernelSpec::squared_exponential(1.0), 0.1, 5);
    EXPECT_THROW(post.append(6, 0.0), std::invalid_argument);
    EXPECT_THROW(post.append(-1, 0.0), std::invalid_argument);
    EXPECT_THROW(posterior_fit(KernelSpec::squared_exponential(1.0), 0.1, std::vector<int>{1, 2},
                               std::vector<double>{0.0}, 5),
                 std::invalid_argument);
}

TEST(Posterior, IllConditionedGramEscalatesJitter) {
    // a tiny linear-kernel lengthscale makes the Gram entries huge and rank two,
    // so the starting jitter is lost to rounding
    const auto spec = KernelSpec::linear(0.01);
    std::vector<int> zs;
    std::vector<double> ys;
    for (int i = 0; i < 10; ++i) {
        zs.push_back(1 + (7 * i) % 30);
        ys.push_back(0.1 * i);
    }
    const auto post = posterior_fit(spec, 0.0, zs, ys, 30);
    EXPECT_GT(post.jitter(), GpPosterior::kJitterStart * spec.signal_variance);
    EXPECT_LE(post.jitter(), GpPosterior::kJitterLimit * spec.signal_variance * (1 + 1e-9));

    GpPosterior inc(spec, 0.0, 30);
    for (std::size_t i = 0; i < zs.size(); ++i) inc.append(zs[i], ys[i]);
    EXPECT_EQ(inc.jitter(), post.jitter());
}

TEST(Posterior, RepeatedNoiselessPointsInterpolate) {
    const auto spec = KernelSpec::squared_exponential(2.0);
    const auto post = posterior_fit(spec, 0.0, std::vector<int>{4, 4, 4}, std::vector<double>{0.5, 0.5, 0.5}, 8);
    EXPECT_NEAR(post.mean_var(4).mean, 0.5, 1e-5);
    GpPosterior inc(spec, 0.0, 8);
    for (int i = 0; i < 3; ++i) inc.append(4, 0.5);
    EXPECT_NEAR(inc.mean_var(4).mean, 0.5, 1e-5);
}

TEST(JointSample, DuplicatesShareValues) {
    GpPosterior post(KernelSpec::squared_exponential(2.0), 0.1, 10);
    RandomStream rng(1);
    const std::vector<int> zs{4, 4};
    const auto draw = posterior_joint_sample(post, zs, rng);
    ASSERT_EQ(draw.size(), 2u);
    EXPECT_EQ(draw[0], draw[1]);

    const std::vector<int> mixed{0, 1, 0, 1, 2};
    const auto d2 = posterior_joint_sample(post, mixed, rng);
    EXPECT_EQ(d2[0], d2[2]);
    EXPECT_EQ(d2[1], d2[3]);
}

TEST(JointSample, DegeneratePosteriorReturnsObservation) {
    const std::vector<int> zs{3};
    const std::vector<double> ys{0.8};
    const auto post = posterior_fit(KernelSpec::squared_exponential(2.0), 1e-6, zs, ys, 10);
    RandomStream rng(9);
    for (int i = 0; i < 20; ++i) EXPECT_NEAR(posterior_joint_sample(post, zs, rng)[0], 0.8, 1e-4);
}

TEST(JointSample, MonteCarloMomentsMatchPosterior) {
    const std::vector<int> obs{2, 6};
    const std::vector<double> ys{0.3, -0.4};
    const auto post = posterior_fit(KernelSpec::squared_exponential(3.0), 0.3, obs, ys, 10);
    const std::vector<int> zs{0, 5};
    RandomStream rng(42);
    const int n = 100000;
    double m0 = 0, m5 = 0, s00 = 0, s55 = 0, s05 = 0;
    std::vector<double> a(n), b(n);
    for (int i = 0; i < n; ++i) {
        const auto d = posterior_joint_sample(post, zs, rng);
        a[i] = d[0];
        b[i] = d[1];
        m0 += d[0];
        m5 += d[1];
    }
    m0 /= n;
    m5 /= n;
    for (int i = 0; i < n; ++i) {
        s00 += (a[i] - m0) * (a[i] - m0);
        s55 += (b[i] - m5) * (b[i] - m5);
        s05 += (a[i] - m0) * (b[i] - m5);
    }
    s00 /= n - 1;
    s55 /= n - 1;
    s05 /= n - 1;
    const double c = post.cov(0, 5);
    const double v0 = post.mean_var(0).var;
    const double v5 = post.mean_var(5).var;
    // standard error of a sample covariance of a bivariate normal
    const double se_cov = std::sqrt((v0 * v5 + c * c) / n);
    EXPECT_LT(std::abs(s05 - c), 3 * se_cov);
    EXPECT_LT(std::abs(m0 - post.mean_var(0).mean), 3 * std::sqrt(v0 / n));
    EXPECT_LT(std::abs(m5 - post.mean_var(5).mean), 3 * std::sqrt(v5 / n));
    EXPECT_LT(std::abs(s00 - v0), 3 * v0 * std::sqrt(2.0 / n));
    EXPECT_LT(std::abs(s55 - v5), 3 * v5 * std::sqrt(2.0 / n));
}

TEST(JointSample, SameSeedSameDraw) {
    GpPosterior post(KernelSpec::matern(1.5, 2.0), 0.1, 10);
    const std::vector<int> zs{0, 3, 7, 10};
    RandomStream r1(77), r2(77);
    EXPECT_EQ(posterior_joint_sample(post, zs, r1), posterior_joint_sample(post, zs, r2));
}

TEST(JointSample, EmptyListRejected) {
    GpPosterior post(KernelSpec::squared_exponential(1.0), 0.1, 3);
    RandomStream rng(1);
    EXPECT_THROW(posterior_joint_sample(post, std::vector<int>{}, rng), std::invalid_argument);
}

TEST(InformationGain, ClosedFormValues) {
    const auto se = KernelSpec::squared_exponential(2.0);
    EXPECT_EQ(information_gain(se, 0.1, std::vector<int>{}), 0.0);
    EXPECT_NEAR(information_gain(se, 1.0, std::vector<int>{0}), 0.5 * std::log(2.0), 1e-12);
    EXPECT_NEAR(information_gain(se, 1.0, std::vector<int>{0}), 0.34657, 1e-5);
}

TEST(InformationGain, ZeroNoiseThrows) {
    EXPECT_THROW(information_gain(KernelSpec::squared_exponential(2.0), 0.0, std::vector<int>{1}), NoiseZero);
}

TEST(InformationGain, RepeatedPointIncrementsShrink) {
    const auto se = KernelSpec::squared_exponential(2.0);
    std::vector<int> zs;
    double prev_gain = 0.0;
    double prev_inc = INFINITY;
    for (int n = 1; n <= 15; ++n) {
        zs.push_back(5);
        const double g = information_gain(se, 0.5, zs);
        const double inc = g - prev_gain;
        EXPECT_GE(inc, 0.0);
        EXPECT_LT(inc, prev_inc);
        prev_inc = inc;
        prev_gain = g;
    }
}

TEST(InformationGain, MatchesDenseLogDeterminant) {
    // I = 1/2 log det(I + K / noise^2) for the whole sequence at once.
    std::mt19937_64 gen(31);
    for (int rep = 0; rep < 20; ++rep) {
        const auto spec = oracle::random_kernel(gen);
        const double noise = std::uniform_real_distribution<double>(0.1, 1.0)(gen);
        std::vector<int> zs(static_cast<std::size_t>(std::uniform_int_distribution<int>(1, 15)(gen)));
        for (auto& z : zs) z = std::uniform_int_distribution<int>(0, 20)(gen);
        const auto n = static_cast<Eigen::Index>(zs.size());
        Eigen::MatrixXd m(n, n);
        for (Eigen::Index i = 0; i < n; ++i)
            for (Eigen::Index j = 0; j < n; ++j) m(i, j) = oracle::kernel(spec, zs[i], zs[j]) / (noise * noise);
        m += Eigen::MatrixXd::Identity(n, n);
        const double expected = 0.5 * Eigen::LLT<Eigen::MatrixXd>(m).matrixLLT().diagonal().array().log().sum() * 2.0;
        EXPECT_NEAR(information_gain(spec, noise, zs), expected, 1e-6);
    }
}

TEST(InformationGain, NonNegativeAndMonotoneInPrefix) {
    std::mt19937_64 gen(37);
    const auto spec = KernelSpec::matern(0.5, 2.0);
    std::vector<int> zs;
    double prev = 0.0;
    for (int i = 0; i < 25; ++i) {
        zs.push_back(std::uniform_int_distribution<int>(0, 30)(gen));
        const double g = information_gain(spec, 0.2, zs);
        EXPECT_GE(g, prev - 1e-12);
        prev = g;
    }
}

TEST(InformationGain, IndependentOfObservedValues) {
    // Posterior variances do not depend on y: two fits with shuffled y agree.
    std::mt19937_64 gen(41);
    const auto spec = KernelSpec::squared_exponential(3.0);
    std::vector<int> zs{1, 4, 4, 9, 12};
    std::vector<double> ys{0.1, -0.3, 0.7, 1.1, -2.0};
    auto shuffled = ys;
    std::shuffle(shuffled.begin(), shuffled.end(), gen);
    const auto a = posterior_fit(spec, 0.2, zs, ys, 15);
    const auto b = posterior_fit(spec, 0.2, zs, shuffled, 15);
    for (int z = 0; z <= 15; ++z) EXPECT_NEAR(a.mean_var(z).var, b.mean_var(z).var, 1e-14);
}
