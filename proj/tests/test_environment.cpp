#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "superocc/environment.hpp"
#include "test_support.hpp"

using namespace superocc;
using superocc::testing::RunningStats;

namespace {

// Entrywise empirical covariance check of sqrt(dt)-scaled draws.
struct CovCheck {
    double max_mean_z = 0.0;
    double max_cov_z = 0.0;
    double max_cross_z = 0.0;
};

CovCheck empirical_check(const CovKernel& kernel, const std::vector<double>& coords, int dim, double dt,
                         std::size_t draws, std::uint64_t seed) {
    const PositionView pos{coords, dim};
    const std::size_t m = pos.size();
    const Eigen::MatrixXd g = covariance_matrix(kernel, pos);
    Rng rng(seed);
    std::vector<RunningStats> mean(m);
    std::vector<RunningStats> cov(m * m), cross(m * m);
    NoiseIncrement prev;
    for (std::size_t s = 0; s < draws; ++s) {
        const auto inc = sample_increment(kernel, pos, dt, rng);
        for (std::size_t i = 0; i < m; ++i) {
            mean[i].add(inc.values[i]);
            for (std::size_t j = 0; j < m; ++j) {
                cov[i * m + j].add(inc.values[i] * inc.values[j]);
                if (s > 0) cross[i * m + j].add(prev.values[i] * inc.values[j]);
            }
        }
        prev = inc;
    }
    CovCheck out;
    for (std::size_t i = 0; i < m; ++i) {
        out.max_mean_z = std::max(out.max_mean_z, std::abs(mean[i].mean) / mean[i].se());
        for (std::size_t j = 0; j < m; ++j) {
            const double target = dt * g(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
            out.max_cov_z = std::max(out.max_cov_z, std::abs(cov[i * m + j].mean - target) / cov[i * m + j].se());
            out.max_cross_z = std::max(out.max_cross_z, std::abs(cross[i * m + j].mean) / cross[i * m + j].se());
        }
    }
    return out;
}

}  // namespace

TEST(CovarianceMatrix, Examples) {
    const std::vector<double> x = {0.0, 1.0, -2.5};
    const auto z = covariance_matrix(CovKernel::zero(), {x, 1});
    EXPECT_EQ(z.norm(), 0.0);
    const auto c = covariance_matrix(CovKernel::constant(0.7), {x, 1});
    EXPECT_TRUE(c.isApprox(Eigen::MatrixXd::Constant(3, 3, 0.7)));
    const std::vector<double> two = {0.0, 1.0};
    const auto g = covariance_matrix(CovKernel::gaussian(1.0, 1.0), {two, 1});
    EXPECT_DOUBLE_EQ(g(0, 0), 1.0);
    EXPECT_DOUBLE_EQ(g(1, 1), 1.0);
    EXPECT_NEAR(g(0, 1), std::exp(-0.5), 1e-15);
    EXPECT_EQ(g(0, 1), g(1, 0));
}

TEST(CovarianceMatrix, JitterAndFailure) {
    // Duplicate points: singular but PSD, so a tiny jitter suffices.
    const std::vector<double> dup = {0.3, 0.3, 1.0};
    const auto f = factorize_covariance(covariance_matrix(CovKernel::gaussian(1.0, 0.5), {dup, 1}));
    EXPECT_LE(f.jitter, 1e-10 * 3.0);
    Eigen::MatrixXd bad(2, 2);
    bad << 1.0, 2.0, 2.0, 1.0;
    EXPECT_THROW(factorize_covariance(bad), NumericError);
}

TEST(KernelValidation, RejectsBadParameters) {
    EXPECT_THROW(CovKernel::constant(-1.0), DomainError);
    EXPECT_THROW(CovKernel::gaussian(1.0, 0.0), DomainError);
    EXPECT_THROW(CovKernel::exponential(-0.1, 1.0), DomainError);
}

TEST(GaussianSeries, ReproducesKernel) {
    for (double u_max : {0.0, 1.0, 36.0, 400.0}) {
        const std::size_t count = detail::gaussian_feature_count(u_max);
        std::vector<double> fx(count), fy(count);
        const double lim = std::sqrt(u_max);
        for (double x : {-lim, -0.5 * lim, 0.0, 0.3 * lim, lim}) {
            for (double y : {-lim, 0.1, 0.7 * lim, lim}) {
                detail::gaussian_features(x, count, fx);
                detail::gaussian_features(y, count, fy);
                double s = 0.0;
                for (std::size_t n = 0; n < count; ++n) s += fx[n] * fy[n];
                EXPECT_NEAR(s, std::exp(-0.5 * (x - y) * (x - y)), 1e-12) << "u_max=" << u_max << " x=" << x << " y=" << y;
            }
        }
    }
}

TEST(SampleIncrement, ZeroAndConstant) {
    Rng rng(1);
    const std::vector<double> x = {0.0, 1.0, -2.0, 5.0};
    const auto z = sample_increment(CovKernel::zero(), {x, 1}, 0.01, rng);
    for (double v : z.values) EXPECT_EQ(v, 0.0);
    const auto c = sample_increment(CovKernel::constant(2.0), {x, 1}, 0.01, rng);
    for (double v : c.values) EXPECT_EQ(v, c.values[0]);
    EXPECT_NE(c.values[0], 0.0);
    EXPECT_THROW(sample_increment(CovKernel::zero(), {x, 1}, 0.0, rng), DomainError);
}

TEST(SampleIncrement, ConstantValueIsScaledNormal) {
    // Same engine state: the constant route draws exactly one N(0,1).
    Rng a(9), b(9);
    const std::vector<double> x = {0.0, 1.0};
    const auto inc = sample_increment(CovKernel::constant(0.5), {x, 1}, 0.04, a);
    NormalDist n(0.0, 1.0);
    EXPECT_DOUBLE_EQ(inc.values[1], std::sqrt(0.5 * 0.04) * n(b));
}

TEST(SampleIncrement, Deterministic) {
    const std::vector<double> x = {0.0, 0.4, -1.3};
    for (const auto& k : {CovKernel::gaussian(1.0, 1.0), CovKernel::exponential(0.5, 0.3), CovKernel::constant(1.0)}) {
        Rng a(42), b(42);
        const auto u = sample_increment(k, {x, 1}, 0.1, a);
        const auto v = sample_increment(k, {x, 1}, 0.1, b);
        EXPECT_EQ(u.values, v.values);
    }
}

TEST(SampleIncrement, EmpiricalCovarianceGaussianSeries) {
    const auto r = empirical_check(CovKernel::gaussian(1.0, 1.0), {-0.5, 0.0, 1.2}, 1, 0.01, 20000, 101);
    EXPECT_LT(r.max_mean_z, 4.0);
    EXPECT_LT(r.max_cov_z, 4.0);
    EXPECT_LT(r.max_cross_z, 4.0);
}

TEST(SampleIncrement, EmpiricalCovarianceExponentialSweep) {
    const auto r = empirical_check(CovKernel::exponential(0.8, 0.5), {0.9, -0.2, 0.1}, 1, 0.02, 20000, 102);
    EXPECT_LT(r.max_mean_z, 4.0);
    EXPECT_LT(r.max_cov_z, 4.0);
    EXPECT_LT(r.max_cross_z, 4.0);
}

TEST(SampleIncrement, EmpiricalCovarianceDense) {
    const std::vector<double> pts = {0.0, 0.0, 0.5, -0.2, 1.0, 1.0};
    for (const auto& k : {CovKernel::gaussian(1.0, 0.7), CovKernel::exponential(1.0, 0.7)}) {
        const auto r = empirical_check(k, pts, 2, 0.01, 20000, 103);
        EXPECT_LT(r.max_mean_z, 4.0);
        EXPECT_LT(r.max_cov_z, 4.0);
        EXPECT_LT(r.max_cross_z, 4.0);
    }
}

TEST(SampleIncrement, DuplicatePositionsShareValues) {
    Rng rng(5);
    const std::vector<double> x = {0.25, 0.25, 1.0};
    const auto e = sample_increment(CovKernel::exponential(1.0, 1.0), {x, 1}, 1.0, rng);
    EXPECT_EQ(e.values[0], e.values[1]);
    const auto g = sample_increment(CovKernel::gaussian(1.0, 1.0), {x, 1}, 1.0, rng);
    EXPECT_EQ(g.values[0], g.values[1]);
}

TEST(QuadraticForm, FastRoutesMatchBruteForce) {
    Rng rng(77);
    std::normal_distribution<double> n(0.0, 1.0);
    std::vector<double> x(300), w(300);
    for (auto& v : x) v = 1.5 * n(rng);
    for (auto& v : w) v = std::abs(n(rng));
    for (const auto& k : {CovKernel::constant(0.5), CovKernel::gaussian(0.5, 1.0), CovKernel::exponential(0.7, 0.4)}) {
        const Eigen::MatrixXd g = covariance_matrix(k, {x, 1});
        const Eigen::Map<const Eigen::VectorXd> wv(w.data(), static_cast<Eigen::Index>(w.size()));
        const double brute = wv.dot(g * wv);
        EXPECT_NEAR(kernel_quadratic_form(k, {x, 1}, w), brute, 1e-10 * brute) << k.describe();
    }
    EXPECT_EQ(kernel_quadratic_form(CovKernel::zero(), {x, 1}, w), 0.0);
}
