#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "superocc/parallel.hpp"
#include "superocc/particle_system.hpp"
#include "test_support.hpp"

using namespace superocc;
using superocc::testing::RunningStats;

namespace {

SimConfig small_config(CovKernel kernel = CovKernel::zero(), double m = 1e-2, double horizon = 1.0) {
    SimConfig cfg;
    cfg.dim = Dim{1};
    cfg.mu = InitialMeasure::dirac(Point{0.0});
    cfg.kernel = kernel;
    cfg.unit_mass = m;
    cfg.horizon = horizon;
    cfg.seed = 20261016;
    return cfg;
}

}  // namespace

TEST(Integrate, Examples) {
    ParticleCloud empty;
    EXPECT_EQ(integrate(empty, TestFunction::gaussian_bump(Point{0.0}, 1.0)), 0.0);

    ParticleCloud cloud;
    cloud.unit_mass = 0.5;
    cloud.positions = {-1.0, 1.0};
    EXPECT_EQ(integrate(cloud, TestFunction::constant(1.0)), 1.0);
    EXPECT_NEAR(integrate(cloud, TestFunction::gaussian_bump(Point{0.0}, 1.0)), 0.241971, 1e-6);
}

TEST(Integrate, PowerLawCentreHitsAreCounted) {
    ParticleCloud cloud;
    cloud.unit_mass = 1.0;
    cloud.positions = {0.0, 2.0, 0.0};
    const auto r = integrate_counted(cloud, TestFunction::power_law(Point{0.0}, 0.5));
    EXPECT_EQ(r.singular_hits, 2u);
    EXPECT_NEAR(r.value, std::pow(2.0, -0.5), 1e-15);
}

TEST(SimConfigValidation, Guards) {
    auto cfg = small_config();
    EXPECT_NO_THROW(cfg.validate());
    cfg.horizon = 1.005;
    EXPECT_THROW(cfg.validate(), DomainError);
    cfg = small_config(CovKernel::constant(10.0), 1e-2);
    EXPECT_THROW(cfg.validate(), DomainError);  // 10 * 0.1 > 1/2
    cfg = small_config();
    cfg.snapshot_stride = 3;
    EXPECT_THROW(cfg.validate(), DomainError);
    cfg = small_config();
    cfg.mu = InitialMeasure::dirac(Point{0.0, 0.0});
    EXPECT_THROW(cfg.validate(), DomainError);
}

TEST(Run, ZeroHorizonGivesInitialSnapshot) {
    auto cfg = small_config();
    cfg.horizon = 0.0;
    cfg.mu = InitialMeasure::weighted_diracs({{Point{0.5}, 0.2}, {Point{-1.0}, 0.1}});
    const auto traj = run(cfg);
    ASSERT_EQ(traj.snapshots.size(), 1u);
    EXPECT_EQ(traj.snapshots[0].count(), 30u);
    EXPECT_NEAR(traj.snapshots[0].total_mass(), 0.3, 1e-12);
    EXPECT_TRUE(traj.branching_increments.empty());
}

TEST(Run, SameSeedSameTrajectory) {
    for (const auto& k : {CovKernel::zero(), CovKernel::constant(0.5), CovKernel::gaussian(0.5, 1.0)}) {
        const auto cfg = small_config(k);
        const auto a = run(cfg, 3);
        const auto b = run(cfg, 3);
        ASSERT_EQ(a.snapshots.size(), b.snapshots.size());
        for (std::size_t i = 0; i < a.snapshots.size(); ++i) EXPECT_EQ(a.snapshots[i].positions, b.snapshots[i].positions);
        EXPECT_EQ(a.branching_increments, b.branching_increments);
        const auto c = run(cfg, 4);
        EXPECT_NE(a.snapshots.back().positions, c.snapshots.back().positions);
    }
}

TEST(Run, StrideAndBookkeeping) {
    auto cfg = small_config();
    cfg.snapshot_stride = 10;
    const auto traj = run(cfg);
    EXPECT_EQ(traj.snapshots.size(), 11u);
    EXPECT_EQ(traj.branching_increments.size(), 100u);
    double total = 0.0;
    for (double b : traj.branching_increments) total += b;
    EXPECT_NEAR(traj.snapshots.back().total_mass() - traj.snapshots.front().total_mass(), total, 1e-9);
    EXPECT_NEAR(traj.snapshots.back().time, 1.0, 1e-12);
}

TEST(Step, UnbiasedSplitWithoutNoise) {
    // With zeta = 0 every particle splits with probability exactly 1/2.
    ParticleStepper stepper(CovKernel::zero(), 1e-3);
    Rng rng(17);
    std::size_t splits = 0, trials = 0;
    for (int rep = 0; rep < 2000; ++rep) {
        ParticleCloud cloud;
        cloud.unit_mass = 1e-3;
        cloud.positions = {0.0};
        const auto info = stepper.step(cloud, rng);
        splits += info.offspring / 2;
        ++trials;
        EXPECT_EQ(info.clamped, 0u);
    }
    const double p = static_cast<double>(splits) / static_cast<double>(trials);
    EXPECT_NEAR(p, 0.5, 4.0 * std::sqrt(0.25 / static_cast<double>(trials)));
}

TEST(Step, OffspringStayTogether) {
    ParticleStepper stepper(CovKernel::constant(0.5), 1e-3);
    Rng rng(2);
    ParticleCloud cloud;
    cloud.unit_mass = 1e-3;
    cloud.positions.assign(50, 0.0);
    for (std::size_t i = 0; i < 50; ++i) cloud.positions[i] = 0.1 * static_cast<double>(i);
    const auto before = cloud.positions;
    stepper.step(cloud, rng);
    ASSERT_EQ(cloud.count() % 2, 0u);
    for (std::size_t i = 0; i < cloud.count(); i += 2) EXPECT_EQ(cloud.positions[i], cloud.positions[i + 1]);
    EXPECT_DOUBLE_EQ(cloud.time, 1e-3);
}

TEST(Step, PopulationCapRaisesResourceError) {
    auto cfg = small_config(CovKernel::zero(), 1e-3, 1.0);
    cfg.population_cap = 1100;
    Rng rng(1);
    EXPECT_THROW(run(cfg, rng), ResourceError);
}

TEST(Criticality, MeanTerminalMassZeroKernel) {
    const auto cfg = small_config(CovKernel::zero(), 1e-2, 1.0);
    const auto masses = run_replicates(200, 11, 1, [&](std::size_t, Rng& rng) {
        double last = 0.0;
        simulate(cfg, rng, [&](const ParticleCloud& c, const StepInfo&) { last = c.total_mass(); });
        return last;
    });
    RunningStats s;
    for (double v : masses) s.add(v);
    EXPECT_LT(std::abs(s.mean - 1.0), 3.0 * s.se());
}

TEST(FirstMoment, BumpMatchesSemigroup) {
    // E X_1(p_{0.5}) = p_{1.5}(0, 0) for every unit mass when no environment acts.
    const auto cfg = small_config(CovKernel::zero(), 1e-2, 1.0);
    const auto phi = TestFunction::gaussian_bump(Point{0.0}, 0.5);
    const auto vals = run_replicates(400, 12, 1, [&](std::size_t, Rng& rng) {
        double last = 0.0;
        simulate(cfg, rng, [&](const ParticleCloud& c, const StepInfo&) { last = integrate(c, phi); });
        return last;
    });
    RunningStats s;
    for (double v : vals) s.add(v);
    EXPECT_NEAR(heat_kernel(1.5, Point{0.0}, Point{0.0}), 0.325735, 1e-6);
    EXPECT_LT(std::abs(s.mean - 0.325735), 3.0 * s.se());
}

TEST(Martingale, ConstantFunctionIsMassChange) {
    const auto traj = run(small_config(CovKernel::constant(0.5)), 1);
    const auto series = track_martingale(traj, TestFunction::constant(1.0));
    for (std::size_t k = 0; k < traj.snapshots.size(); ++k)
        EXPECT_NEAR(series.m[k], traj.snapshots[k].total_mass() - traj.snapshots[0].total_mass(), 1e-12);
    EXPECT_THROW(track_martingale(traj, TestFunction::power_law(Point{0.0}, 0.5)), UnsupportedFunctionError);
}

TEST(Martingale, StreamingTrackerMatchesStored) {
    const auto cfg = small_config(CovKernel::gaussian(0.5, 1.0));
    const auto phi = TestFunction::gaussian_bump(Point{0.2}, 0.3);
    const auto traj = run(cfg, 5);
    const auto series = track_martingale(traj, phi);
    MartingaleTracker tracker(smooth_observable(phi), cfg.kernel, cfg.dt());
    for (const auto& c : traj.snapshots) tracker.observe(c);
    EXPECT_NEAR(tracker.martingale(), series.m.back(), 1e-12);
    EXPECT_NEAR(tracker.quadratic_variation(), series.qv.back(), 1e-12);
    EXPECT_GT(tracker.plugin_bracket(), 0.0);
}

TEST(Martingale, PluginBracketForConstantOne) {
    // For phi = 1 and Constant(c): sum_k dt [X_k(1) + c X_k(1)^2] over k < N.
    const double c = 0.5;
    const auto cfg = small_config(CovKernel::constant(c));
    const auto traj = run(cfg, 6);
    MartingaleTracker tracker(smooth_observable(TestFunction::constant(1.0)), cfg.kernel, cfg.dt());
    double expect = 0.0;
    for (std::size_t k = 0; k < traj.snapshots.size(); ++k) {
        tracker.observe(traj.snapshots[k]);
        if (k + 1 < traj.snapshots.size()) {
            const double x = traj.snapshots[k].total_mass();
            expect += cfg.dt() * (x + c * x * x);
        }
    }
    EXPECT_NEAR(tracker.plugin_bracket(), expect, 1e-10);
}

TEST(InitialMeasureSampling, GaussianDensityMoments) {
    const auto mu = InitialMeasure::gaussian_density(Point{1.0, -1.0}, 0.25, 2.0);
    Rng rng(3);
    const auto pos = mu.sample_positions(1e-4, rng);
    ASSERT_EQ(pos.size(), 2u * 20000u);
    RunningStats x, y;
    for (std::size_t i = 0; i < pos.size(); i += 2) {
        x.add(pos[i]);
        y.add(pos[i + 1]);
    }
    EXPECT_LT(std::abs(x.mean - 1.0), 4.0 * x.se());
    EXPECT_LT(std::abs(y.mean + 1.0), 4.0 * y.se());
    EXPECT_NEAR(x.variance(), 0.25, 0.02);
    EXPECT_THROW(InitialMeasure::gaussian_density(Point{0.0}, 0.0, 1.0), DomainError);
}

TEST(ReplicateRunner, ThreadCountDoesNotChangeResults) {
    const auto cfg = small_config(CovKernel::constant(0.5), 1e-2, 0.5);
    auto body = [&](std::size_t, Rng& rng) {
        double last = 0.0;
        simulate(cfg, rng, [&](const ParticleCloud& c, const StepInfo&) { last = c.total_mass(); });
        return last;
    };
    const auto one = run_replicates(16, 99, 1, body);
    const auto four = run_replicates(16, 99, 4, body);
    EXPECT_EQ(one, four);
}
