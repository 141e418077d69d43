#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "superocc/occupation.hpp"
#include "superocc/parallel.hpp"
#include "test_support.hpp"

using namespace superocc;
using superocc::testing::RunningStats;
using superocc::testing::tanh_sinh;

namespace {

// A single particle of mass 1 that never moves or branches.
Trajectory frozen_trajectory(const Point& at, double dt, std::size_t steps) {
    Trajectory traj;
    traj.dt = dt;
    traj.stride = 1;
    traj.dim = at.dim();
    for (std::size_t k = 0; k <= steps; ++k) {
        ParticleCloud c;
        c.time = dt * static_cast<double>(k);
        c.dim = at.dim();
        c.unit_mass = 1.0;
        c.positions.assign(at.coords().begin(), at.coords().end());
        traj.snapshots.push_back(std::move(c));
    }
    traj.branching_increments.assign(steps, 0.0);
    return traj;
}

SimConfig zero_kernel_config(double m, double horizon = 1.0) {
    SimConfig cfg;
    cfg.dim = Dim{1};
    cfg.mu = InitialMeasure::dirac(Point{0.0});
    cfg.kernel = CovKernel::zero();
    cfg.unit_mass = m;
    cfg.horizon = horizon;
    cfg.seed = 20261016;
    return cfg;
}

// int_0^t p_{s+h}(0, x) ds in d = 1, by tanh-sinh.
double mean_density_oracle(double t, double h, double x) {
    return tanh_sinh([&](double s) { return std::exp(-x * x / (2.0 * (s + h))) / std::sqrt(2.0 * std::numbers::pi * (s + h)); },
                     0.0, t);
}

}  // namespace

TEST(Occupation, ZeroHorizonIsZero) {
    const auto traj = frozen_trajectory(Point{0.3}, 0.01, 0);
    const auto acc = accumulate(traj);
    EXPECT_EQ(acc(0.0, TestFunction::constant(1.0)), 0.0);
    EXPECT_EQ(acc(0.0, TestFunction::gaussian_bump(Point{0.0}, 0.1)), 0.0);
    EXPECT_THROW(acc(0.5, TestFunction::constant(1.0)), DomainError);
}

TEST(Occupation, FrozenParticleIsLinearInTime) {
    const auto traj = frozen_trajectory(Point{0.0}, 0.01, 100);
    const auto acc = accumulate(traj);
    const auto phi = TestFunction::gaussian_bump(Point{0.4}, 0.2);
    const double phi0 = phi(Point{0.0});
    for (double t : {0.0, 0.25, 0.5, 1.0}) EXPECT_NEAR(acc(t, phi), t * phi0, 1e-12);
    EXPECT_THROW(acc(0.255, phi), DomainError);
}

TEST(Occupation, MonotoneAndLinear) {
    const auto traj = run(zero_kernel_config(1e-2), 2);
    const auto acc = accumulate(traj);
    const auto f = TestFunction::gaussian_bump(Point{0.0}, 0.3);
    const auto g = TestFunction::gaussian_bump(Point{1.0}, 0.1);
    const auto yf = acc.series(f);
    const auto yg = acc.series(g);
    EXPECT_EQ(yf.front(), 0.0);
    for (std::size_t k = 1; k < yf.size(); ++k) EXPECT_GE(yf[k], yf[k - 1]);
    for (std::size_t k = 0; k < yf.size(); k += 10) {
        const double combo = acc.at_index(k, [&](std::span<const double> x) { return 2.0 * f(x) - 0.5 * g(x); });
        EXPECT_NEAR(combo, 2.0 * yf[k] - 0.5 * yg[k], 1e-12);
    }
    double sup_mass = 0.0;
    for (const auto& c : traj.snapshots) sup_mass = std::max(sup_mass, c.total_mass());
    EXPECT_LE(acc(1.0, TestFunction::constant(1.0)), sup_mass + 1e-12);
}

TEST(DensityField, EmptyAndFrozen) {
    const auto grid = Grid::line(-2.0, 2.0, 41);
    Trajectory empty;
    const auto zero = density_field(accumulate(empty), 0.0, 0.1, grid);
    for (double v : zero.values) EXPECT_EQ(v, 0.0);

    const auto traj = frozen_trajectory(Point{0.0}, 0.01, 100);
    const auto field = density_field(accumulate(traj), 1.0, 0.1, grid);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double x = grid.node(i)[0];
        EXPECT_NEAR(field.values[i], heat_kernel_r2(0.1, x * x, 1), 1e-12);
    }
}

TEST(DensityField, RejectsBadInput) {
    const auto traj = frozen_trajectory(Point{0.0}, 0.01, 10);
    EXPECT_THROW(density_field(accumulate(traj), 0.1, 0.0, Grid::line(-1.0, 1.0, 5)), DomainError);
    Grid four = Grid::line(-1.0, 1.0, 5);
    four.dim = 4;
    try {
        density_field(accumulate(traj), 0.1, 0.1, four);
        FAIL() << "d = 4 accepted";
    } catch (const DomainError& e) {
        EXPECT_NE(std::string(e.what()).find("singular"), std::string::npos);
    }
    EXPECT_THROW(Grid::cube(Dim{4}, -1.0, 1.0, 3), DomainError);
}

TEST(DensityField, MassConsistency) {
    for (int d : {1, 2}) {
        auto cfg = zero_kernel_config(1e-2);
        cfg.dim = Dim{d};
        cfg.mu = InitialMeasure::dirac(Point::origin(Dim{d}));
        const auto traj = run(cfg, 4);
        const auto acc = accumulate(traj);
        // Brownian range over [0,1] plus bandwidth stays well inside [-6, 6].
        const auto grid = Grid::cube(Dim{d}, -6.0, 6.0, d == 1 ? 241 : 121);
        const auto field = density_field(acc, 1.0, 0.05, grid);
        const double y1 = acc(1.0, TestFunction::constant(1.0));
        for (double v : field.values) EXPECT_GE(v, 0.0);
        EXPECT_NEAR(field.integral(), y1, 0.02 * y1) << "d=" << d;
    }
}

TEST(DensityField, ThreeDimensionalFrozen) {
    const auto traj = frozen_trajectory(Point{0.0, 0.0, 0.0}, 0.1, 10);
    const auto grid = Grid::cube(Dim{3}, -1.0, 1.0, 5);
    const auto field = density_field(accumulate(traj), 1.0, 0.2, grid);
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const auto x = grid.node(i);
        EXPECT_NEAR(field.values[i], heat_kernel_r2(0.2, x.norm() * x.norm(), 3), 1e-12);
    }
}

TEST(DensityRecorder, MatchesBatchField) {
    const auto cfg = zero_kernel_config(1e-2);
    const auto traj = run(cfg, 7);
    const auto grid = Grid::line(-3.0, 3.0, 31);
    DensityRecorder rec(grid, 0.05, traj.spacing(), {50, 100});
    for (const auto& c : traj.snapshots) rec.observe(c);
    ASSERT_EQ(rec.fields().size(), 2u);
    const auto acc = accumulate(traj);
    for (const auto& f : rec.fields()) {
        const auto batch = density_field(acc, f.t, 0.05, grid);
        for (std::size_t i = 0; i < grid.size(); ++i) EXPECT_NEAR(f.values[i], batch.values[i], 1e-12);
    }
}

TEST(OccupationEnsemble, MeanMassAndDensity) {
    const auto cfg = zero_kernel_config(2e-3);
    const double h = 0.05;
    const std::vector<double> nodes = {-1.5, -1.0, -0.6, -0.3, 0.0, 0.3, 0.6, 1.0, 1.5};
    struct Obs {
        double mass;
        std::vector<double> dens;
    };
    const auto obs = run_replicates(400, purpose_seed(20261016, StreamPurpose::Harness), 1, [&](std::size_t i, Rng&) {
        const auto traj = run(cfg, i);
        const auto acc = accumulate(traj);
        Obs o;
        o.mass = acc(1.0, TestFunction::constant(1.0));
        for (double x : nodes) o.dens.push_back(acc(1.0, TestFunction::gaussian_bump(Point{x}, h)));
        return o;
    });
    RunningStats mass;
    std::vector<RunningStats> dens(nodes.size());
    for (const auto& o : obs) {
        mass.add(o.mass);
        for (std::size_t j = 0; j < nodes.size(); ++j) dens[j].add(o.dens[j]);
    }
    EXPECT_LT(std::abs(mass.mean - 1.0), 3.0 * mass.se());
    for (std::size_t j = 0; j < nodes.size(); ++j) {
        const double target = mean_density_oracle(1.0, h, nodes[j]);
        EXPECT_LT(std::abs(dens[j].mean - target), 3.0 * dens[j].se()) << "x=" << nodes[j] << " target=" << target;
    }
}

TEST(Tanaka, FrozenParticle) {
    const auto traj = frozen_trajectory(Point{0.0}, 0.01, 100);
    const auto rep = tanaka_check(traj, Point{0.2}, 1.0);
    ASSERT_EQ(rep.terms.size(), 3u);
    for (const auto& t : rep.terms) {
        EXPECT_NEAR(t.lhs, heat_kernel_r2(t.eps, 0.04, 1), 1e-12);
        EXPECT_LE(t.residual, 5.0 * rep.dt);
    }
    EXPECT_EQ(rep.successive_gaps.size(), 2u);
}

TEST(Tanaka, Errors) {
    const auto traj = frozen_trajectory(Point{0.0}, 0.01, 10);
    EXPECT_THROW(tanaka_check(traj, Point{0.0}, 0.0), DomainError);
    EXPECT_THROW(tanaka_check(traj, Point{0.0, 0.0}, 1.0), DomainError);
    EXPECT_THROW(tanaka_check(traj, Point{0.0}, 1.0, {0.1, 0.0}), DomainError);
    const auto traj3 = frozen_trajectory(Point{0.5, 0.0, 0.0}, 0.01, 10);
    EXPECT_NO_THROW(tanaka_check(traj3, Point{0.0, 0.0, 0.0}, 0.0));
}

TEST(Tanaka, ResidualAndTrend) {
    const auto cfg = zero_kernel_config(2e-3);
    const double target = std::sqrt(2.0 / std::numbers::pi);  // int_0^1 p_s(0,0) ds
    const auto reps = run_replicates(200, purpose_seed(20261016, StreamPurpose::Harness), 1,
                                     [&](std::size_t i, Rng&) { return tanaka_check(run(cfg, i), Point{0.0}, 1.0); });
    std::vector<RunningStats> lhs(3);
    for (const auto& r : reps) {
        EXPECT_LE(r.max_residual(), 5.0 * cfg.dt());
        for (std::size_t j = 0; j < 3; ++j) lhs[j].add(r.terms[j].lhs);
    }
    for (std::size_t j = 0; j + 1 < 3; ++j)
        EXPECT_LT(std::abs(lhs[j + 1].mean - target), std::abs(lhs[j].mean - target)) << "eps index " << j;
    // Without an environment E X_{t_k}(p_eps) = p_{t_k + eps}(0, 0) exactly, so
    // the left Riemann sum of that is the expectation of each LHS.
    const auto& eps = default_eps_sequence();
    for (std::size_t j = 0; j < 3; ++j) {
        double expect = 0.0;
        for (std::size_t k = 0; k < cfg.steps(); ++k)
            expect += cfg.dt() * heat_kernel_r2(cfg.dt() * static_cast<double>(k) + eps[j], 0.0, 1);
        EXPECT_LT(std::abs(lhs[j].mean - expect), 3.0 * lhs[j].se()) << "eps=" << eps[j];
    }
}

TEST(GreenRep, SemigroupOnResolventMatchesLaplaceForm) {
    // P_s g_alpha = e^{alpha s} (g_alpha - int_0^s e^{-alpha r} p_r dr), checked by direct quadrature.
    for (int d : {1, 2, 3}) {
        for (double alpha : {0.5, 2.0}) {
            for (double s : {0.05, 0.7}) {
                for (double r : {0.1, 0.9}) {
                    const double head = tanh_sinh([&](double u) { return std::exp(-alpha * u) * heat_kernel_r2(u, r * r, d); },
                                                  0.0, s);
                    const double expect = std::exp(alpha * s) * (resolvent_radial(alpha, r, d) - head);
                    EXPECT_NEAR(resolvent_semigroup(alpha, s, r, d), expect, 1e-7 * std::max(1.0, expect))
                        << "d=" << d << " alpha=" << alpha << " s=" << s << " r=" << r;
                }
            }
        }
    }
}

TEST(GreenRep, ZeroHorizonAndErrors) {
    const auto traj = frozen_trajectory(Point{0.4}, 0.01, 0);
    EXPECT_EQ(green_rep_check(traj, Point{0.0}, 1.0).residual, 0.0);
    EXPECT_THROW(green_rep_check(traj, Point{0.0}, 0.0), DomainError);
    EXPECT_THROW(green_rep_check(traj, Point{0.0, 0.0}, 1.0), DomainError);
}

TEST(GreenRep, TerminalMeanMatchesSemigroup) {
    const auto cfg = zero_kernel_config(2e-3);
    const auto reps = run_replicates(200, purpose_seed(20261016, StreamPurpose::Harness), 1,
                                     [&](std::size_t i, Rng&) { return green_rep_check(run(cfg, i), Point{0.0}, 1.0); });
    RunningStats terminal;
    for (const auto& r : reps) {
        terminal.add(r.terminal);
        EXPECT_NEAR(r.initial, shifted_resolvent(1.0, 1.0, 0.0, 1), 1e-12);
        EXPECT_LT(std::abs(r.residual), 0.1);
    }
    EXPECT_LT(std::abs(terminal.mean - shifted_resolvent(1.0, 1.0, 0.0, 1)), 3.0 * terminal.se());
}
