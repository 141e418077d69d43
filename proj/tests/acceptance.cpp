// Acceptance harness: runs the nine end-to-end criteria at their pinned
// budgets and prints one PASS/FAIL line per criterion. Exit status is 0 only
// when every criterion passes.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <thread>
#include <vector>

#include "superocc/superocc.hpp"
#include "test_support.hpp"

using namespace superocc;

namespace {

constexpr std::uint64_t kSeed = 20261016;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

unsigned worker_count() { return std::max(1u, std::thread::hardware_concurrency()); }

struct Verdict {
    int id;
    std::string title;
    bool pass;
    std::string detail;
};

std::vector<Verdict> verdicts;

void report(int id, const std::string& title, bool pass, const std::string& detail) {
    verdicts.push_back({id, title, pass, detail});
    std::printf("CRITERION %d %s  %s: %s\n", id, pass ? "PASS" : "FAIL", title.c_str(), detail.c_str());
    std::fflush(stdout);
}

std::string num(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

void line(const MomentReport& r) {
    std::printf("    %-58s est %.6f +- %.6f  oracle %.6f +- %.6f  z %+.2f\n", r.identity.c_str(), r.estimate,
                r.estimate_se, r.oracle, r.oracle_se, r.z_score());
}

SimConfig base_sim(double m) {
    SimConfig s;
    s.dim = Dim{1};
    s.mu = InitialMeasure::dirac(Point{0.0});
    s.unit_mass = m;
    s.horizon = 1.0;
    s.seed = kSeed;
    return s;
}

// 1. Kernel identities and finite-difference order, under 30 s.
void kernel_identities() {
    const auto t0 = Clock::now();
    const auto rows = kernel_selftest();
    const double elapsed = seconds_since(t0);
    std::size_t ok = 0;
    for (const auto& r : rows) {
        ok += r.pass ? 1 : 0;
        if (!r.pass) std::printf("    failed %s: %.3g vs %.3g\n", r.name.c_str(), r.value, r.threshold);
    }
    report(1, "kernel self-test", ok == rows.size() && elapsed < 30.0,
           std::to_string(ok) + "/" + std::to_string(rows.size()) + " checks, runtime " + num("%.1f s", elapsed));
}

// 2. First moments, Zero and Constant(0.5), 400 replicates, m = dt = 1e-3, within 3 SE.
void first_moments() {
    const auto t0 = Clock::now();
    // Independent oracles: the closed form and a quadrature of the time integral.
    const double x_bump = 1.0 / std::sqrt(kTwoPi * 1.5);
    const double y_bump = testing::tanh_sinh([](double s) { return 1.0 / std::sqrt(kTwoPi * (s + 0.5)); }, 0.0, 1.0);
    const auto bump = TestFunction::gaussian_bump(Point{0.0}, 0.5);
    const auto mu = InitialMeasure::dirac(Point{0.0});
    const bool oracles_agree = std::abs(first_moment_X(mu, bump, 1.0) - x_bump) < 1e-9 &&
                               std::abs(first_moment_Y(mu, bump, 1.0) - y_bump) < 1e-9 &&
                               std::abs(x_bump - 0.325735) < 5e-7;
    MomentsConfig cfg;
    cfg.sim = base_sim(1e-3);
    cfg.kernels = {CovKernel::zero(), CovKernel::constant(0.5)};
    cfg.replicates = 400;
    cfg.second_moments = false;
    cfg.threads = worker_count();
    const auto rows = verify_moments(cfg);
    double worst = 0.0;
    for (const auto& r : rows) {
        line(r);
        worst = std::max(worst, std::abs(r.z_score()));
    }
    const double elapsed = seconds_since(t0);
    report(2, "first moments", oracles_agree && worst <= 3.0 && elapsed < 600.0,
           std::to_string(rows.size()) + " rows, max |z| " + num("%.2f", worst) + " (limit 3), oracles " +
               (oracles_agree ? "consistent" : "INCONSISTENT") + ", runtime " + num("%.0f s", elapsed));
}

// 3. Second moments vs the Feynman-Kac oracle (2e5 path pairs), |z| <= 4.
void second_moments() {
    const auto t0 = Clock::now();
    MomentsConfig cfg;
    cfg.sim = base_sim(1e-3);
    cfg.kernels = {CovKernel::constant(0.5), CovKernel::gaussian(0.5, 1.0)};
    cfg.replicates = 400;
    cfg.second_moments = true;
    cfg.oracle.n_paths = 200000;
    cfg.oracle.seed = kSeed;
    cfg.oracle.threads = worker_count();
    cfg.threads = worker_count();
    const auto rows = verify_moments(cfg);
    double worst = 0.0;
    std::size_t graded = 0;
    for (const auto& r : rows) {
        if (r.identity.find("^2") == std::string::npos) continue;
        line(r);
        worst = std::max(worst, std::abs(r.z_score()));
        ++graded;
    }
    const double elapsed = seconds_since(t0);
    report(3, "second moments", graded == 12 && worst <= 4.0 && elapsed < 1200.0,
           std::to_string(graded) + " rows, max |z| " + num("%.2f", worst) + " (limit 4), runtime " +
               num("%.0f s", elapsed));
}

// 4. Replicate variance of M_1(1) within 10% of the plug-in bracket mean.
void quadratic_variation() {
    bool pass = true;
    std::string detail;
    for (const auto& k : {CovKernel::zero(), CovKernel::constant(0.5)}) {
        SimConfig s = base_sim(1e-2);
        s.kernel = k;
        const auto r = qv_check(s, TestFunction::constant(1.0), 20000, worker_count());
        pass = pass && r.pass(0.1);
        std::printf("    %-20s Var M %.4f +- %.4f  plug-in %.4f +- %.4f  gap %.3f\n", r.kernel.c_str(), r.variance,
                    r.variance_se, r.qv_mean, r.qv_se, r.relative_gap());
        detail += (detail.empty() ? "" : ", ") + r.kernel + " gap " + num("%.3f", r.relative_gap());
    }
    report(4, "quadratic variation", pass, detail + " (limit 0.10)");
}

// 5. Mollified occupation approaches the eps = 0 target monotonically;
// Tanaka residual <= 5 dt on every trajectory.
void tanaka_trend() {
    const auto ex = tanaka_experiment(base_sim(1e-3), Point{0.0}, 1.0, default_eps_sequence(), 200, worker_count());
    const double target = testing::tanh_sinh([](double s) { return 1.0 / std::sqrt(kTwoPi * s); }, 0.0, 1.0, 10);
    const bool target_ok = std::abs(ex.target - target) < 1e-6 && std::abs(ex.target - std::sqrt(2.0 / kPi)) < 1e-12;
    std::string gaps;
    for (const auto& r : ex.rows) {
        std::printf("    eps %-7g mean %.5f +- %.5f  gap %.5f\n", r.eps, r.mean_lhs, r.se, r.gap);
        gaps += (gaps.empty() ? "" : " > ") + num("%.4f", r.gap);
    }
    report(5, "Tanaka trend", ex.monotone() && ex.residual_ok() && target_ok,
           "gaps " + gaps + (ex.monotone() ? " (monotone)" : " (NOT monotone)") + ", max residual " +
               num("%.2g", ex.max_residual) + " vs 5 dt = " + num("%.2g", 5.0 * ex.dt));
}

// 6. Green representation residual shrinks >= 1.8x per dt halving.
void green_representation() {
    const auto ex = green_experiment(base_sim(4e-3), Point{0.0}, 1.0, 4e-3, 3, 100, worker_count());
    for (const auto& l : ex.levels) std::printf("    dt %-7g rms residual %.4g\n", l.dt, l.rms);
    std::string ratios;
    for (double r : ex.ratios()) ratios += (ratios.empty() ? "" : ", ") + num("%.2f", r);
    report(6, "Green representation", ex.pass(1.8), "halving ratios " + ratios + " (limit 1.8)");
}

// 7. Hoelder exponents, gated by the calibration harness.
void holder_exponents() {
    HolderConfig cfg;
    cfg.sim = base_sim(1e-3);
    cfg.replicates = 200;
    cfg.nodes = 64;
    cfg.threads = worker_count();
    const auto ex = holder_experiment(cfg);
    for (const auto& c : ex.calibration)
        std::printf("    calibration %-24s expected %.2f estimate %.4f halved %.4f\n", c.name.c_str(), c.expected,
                    c.estimate, c.estimate_halved);
    if (!ex.simulated) {
        report(7, "Hoelder exponents", false, "calibration harness failed; simulation not trusted");
        return;
    }
    std::printf("    spatial %.4f +- %.4f  temporal %.4f +- %.4f\n", ex.spatial.exponent(), ex.spatial.exponent_ci(),
                ex.temporal.exponent(), ex.temporal.exponent_ci());
    report(7, "Hoelder exponents", ex.calibrated() && ex.spatial_pass() && ex.temporal_pass(),
           "spatial " + num("%.3f", ex.spatial.exponent()) + (ex.spatial_pass() ? " in" : " NOT in") +
               " [0.7, 1.1], temporal " + num("%.3f", ex.temporal.exponent()) +
               (ex.temporal_pass() ? " in" : " NOT in") + " [0.35, 0.65]");
}

// 8. Sampler increment covariance at 3 probes, 2e4 draws, within 4 SE.
void sampler_covariance() {
    const std::vector<double> probes = {0.0, 0.3, 1.0};
    bool pass = true;
    double worst = 0.0;
    for (const auto& k : {CovKernel::constant(0.5), CovKernel::gaussian(0.5, 1.0), CovKernel::exponential(0.5, 1.0)}) {
        const auto r = sampler_covariance_check(k, probes, 1, 1e-2, 20000, kSeed);
        pass = pass && r.pass(4.0);
        worst = std::max({worst, r.max_cov_z, r.max_cross_z});
        std::printf("    %-40s cov z %.2f  cross-step z %.2f\n", r.kernel.c_str(), r.max_cov_z, r.max_cross_z);
    }
    report(8, "environment sampler", pass, "max z " + num("%.2f", worst) + " (limit 4)");
}

// 9. Inequality constants finite and stable under doubling.
void inequality_suite() {
    const auto suite = bound_check_suite(kSeed, 200);
    bool pass = true;
    double worst = 0.0;
    for (const auto& b : suite) {
        pass = pass && b.stable(0.1) && b.failures == 0;
        worst = std::max(worst, b.drift());
        std::printf("    %-22s C %.6g (first half %.6g, drift %.4f)\n", b.name.c_str(), b.constant, b.constant_half,
                    b.drift());
    }
    report(9, "inequality suite", pass, std::to_string(suite.size()) + " bounds, max drift " + num("%.4f", worst) +
                                            " (limit 0.10)");
}

}  // namespace

int main() {
    const auto t0 = Clock::now();
    kernel_identities();
    first_moments();
    second_moments();
    quadratic_variation();
    tanaka_trend();
    green_representation();
    holder_exponents();
    sampler_covariance();
    inequality_suite();
    std::size_t passed = 0;
    for (const auto& v : verdicts) passed += v.pass ? 1 : 0;
    std::printf("SUMMARY %zu/%zu criteria passed in %.0f s\n", passed, verdicts.size(), seconds_since(t0));
    return passed == verdicts.size() ? 0 : 1;
}
