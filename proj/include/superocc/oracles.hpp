#pragma once

// Ground-truth evaluation of the first and second moments of X and Y:
// exact first moments through the heat semigroup, Feynman-Kac Monte Carlo
// over pairs of independent Brownian paths for the second moments, a
// semi-analytic value for constant environments, and the conditional first
// moment V_1 driven by a noise realization stored on a lattice.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "superocc/core.hpp"
#include "superocc/environment.hpp"
#include "superocc/kernels.hpp"
#include "superocc/occupation.hpp"
#include "superocc/parallel.hpp"
#include "superocc/particle_system.hpp"
#include "superocc/quadrature.hpp"
#include "superocc/random.hpp"

namespace superocc {

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

struct MomentReport {
    std::string identity;
    double estimate = 0.0;
    double estimate_se = 0.0;
    double oracle = 0.0;
    double oracle_se = 0.0;  // 0 when the oracle is exact
    std::size_t estimate_replicates = 0;
    std::size_t oracle_paths = 0;

    /// (estimate - oracle) / sqrt(se^2 + se_oracle^2). The denominator is
    /// floored at 1e-12 max(1, |oracle|) so that exact agreement on both
    /// sides gives 0 and a deterministic mismatch gives a large finite z.
    double z_score() const noexcept {
        const double diff = estimate - oracle;
        if (diff == 0.0) return 0.0;
        const double floor = 1e-12 * std::max(1.0, std::abs(oracle));
        const double denom = std::max(std::sqrt(estimate_se * estimate_se + oracle_se * oracle_se), floor);
        return diff / denom;
    }
};

struct OracleEstimate {
    double value = 0.0;
    double se = 0.0;
    std::size_t paths = 0;
};

/// Sample mean and standard error of a list of values.
inline OracleEstimate mean_and_se(const std::vector<double>& v) {
    OracleEstimate out;
    out.paths = v.size();
    if (v.empty()) return out;
    double mean = 0.0, m2 = 0.0;
    std::size_t n = 0;
    for (double x : v) {
        ++n;
        const double delta = x - mean;
        mean += delta / static_cast<double>(n);
        m2 += delta * (x - mean);
    }
    out.value = mean;
    out.se = n > 1 ? std::sqrt(m2 / static_cast<double>(n - 1) / static_cast<double>(n)) : 0.0;
    return out;
}

// ---------------------------------------------------------------------------
// First moments
// ---------------------------------------------------------------------------

namespace detail {

inline void check_measure_function(const InitialMeasure& mu, const TestFunction& phi) {
    if (phi.kind() != TestFunction::Kind::Constant && phi.center().dim() != mu.dim())
        throw DomainError("test function and initial measure differ in dimension");
}

}  // namespace detail

/// E X_t(phi) = <mu, P_t phi>. A Gaussian density M N(m, v I) is M P_v delta_m,
/// so its pairing is M P_{t+v} phi(m).
inline double first_moment_X(const InitialMeasure& mu, const TestFunction& phi, double t) {
    if (t < 0.0) throw DomainError("first_moment_X: t must be >= 0");
    detail::check_measure_function(mu, phi);
    const double shift = mu.kind() == InitialMeasure::Kind::GaussianDensity ? mu.variance() : 0.0;
    double s = 0.0;
    for (const auto& a : mu.atoms()) s += a.mass * semigroup_apply(t + shift, phi, a.point);
    return s;
}

/// E Y_t(phi) = <mu, Q_t phi>; for a Gaussian density (Q_{t+v} - Q_v) phi at the mean.
inline double first_moment_Y(const InitialMeasure& mu, const TestFunction& phi, double t) {
    if (t < 0.0) throw DomainError("first_moment_Y: t must be >= 0");
    detail::check_measure_function(mu, phi);
    if (t == 0.0) return 0.0;
    const bool smooth = mu.kind() == InitialMeasure::Kind::GaussianDensity;
    const double shift = smooth ? mu.variance() : 0.0;
    double s = 0.0;
    for (const auto& a : mu.atoms()) {
        const double q = q_operator(t + shift, phi, a.point) - (smooth ? q_operator(shift, phi, a.point) : 0.0);
        s += a.mass * q;
    }
    return s;
}

// ---------------------------------------------------------------------------
// Feynman-Kac pair paths
// ---------------------------------------------------------------------------

/// Two independent Brownian motions on a uniform time grid, together with the
/// left-Riemann log-weight int_0^s g(B_u, B~_u) du.
class BMPairPath {
public:
    BMPairPath(const Point& x, const Point& y, double dt) : b_(x), c_(y), dt_(dt), sd_(std::sqrt(dt)) {
        if (!(dt > 0.0)) throw DomainError("BMPairPath: dt must be > 0");
        require_same_dim(x, y, "BMPairPath");
    }

    const Point& first() const noexcept { return b_; }
    const Point& second() const noexcept { return c_; }
    double log_weight() const noexcept { return log_weight_; }
    double time() const noexcept { return time_; }

    void advance(const CovKernel& g, bool unit_weight, Rng& rng, NormalDist& normal) {
        if (!unit_weight) log_weight_ += dt_ * g(b_, c_);
        for (int k = 0; k < b_.dim(); ++k) {
            b_[static_cast<std::size_t>(k)] += sd_ * normal(rng);
            c_[static_cast<std::size_t>(k)] += sd_ * normal(rng);
        }
        time_ += dt_;
    }

private:
    Point b_, c_;
    double dt_, sd_;
    double log_weight_ = 0.0;
    double time_ = 0.0;
};

struct FkOptions {
    std::size_t n_paths = 200000;
    double dt_fk = 0.0;        // 0 selects 1e-3 t
    bool unit_weight = false;  // force e^{int g} = 1
    unsigned threads = 1;
    std::uint64_t seed = 0;
    std::size_t block = 500;   // paths per independent stream
};

namespace detail {

inline Point sample_from(const InitialMeasure& mu, Rng& rng, NormalDist& normal, UniformDist& uniform) {
    const auto& atoms = mu.atoms();
    if (mu.kind() == InitialMeasure::Kind::GaussianDensity) {
        Point p = atoms[0].point;
        const double sd = std::sqrt(mu.variance());
        for (int k = 0; k < p.dim(); ++k) p[static_cast<std::size_t>(k)] += sd * normal(rng);
        return p;
    }
    if (atoms.size() == 1) return atoms[0].point;
    double u = uniform(rng) * mu.total_mass();
    for (const auto& a : atoms) {
        if (u < a.mass) return a.point;
        u -= a.mass;
    }
    return atoms.back().point;
}

inline std::size_t fk_steps(double horizon, double dt_fk) {
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(horizon / dt_fk - 1e-9)));
}

inline bool same_function(const TestFunction& a, const TestFunction& b) {
    if (a.kind() != b.kind()) return false;
    if (a.kind() == TestFunction::Kind::Constant) return a.constant_value() == b.constant_value();
    return a.center() == b.center() && a.bandwidth() == b.bandwidth();
}

// Integrand shared by both moment oracles: a path pair from (x, y) over
// [0, horizon]. Terminal mode returns e^{int_0^T g} phi(B_T) psi(B~_T);
// occupation mode returns the trapezoid rule in s of
// [phi(B_s) Q_{T-s} psi(B~_s) + psi(B~_s) Q_{T-s} phi(B_s)] e^{int_0^s g}.
// When phi != psi the integrand is also averaged over swapping the two paths,
// which leaves the expectation unchanged and makes the result exactly
// symmetric in (phi, psi) for a fixed seed.
inline double pair_functional(bool terminal, const Point& x, const Point& y, double horizon, double dt_fk,
                              const TestFunction& phi, const TestFunction& psi, const CovKernel& g, bool unit_weight,
                              Rng& rng, NormalDist& normal) {
    const bool same = same_function(phi, psi);
    auto end_value = [&](const Point& b, const Point& c) {
        return same ? phi(b) * psi(c) : 0.5 * (phi(b) * psi(c) + psi(b) * phi(c));
    };
    if (horizon == 0.0) return terminal ? end_value(x, y) : 0.0;
    const std::size_t n = fk_steps(horizon, dt_fk);
    const double h = horizon / static_cast<double>(n);
    BMPairPath path(x, y, h);
    auto occupation_term = [&]() {
        const double rest = std::max(horizon - path.time(), 0.0);
        if (rest == 0.0) return 0.0;
        const auto& b = path.first();
        const auto& c = path.second();
        const double q_psi_c = q_operator(rest, psi, c);
        const double q_phi_b = q_operator(rest, phi, b);
        double v = phi(b) * q_psi_c + psi(c) * q_phi_b;
        if (!same) {
            const double q_phi_c = q_operator(rest, phi, c);
            const double q_psi_b = q_operator(rest, psi, b);
            v = 0.5 * ((phi(b) * q_psi_c + psi(b) * q_phi_c) + (psi(c) * q_phi_b + phi(c) * q_psi_b));
        }
        return v * std::exp(path.log_weight());
    };
    double acc = terminal ? 0.0 : 0.5 * h * occupation_term();
    for (std::size_t k = 0; k < n; ++k) {
        path.advance(g, unit_weight, rng, normal);
        if (!terminal) acc += (k + 1 == n ? 0.5 : 1.0) * h * occupation_term();
    }
    if (terminal) acc = std::exp(path.log_weight()) * end_value(path.first(), path.second());
    return acc;
}

// One sample of the two-term representation
//   E[F G] = <mu x mu, V_t> + int_0^t ds <mu, P_{t-s} V_s(y, y)>,
// the second term drawn as t * V_s(y, y) with s ~ U(0, t), y ~ p_{t-s}(x, .).
inline double second_moment_sample(bool terminal, const InitialMeasure& mu, const TestFunction& phi,
                                   const TestFunction& psi, double t, const CovKernel& g, double dt_fk,
                                   bool unit_weight, Rng& rng, NormalDist& normal, UniformDist& uniform) {
    const double mass = mu.total_mass();
    const Point x = sample_from(mu, rng, normal, uniform);
    const Point y = sample_from(mu, rng, normal, uniform);
    const double pair = pair_functional(terminal, x, y, t, dt_fk, phi, psi, g, unit_weight, rng, normal);

    const double s = t * uniform(rng);
    Point z = sample_from(mu, rng, normal, uniform);
    const double sd = std::sqrt(t - s);
    for (int k = 0; k < z.dim(); ++k) z[static_cast<std::size_t>(k)] += sd * normal(rng);
    const double diag = pair_functional(terminal, z, z, s, dt_fk, phi, psi, g, unit_weight, rng, normal);
    return mass * mass * pair + mass * t * diag;
}

inline OracleEstimate second_moment_mc(bool terminal, const InitialMeasure& mu, const TestFunction& phi,
                                       const TestFunction& psi, double t, const CovKernel& g, const FkOptions& opt) {
    if (t < 0.0) throw DomainError("second moment oracle: t must be >= 0");
    if (opt.n_paths == 0) throw DomainError("second moment oracle: n_paths must be > 0");
    check_measure_function(mu, phi);
    check_measure_function(mu, psi);
    const double dt_fk = opt.dt_fk > 0.0 ? opt.dt_fk : 1e-3 * std::max(t, 1e-12);
    const std::size_t block = std::max<std::size_t>(1, opt.block);
    const std::size_t blocks = (opt.n_paths + block - 1) / block;
    const auto per_block = run_replicates(blocks, purpose_seed(opt.seed, StreamPurpose::Oracle), opt.threads,
                                          [&](std::size_t b, Rng& rng) {
                                              NormalDist normal(0.0, 1.0);
                                              UniformDist uniform;
                                              const std::size_t lo = b * block;
                                              const std::size_t hi = std::min(opt.n_paths, lo + block);
                                              std::vector<double> v;
                                              v.reserve(hi - lo);
                                              for (std::size_t i = lo; i < hi; ++i)
                                                  v.push_back(second_moment_sample(terminal, mu, phi, psi, t, g, dt_fk,
                                                                                   opt.unit_weight, rng, normal, uniform));
                                              return v;
                                          });
    std::vector<double> all;
    all.reserve(opt.n_paths);
    for (const auto& v : per_block) all.insert(all.end(), v.begin(), v.end());
    return mean_and_se(all);
}

}  // namespace detail

/// E[X_t(phi) X_t(psi)] by Feynman-Kac Monte Carlo.
inline OracleEstimate second_moment_X(const InitialMeasure& mu, const TestFunction& phi, const TestFunction& psi,
                                      double t, const CovKernel& kernel, const FkOptions& opt = {}) {
    return detail::second_moment_mc(true, mu, phi, psi, t, kernel, opt);
}

/// E[Y_t(phi) Y_t(psi)] by Feynman-Kac Monte Carlo.
inline OracleEstimate second_moment_Y(const InitialMeasure& mu, const TestFunction& phi, const TestFunction& psi,
                                      double t, const CovKernel& kernel, const FkOptions& opt = {}) {
    if (t == 0.0) return {0.0, 0.0, 0};
    return detail::second_moment_mc(false, mu, phi, psi, t, kernel, opt);
}

// ---------------------------------------------------------------------------
// Semi-analytic values for constant environments
// ---------------------------------------------------------------------------

namespace detail {

// k p_var(. - mean), or the constant k when flat.
struct GaussianAtom {
    double k = 1.0;
    double var = 0.0;
    Point mean;
    bool flat = true;

    static GaussianAtom from(const TestFunction& f, double s) {
        GaussianAtom a;
        switch (f.kind()) {
            case TestFunction::Kind::Constant:
                a.k = f.constant_value();
                return a;
            case TestFunction::Kind::GaussianBump:
                a.flat = false;
                a.var = s + f.bandwidth();
                a.mean = f.center();
                return a;
            case TestFunction::Kind::PowerLaw:
                break;
        }
        throw UnsupportedFunctionError("semi-analytic second moment needs Gaussian-bump or constant test functions");
    }

    friend GaussianAtom operator*(const GaussianAtom& a, const GaussianAtom& b) {
        if (a.flat) return {a.k * b.k, b.var, b.mean, b.flat};
        if (b.flat) return {a.k * b.k, a.var, a.mean, false};
        const double v = a.var + b.var;
        GaussianAtom out;
        out.flat = false;
        out.k = a.k * b.k * heat_kernel_r2(v, squared_distance(a.mean, b.mean), a.mean.dim());
        out.var = a.var * b.var / v;
        out.mean = a.mean;
        for (int i = 0; i < out.mean.dim(); ++i) {
            const auto u = static_cast<std::size_t>(i);
            out.mean[u] = (b.var * a.mean[u] + a.var * b.mean[u]) / v;
        }
        return out;
    }

    /// int_lo^hi du <mu, P_u (this)>, or <mu, P_lo (this)> when hi < 0.
    double pair(const InitialMeasure& mu, double lo, double hi = -1.0) const {
        const double shift = mu.kind() == InitialMeasure::Kind::GaussianDensity ? mu.variance() : 0.0;
        double s = 0.0;
        for (const auto& at : mu.atoms()) {
            if (flat) {
                s += at.mass * k * (hi < 0.0 ? 1.0 : hi - lo);
                continue;
            }
            const double r = distance(at.point, mean);
            const double base = var + shift;
            s += at.mass * k *
                 (hi < 0.0 ? heat_kernel_r2(base + lo, r * r, mean.dim())
                           : heat_time_integral(base + lo, base + hi, r, mean.dim()));
        }
        return s;
    }
};

inline double require_constant_kernel(const CovKernel& g) {
    if (g.kind() != CovKernel::Kind::Zero && g.kind() != CovKernel::Kind::Constant)
        throw DomainError("semi-analytic second moment needs a zero or constant environment kernel");
    return g.kind() == CovKernel::Kind::Zero ? 0.0 : g.sup_norm();
}

inline quad::Options tight() {
    quad::Options o;
    o.abs_tol = 1e-13;
    o.rel_tol = 1e-10;
    return o;
}

}  // namespace detail

/// E[X_t(phi) X_t(psi)] when g = c: e^{ct} <mu, P_t phi><mu, P_t psi>
///   + int_0^t e^{cs} <mu, P_{t-s}[(P_s phi)(P_s psi)]> ds.
inline double second_moment_X_constant(const InitialMeasure& mu, const TestFunction& phi, const TestFunction& psi,
                                       double t, const CovKernel& kernel) {
    const double c = detail::require_constant_kernel(kernel);
    if (t < 0.0) throw DomainError("second_moment_X_constant: t must be >= 0");
    detail::check_measure_function(mu, phi);
    detail::check_measure_function(mu, psi);
    const double head = std::exp(c * t) * first_moment_X(mu, phi, t) * first_moment_X(mu, psi, t);
    if (t == 0.0) return head;
    auto integrand = [&](double s) {
        const auto prod = detail::GaussianAtom::from(phi, s) * detail::GaussianAtom::from(psi, s);
        return std::exp(c * s) * prod.pair(mu, t - s);
    };
    return head + quad::integrate(integrand, 0.0, t, detail::tight()).value;
}

/// E[Y_t(phi) Y_t(psi)] when g = c. With F_r = <mu, P_r .> and G_r = <mu, Q_r .>:
///   int_0^t e^{cs} [F_s phi (G_t psi - G_s psi) + F_s psi (G_t phi - G_s phi)] ds
///   + int_0^t dr e^{cr} int_r^t du int_u^t ds <mu, P_{t-s}[P_r phi P_u psi + P_r psi P_u phi]>.
inline double second_moment_Y_constant(const InitialMeasure& mu, const TestFunction& phi, const TestFunction& psi,
                                       double t, const CovKernel& kernel) {
    const double c = detail::require_constant_kernel(kernel);
    if (t < 0.0) throw DomainError("second_moment_Y_constant: t must be >= 0");
    detail::check_measure_function(mu, phi);
    detail::check_measure_function(mu, psi);
    if (t == 0.0) return 0.0;
    const double gt_phi = first_moment_Y(mu, phi, t);
    const double gt_psi = first_moment_Y(mu, psi, t);
    auto outer = [&](double s) {
        return std::exp(c * s) * (first_moment_X(mu, phi, s) * (gt_psi - first_moment_Y(mu, psi, s)) +
                                  first_moment_X(mu, psi, s) * (gt_phi - first_moment_Y(mu, phi, s)));
    };
    const double a = quad::integrate(outer, 0.0, t, detail::tight()).value;

    auto inner = [&](double r) {
        auto over_u = [&](double u) {
            const auto f = detail::GaussianAtom::from(phi, r) * detail::GaussianAtom::from(psi, u);
            const auto g = detail::GaussianAtom::from(psi, r) * detail::GaussianAtom::from(phi, u);
            // int_u^t ds <mu, P_{t-s} F> = int_0^{t-u} dw <mu, P_w F>
            return f.pair(mu, 0.0, t - u) + g.pair(mu, 0.0, t - u);
        };
        return std::exp(c * r) * quad::integrate(over_u, r, t, detail::tight()).value;
    };
    const double b = quad::integrate(inner, 0.0, t, detail::tight()).value;
    return a + b;
}

// ---------------------------------------------------------------------------
// Conditional first moment on a noise lattice
// ---------------------------------------------------------------------------

/// One realization of the environment noise sampled on the nodes of a grid:
/// increments[k][j] ~ dW_k(z_j), covariance dt G(z_i, z_j), independent in k.
struct NoiseGrid {
    Grid grid;
    CovKernel kernel;
    double dt = 0.0;
    std::vector<std::vector<double>> increments;

    std::size_t steps() const noexcept { return increments.size(); }

    static NoiseGrid sample(const CovKernel& kernel, const Grid& grid, double dt, std::size_t steps, Rng& rng) {
        if (!(dt > 0.0)) throw DomainError("NoiseGrid: dt must be > 0");
        NoiseGrid n;
        n.grid = grid;
        n.kernel = kernel;
        n.dt = dt;
        std::vector<double> coords;
        coords.reserve(grid.size() * static_cast<std::size_t>(grid.dim));
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const auto p = grid.node(i);
            coords.insert(coords.end(), p.coords().begin(), p.coords().end());
        }
        const PositionView view{coords, grid.dim};
        EnvironmentSampler sampler(kernel);
        n.increments.resize(steps);
        const double scale = std::sqrt(dt);
        for (auto& inc : n.increments) {
            inc.resize(grid.size());
            sampler.sample_unit(view, rng, inc);
            for (double& v : inc) v *= scale;
        }
        return n;
    }
};

/// V_1(t, .) = Q_t phi + S_t on the grid, with the stochastic convolution
/// S_{k+1} = P_dt [S_k + (Q_{t_k} phi + S_k) dW_k] (exponential Euler, Ito
/// point), P_dt applied as a lattice Riemann sum. The lattice spacing is the
/// correlation-resolution parameter of the discretized noise.
inline DensityField v1_field(const TestFunction& phi, double t, const NoiseGrid& noise) {
    const Grid& grid = noise.grid;
    if (phi.kind() == TestFunction::Kind::PowerLaw)
        throw UnsupportedFunctionError("v1_field needs a bounded test function");
    if (phi.kind() == TestFunction::Kind::GaussianBump && phi.center().dim() != grid.dim)
        throw DomainError("v1_field: test function and grid dimensions differ");
    if (t < 0.0) throw DomainError("v1_field: t must be >= 0");
    const double steps_d = t / noise.dt;
    const auto steps = static_cast<std::size_t>(std::llround(steps_d));
    if (std::abs(steps_d - static_cast<double>(steps)) > 1e-6 || steps > noise.steps())
        throw DomainError("v1_field: t must be a multiple of the noise step within the noise horizon");
    if (grid.pitch > std::sqrt(noise.dt))
        throw ResolutionError("v1_field: grid pitch exceeds sqrt(dt); the heat step is not resolved");
    if (phi.kind() == TestFunction::Kind::GaussianBump && grid.pitch > std::sqrt(phi.bandwidth()))
        throw ResolutionError("v1_field: grid pitch exceeds the test-function bandwidth sqrt(h)");

    const std::size_t n = grid.size();
    DensityField out;
    out.grid = grid;
    out.t = t;
    out.h = 0.0;
    out.values.assign(n, 0.0);
    if (t == 0.0) return out;

    std::vector<Point> nodes(n);
    for (std::size_t i = 0; i < n; ++i) nodes[i] = grid.node(i);
    Eigen::VectorXd s = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    if (!noise.kernel.is_zero()) {
        Eigen::MatrixXd heat(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
        const double vol = grid.cell_volume();
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                heat(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
                    vol * heat_kernel_r2(noise.dt, squared_distance(nodes[i], nodes[j]), grid.dim);
        Eigen::VectorXd src(static_cast<Eigen::Index>(n));
        for (std::size_t k = 0; k < steps; ++k) {
            const double tk = noise.dt * static_cast<double>(k);
            for (std::size_t j = 0; j < n; ++j) {
                const auto jj = static_cast<Eigen::Index>(j);
                src(jj) = s(jj) + (q_operator(tk, phi, nodes[j]) + s(jj)) * noise.increments[k][j];
            }
            s = heat * src;
        }
    }
    for (std::size_t i = 0; i < n; ++i) out.values[i] = q_operator(t, phi, nodes[i]) + s(static_cast<Eigen::Index>(i));
    return out;
}

}  // namespace superocc
