#pragma once

// Discrete-time branching particle approximation of the superprocess in a
// random environment. One step of length dt = m (the particle mass):
//   1. every particle takes an independent N(0, dt I) step;
//   2. the environment zeta is drawn at the new positions (covariance G);
//   3. every particle splits in two with probability
//      clamp((1 + sqrt(dt) zeta_i) / 2, 0, 1) and dies otherwise;
//      offspring sit at the parent position.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "superocc/core.hpp"
#include "superocc/environment.hpp"
#include "superocc/kernels.hpp"
#include "superocc/random.hpp"

namespace superocc {

// ---------------------------------------------------------------------------
// Initial measure
// ---------------------------------------------------------------------------

struct WeightedAtom {
    Point point;
    double mass = 1.0;
};

class InitialMeasure {
public:
    enum class Kind { Dirac, WeightedDiracs, GaussianDensity };

    static InitialMeasure dirac(const Point& at, double mass = 1.0) {
        if (!(mass > 0.0)) throw DomainError("Dirac mass must be > 0");
        InitialMeasure mu;
        mu.kind_ = Kind::Dirac;
        mu.atoms_ = {{at, mass}};
        mu.dim_ = at.dim();
        return mu;
    }
    static InitialMeasure weighted_diracs(std::vector<WeightedAtom> atoms) {
        if (atoms.empty()) throw DomainError("WeightedDiracs needs at least one atom");
        for (const auto& a : atoms) {
            if (!(a.mass > 0.0)) throw DomainError("WeightedDiracs masses must be > 0");
            if (a.point.dim() != atoms.front().point.dim()) throw DomainError("WeightedDiracs atoms differ in dimension");
        }
        InitialMeasure mu;
        mu.kind_ = Kind::WeightedDiracs;
        mu.dim_ = atoms.front().point.dim();
        mu.atoms_ = std::move(atoms);
        return mu;
    }
    /// total_mass * N(mean, variance I).
    static InitialMeasure gaussian_density(const Point& mean, double variance, double total_mass) {
        if (!(variance > 0.0)) throw DomainError("GaussianDensity variance must be > 0");
        if (!(total_mass > 0.0)) throw DomainError("GaussianDensity total_mass must be > 0");
        InitialMeasure mu;
        mu.kind_ = Kind::GaussianDensity;
        mu.atoms_ = {{mean, total_mass}};
        mu.variance_ = variance;
        mu.dim_ = mean.dim();
        return mu;
    }

    Kind kind() const noexcept { return kind_; }
    int dim() const noexcept { return dim_; }
    /// Atoms; for GaussianDensity the single entry is (mean, total mass).
    const std::vector<WeightedAtom>& atoms() const noexcept { return atoms_; }
    /// Variance of the Gaussian density; 0 for atomic measures.
    double variance() const noexcept { return variance_; }
    double total_mass() const noexcept {
        double s = 0.0;
        for (const auto& a : atoms_) s += a.mass;
        return s;
    }

    /// Particle positions for unit mass m. An atom of mass M becomes
    /// round(M / m) particles, so the sampled mass can differ from M by up to m/2.
    std::vector<double> sample_positions(double m, Rng& rng) const {
        std::vector<double> out;
        if (kind_ == Kind::GaussianDensity) {
            const auto n = static_cast<std::size_t>(std::llround(atoms_[0].mass / m));
            const double sd = std::sqrt(variance_);
            NormalDist normal(0.0, 1.0);
            out.reserve(n * static_cast<std::size_t>(dim_));
            for (std::size_t i = 0; i < n; ++i)
                for (int k = 0; k < dim_; ++k) out.push_back(atoms_[0].point[k] + sd * normal(rng));
            return out;
        }
        for (const auto& a : atoms_) {
            const auto n = static_cast<std::size_t>(std::llround(a.mass / m));
            for (std::size_t i = 0; i < n; ++i)
                for (int k = 0; k < dim_; ++k) out.push_back(a.point[k]);
        }
        return out;
    }

    std::string describe() const {
        std::ostringstream os;
        os.precision(17);
        switch (kind_) {
            case Kind::Dirac: os << "dirac(mass=" << atoms_[0].mass << ")"; break;
            case Kind::WeightedDiracs: os << "weighted_diracs(n=" << atoms_.size() << ")"; break;
            case Kind::GaussianDensity:
                os << "gaussian_density(variance=" << variance_ << ",mass=" << atoms_[0].mass << ")";
                break;
        }
        return os.str();
    }

private:
    Kind kind_ = Kind::Dirac;
    std::vector<WeightedAtom> atoms_;
    double variance_ = 0.0;
    int dim_ = 1;
};

// ---------------------------------------------------------------------------
// Particle cloud
// ---------------------------------------------------------------------------

struct ParticleCloud {
    double time = 0.0;
    int dim = 1;
    double unit_mass = 1.0;
    std::vector<double> positions;  // flat: count * dim

    std::size_t count() const noexcept { return positions.size() / static_cast<std::size_t>(dim); }
    bool empty() const noexcept { return positions.empty(); }
    double total_mass() const noexcept { return unit_mass * static_cast<double>(count()); }
    PositionView view() const noexcept { return {positions, dim}; }
    std::span<const double> point(std::size_t i) const noexcept {
        return std::span<const double>(positions).subspan(i * static_cast<std::size_t>(dim), static_cast<std::size_t>(dim));
    }
};

/// m * sum_i f(x_i) for any callable f(span<const double>).
template <class F>
double integrate_with(const ParticleCloud& cloud, F&& f) {
    double s = 0.0;
    const std::size_t n = cloud.count();
    for (std::size_t i = 0; i < n; ++i) s += f(cloud.point(i));
    return cloud.unit_mass * s;
}

struct Integral {
    double value = 0.0;
    std::size_t singular_hits = 0;  // particles exactly at a PowerLaw centre
};

/// X(phi) = m * sum_i phi(x_i). A particle sitting exactly on the centre of
/// a PowerLaw function contributes 0 and is counted in singular_hits.
inline Integral integrate_counted(const ParticleCloud& cloud, const TestFunction& phi) {
    Integral out;
    if (cloud.empty()) return out;
    if (phi.kind() != TestFunction::Kind::Constant && phi.center().dim() != cloud.dim)
        throw DomainError("integrate: test function and cloud dimensions differ");
    if (phi.kind() == TestFunction::Kind::Constant) {
        out.value = phi.constant_value() * cloud.total_mass();
        return out;
    }
    double s = 0.0;
    for (std::size_t i = 0; i < cloud.count(); ++i) {
        const double v = phi(cloud.point(i));
        if (std::isinf(v)) {
            ++out.singular_hits;
            continue;
        }
        s += v;
    }
    out.value = cloud.unit_mass * s;
    return out;
}

inline double integrate(const ParticleCloud& cloud, const TestFunction& phi) {
    return integrate_counted(cloud, phi).value;
}

// ---------------------------------------------------------------------------
// Simulation
// ---------------------------------------------------------------------------

struct SimConfig {
    Dim dim{1};
    InitialMeasure mu = InitialMeasure::dirac(Point{0.0});
    CovKernel kernel = CovKernel::zero();
    double unit_mass = 1e-3;
    double horizon = 1.0;
    std::size_t snapshot_stride = 1;
    std::uint64_t seed = 0;
    std::size_t population_cap = 2'000'000;

    /// Branching step; tied to the particle mass.
    double dt() const noexcept { return unit_mass; }

    std::size_t steps() const {
        const double n = horizon / dt();
        return static_cast<std::size_t>(std::llround(n));
    }

    void validate() const {
        if (!(unit_mass > 0.0)) throw DomainError("unit_mass must be > 0");
        if (!(horizon >= 0.0)) throw DomainError("horizon must be >= 0");
        if (mu.dim() != dim.value()) throw DomainError("initial measure dimension does not match d");
        const double n = horizon / dt();
        if (std::abs(n - std::round(n)) > 1e-6 * std::max(1.0, n))
            throw DomainError("horizon must be an integer multiple of dt = unit_mass");
        if (snapshot_stride == 0) throw DomainError("snapshot_stride must be >= 1");
        if (steps() % snapshot_stride != 0) throw DomainError("snapshot_stride must divide the number of steps");
        if (kernel.sup_norm() * std::sqrt(dt()) > 0.5)
            throw DomainError("clipping guard violated: need sup|g| * sqrt(dt) <= 1/2; decrease unit_mass");
        if (population_cap == 0) throw DomainError("population_cap must be >= 1");
    }
};

struct StepInfo {
    std::size_t step = 0;
    double time = 0.0;
    std::size_t parents = 0;
    std::size_t offspring = 0;
    std::size_t clamped = 0;
    double branching_increment = 0.0;  // m * (offspring - parents): change of X(1) by branching
};

/// Advances clouds by one step. Holds the environment sampler and scratch
/// buffers; one instance per trajectory.
class ParticleStepper {
public:
    ParticleStepper(CovKernel kernel, double dt, std::size_t population_cap = 2'000'000)
        : sampler_(kernel), dt_(dt), sqrt_dt_(std::sqrt(dt)), cap_(population_cap) {
        if (!(dt > 0.0)) throw DomainError("step: dt must be > 0");
    }

    /// In-place step; returns the step statistics.
    StepInfo step(ParticleCloud& cloud, Rng& rng) {
        StepInfo info;
        const std::size_t n = cloud.count();
        const auto d = static_cast<std::size_t>(cloud.dim);
        info.parents = n;
        cloud.time += dt_;
        if (n == 0) return info;

        for (double& x : cloud.positions) x += sqrt_dt_ * normal_(rng);

        zeta_.resize(n);
        sampler_.sample_unit(cloud.view(), rng, zeta_);

        next_.resize(2 * cloud.positions.size());
        std::size_t out = 0;
        for (std::size_t i = 0; i < n; ++i) {
            double p = 0.5 * (1.0 + sqrt_dt_ * zeta_[i]);
            if (p < 0.0 || p > 1.0) {
                ++info.clamped;
                p = std::clamp(p, 0.0, 1.0);
            }
            if (uniform_(rng) < p) {
                const double* src = cloud.positions.data() + i * d;
                for (int rep = 0; rep < 2; ++rep)
                    for (std::size_t k = 0; k < d; ++k) next_[out++] = src[k];
            }
        }
        next_.resize(out);
        info.offspring = out / d;
        if (info.offspring > cap_) {
            std::ostringstream os;
            os << "population " << info.offspring << " exceeds the cap " << cap_
               << " at t = " << cloud.time << "; use a larger unit_mass";
            throw ResourceError(os.str());
        }
        cloud.positions.swap(next_);
        info.branching_increment =
            cloud.unit_mass * (static_cast<double>(info.offspring) - static_cast<double>(info.parents));
        return info;
    }

    EnvironmentSampler& sampler() noexcept { return sampler_; }

private:
    EnvironmentSampler sampler_;
    double dt_;
    double sqrt_dt_;
    std::size_t cap_;
    NormalDist normal_{0.0, 1.0};
    UniformDist uniform_;
    std::vector<double> zeta_;
    std::vector<double> next_;
};

/// Single step with a freshly built stepper (convenience; loops should keep a ParticleStepper).
inline ParticleCloud step(const ParticleCloud& cloud, const CovKernel& kernel, double dt, Rng& rng) {
    ParticleStepper stepper(kernel, dt);
    ParticleCloud next = cloud;
    stepper.step(next, rng);
    return next;
}

struct RunSummary {
    std::size_t steps = 0;
    std::size_t branch_decisions = 0;
    std::size_t clamped = 0;
    std::size_t max_population = 0;
    bool extinct = false;
    double extinction_time = std::numeric_limits<double>::infinity();

    double clamp_fraction() const noexcept {
        return branch_decisions == 0 ? 0.0 : static_cast<double>(clamped) / static_cast<double>(branch_decisions);
    }
};

inline ParticleCloud initial_cloud(const SimConfig& cfg, Rng& rng) {
    ParticleCloud cloud;
    cloud.dim = cfg.dim.value();
    cloud.unit_mass = cfg.unit_mass;
    cloud.positions = cfg.mu.sample_positions(cfg.unit_mass, rng);
    if (cloud.count() > cfg.population_cap) throw ResourceError("initial population exceeds the cap");
    return cloud;
}

/// Runs one trajectory, calling observer(cloud, info) at every step k = 0..N
/// (info.step == 0 for the initial cloud). Extinction does not stop the run.
template <class Observer>
RunSummary simulate(const SimConfig& cfg, Rng& rng, Observer&& observer) {
    cfg.validate();
    RunSummary summary;
    ParticleCloud cloud = initial_cloud(cfg, rng);
    ParticleStepper stepper(cfg.kernel, cfg.dt(), cfg.population_cap);
    const std::size_t n = cfg.steps();
    summary.steps = n;
    summary.max_population = cloud.count();
    StepInfo info;
    observer(static_cast<const ParticleCloud&>(cloud), static_cast<const StepInfo&>(info));
    for (std::size_t k = 1; k <= n; ++k) {
        info = stepper.step(cloud, rng);
        info.step = k;
        cloud.time = static_cast<double>(k) * cfg.dt();
        info.time = cloud.time;
        summary.branch_decisions += info.parents;
        summary.clamped += info.clamped;
        summary.max_population = std::max(summary.max_population, cloud.count());
        if (cloud.empty() && !summary.extinct) {
            summary.extinct = true;
            summary.extinction_time = cloud.time;
        }
        observer(static_cast<const ParticleCloud&>(cloud), static_cast<const StepInfo&>(info));
    }
    return summary;
}

struct Trajectory {
    double dt = 0.0;              // simulation step
    std::size_t stride = 1;       // steps between stored snapshots
    int dim = 1;
    std::vector<ParticleCloud> snapshots;
    std::vector<double> branching_increments;  // one per simulation step
    RunSummary summary;

    double spacing() const noexcept { return dt * static_cast<double>(stride); }
    double horizon() const noexcept { return snapshots.empty() ? 0.0 : snapshots.back().time; }
};

/// Runs and stores a trajectory using the given engine.
inline Trajectory run(const SimConfig& cfg, Rng& rng) {
    Trajectory traj;
    traj.dt = cfg.dt();
    traj.stride = cfg.snapshot_stride;
    traj.dim = cfg.dim.value();
    traj.branching_increments.reserve(cfg.steps());
    traj.summary = simulate(cfg, rng, [&](const ParticleCloud& cloud, const StepInfo& info) {
        if (info.step > 0) traj.branching_increments.push_back(info.branching_increment);
        if (info.step % cfg.snapshot_stride == 0) traj.snapshots.push_back(cloud);
    });
    return traj;
}

/// Replicate `index` of the configuration's master seed.
inline Trajectory run(const SimConfig& cfg, std::uint64_t replicate_index = 0) {
    Rng rng = make_stream(purpose_seed(cfg.seed, StreamPurpose::Simulation), replicate_index);
    return run(cfg, rng);
}

// ---------------------------------------------------------------------------
// Martingale problem
// ---------------------------------------------------------------------------

/// A function with a known half-Laplacian, for the martingale identity.
struct SmoothObservable {
    std::function<double(std::span<const double>)> value;
    std::function<double(std::span<const double>)> half_laplacian;
    std::string name;
};

inline SmoothObservable smooth_observable(const TestFunction& phi) {
    if (!phi.twice_differentiable())
        throw UnsupportedFunctionError("martingale tracking needs a twice differentiable test function; got " +
                                       phi.describe());
    return {[phi](std::span<const double> x) { return phi(x); },
            [phi](std::span<const double> x) { return phi.half_laplacian(x); }, phi.describe()};
}

/// g_{alpha,eps}^a with (Delta/2) g = alpha g - p_eps^a.
inline SmoothObservable mollified_resolvent_observable(const ResolventSpec& spec) {
    if (!(spec.eps > 0.0)) throw DomainError("mollified resolvent observable needs eps > 0");
    const int d = spec.center.dim();
    const Point a = spec.center;
    const double alpha = spec.alpha, eps = spec.eps;
    if (alpha == 0.0 && d <= 2) throw DomainError("alpha = 0 is not admissible for d <= 2");
    auto value = [a, alpha, eps, d](std::span<const double> y) {
        return shifted_resolvent(alpha, eps, distance(a, y), d);
    };
    auto lap = [a, alpha, eps, d](std::span<const double> y) {
        const double r2 = squared_distance(a, y);
        return alpha * shifted_resolvent(alpha, eps, std::sqrt(r2), d) - heat_kernel_r2(eps, r2, d);
    };
    std::ostringstream os;
    os.precision(17);
    os << "mollified_resolvent(alpha=" << alpha << ",eps=" << eps << ")";
    return {value, lap, os.str()};
}

struct MartingaleSeries {
    std::vector<double> times;
    std::vector<double> x;       // X_t(phi)
    std::vector<double> m;       // M_t(phi)
    std::vector<double> qv;      // running sum of squared increments of M
};

/// M_{t_k}(phi) = X_{t_k}(phi) - X_0(phi) - sum_{j<k} dt X_{t_j}((Delta/2) phi)
/// on the stored snapshots (left Riemann sum at the snapshot spacing).
inline MartingaleSeries track_martingale(const Trajectory& traj, const SmoothObservable& phi) {
    MartingaleSeries out;
    const double h = traj.spacing();
    double drift = 0.0;
    double prev_m = 0.0;
    double x0 = 0.0;
    for (std::size_t k = 0; k < traj.snapshots.size(); ++k) {
        const auto& cloud = traj.snapshots[k];
        const double xk = integrate_with(cloud, phi.value);
        if (k == 0) x0 = xk;
        const double mk = xk - x0 - drift;
        out.times.push_back(cloud.time);
        out.x.push_back(xk);
        out.m.push_back(mk);
        const double inc = mk - prev_m;
        out.qv.push_back((k == 0 ? 0.0 : out.qv.back()) + (k == 0 ? 0.0 : inc * inc));
        prev_m = mk;
        drift += h * integrate_with(cloud, phi.half_laplacian);
    }
    return out;
}

inline MartingaleSeries track_martingale(const Trajectory& traj, const TestFunction& phi) {
    return track_martingale(traj, smooth_observable(phi));
}

/// Streaming martingale tracker: feed every cloud of a run in order.
/// Besides M and its discrete quadratic variation it accumulates the plug-in
/// value of the predicted bracket, sum_k dt [X_k(phi^2) + sum g phi phi X_k X_k].
class MartingaleTracker {
public:
    MartingaleTracker(SmoothObservable phi, CovKernel kernel, double spacing)
        : phi_(std::move(phi)), kernel_(kernel), spacing_(spacing) {}

    void observe(const ParticleCloud& cloud) {
        const double xk = integrate_with(cloud, phi_.value);
        if (!started_) {
            x0_ = xk;
            started_ = true;
        }
        const double mk = xk - x0_ - drift_;
        if (count_ > 0) {
            qv_ += (mk - m_) * (mk - m_);
            plugin_ += pending_;
        }
        m_ = mk;
        x_ = xk;
        ++count_;
        // Left-Riemann terms for the interval that starts at this cloud.
        drift_ += spacing_ * integrate_with(cloud, phi_.half_laplacian);
        weights_.resize(cloud.count());
        double sq = 0.0;
        for (std::size_t i = 0; i < cloud.count(); ++i) {
            const double v = phi_.value(cloud.point(i));
            weights_[i] = cloud.unit_mass * v;
            sq += v * v;
        }
        pending_ = spacing_ * (cloud.unit_mass * sq + kernel_quadratic_form(kernel_, cloud.view(), weights_));
    }

    double martingale() const noexcept { return m_; }
    double value() const noexcept { return x_; }
    double quadratic_variation() const noexcept { return qv_; }
    /// Plug-in bracket over [0, t_last] (terms from t_0 .. t_{last-1}).
    double plugin_bracket() const noexcept { return plugin_; }

private:
    SmoothObservable phi_;
    CovKernel kernel_;
    double spacing_;
    bool started_ = false;
    double x0_ = 0.0, x_ = 0.0, m_ = 0.0, drift_ = 0.0, qv_ = 0.0;
    double plugin_ = 0.0, pending_ = 0.0;
    std::size_t count_ = 0;
    std::vector<double> weights_;
};

}  // namespace superocc
