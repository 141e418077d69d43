#pragma once

// Occupation measure Y_t = int_0^t X_s ds (left Riemann sums over the
// snapshots), its mollified density Y_h(t, x) = Y_t(p_h^x), and two
// trajectory-level consistency checks: the discrete Tanaka identity and the
// Green-function (mild form) representation of X_t(g_alpha^a).

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "superocc/core.hpp"
#include "superocc/kernels.hpp"
#include "superocc/particle_system.hpp"

namespace superocc {

// ---------------------------------------------------------------------------
// Accumulator
// ---------------------------------------------------------------------------

class OccupationAccumulator {
public:
    explicit OccupationAccumulator(const Trajectory& traj) : traj_(&traj) {}

    const Trajectory& trajectory() const noexcept { return *traj_; }
    std::size_t snapshot_count() const noexcept { return traj_->snapshots.size(); }
    double spacing() const noexcept { return traj_->spacing(); }

    /// Y_{t_k}(f) = sum_{j<k} spacing * X_{t_j}(f) for any callable f.
    template <class F>
    double at_index(std::size_t k, F&& f) const {
        if (k >= snapshot_count()) throw DomainError("occupation: snapshot index out of range");
        double s = 0.0;
        for (std::size_t j = 0; j < k; ++j) s += integrate_with(traj_->snapshots[j], f);
        return spacing() * s;
    }

    /// Y_t(phi) for t on the snapshot grid.
    double operator()(double t, const TestFunction& phi) const { return at_index(index_of(t), [&](auto x) { return phi(x); }); }

    /// Y_{t_k}(phi) for every k, in one pass.
    std::vector<double> series(const TestFunction& phi) const {
        std::vector<double> out(snapshot_count(), 0.0);
        double s = 0.0;
        for (std::size_t k = 0; k < out.size(); ++k) {
            out[k] = spacing() * s;
            s += integrate(traj_->snapshots[k], phi);
        }
        return out;
    }

    std::size_t index_of(double t) const {
        if (t < 0.0) throw DomainError("occupation: t must be >= 0");
        const double h = spacing();
        if (h == 0.0 || snapshot_count() == 1) {
            if (t > 0.0) throw DomainError("occupation: t beyond the trajectory horizon");
            return 0;
        }
        const double idx = t / h;
        const auto k = static_cast<std::size_t>(std::llround(idx));
        if (std::abs(idx - static_cast<double>(k)) > 1e-6 || k >= snapshot_count())
            throw DomainError("occupation: t is not on the snapshot grid");
        return k;
    }

private:
    const Trajectory* traj_;
};

inline OccupationAccumulator accumulate(const Trajectory& traj) { return OccupationAccumulator(traj); }

// ---------------------------------------------------------------------------
// Grid and density field
// ---------------------------------------------------------------------------

/// Regular lattice: node (i_0, .., i_{d-1}) sits at lower + i * pitch.
struct Grid {
    int dim = 1;
    Point lower{0.0};
    double pitch = 1.0;
    std::array<std::size_t, kMaxDim> counts{1, 1, 1};

    static Grid line(double lo, double hi, std::size_t nodes) {
        if (nodes < 2 || !(hi > lo)) throw DomainError("Grid::line needs >= 2 nodes and hi > lo");
        Grid g;
        g.dim = 1;
        g.lower = Point{lo};
        g.pitch = (hi - lo) / static_cast<double>(nodes - 1);
        g.counts = {nodes, 1, 1};
        return g;
    }
    /// Cube [lo, hi]^d with `nodes` per axis.
    static Grid cube(Dim d, double lo, double hi, std::size_t nodes) {
        if (nodes < 2 || !(hi > lo)) throw DomainError("Grid::cube needs >= 2 nodes and hi > lo");
        Grid g;
        g.dim = d.value();
        g.lower = Point::origin(d);
        for (int k = 0; k < g.dim; ++k) g.lower[static_cast<std::size_t>(k)] = lo;
        g.pitch = (hi - lo) / static_cast<double>(nodes - 1);
        g.counts = {1, 1, 1};
        for (int k = 0; k < g.dim; ++k) g.counts[static_cast<std::size_t>(k)] = nodes;
        return g;
    }

    std::size_t size() const noexcept {
        std::size_t n = 1;
        for (int k = 0; k < dim; ++k) n *= counts[static_cast<std::size_t>(k)];
        return n;
    }
    double cell_volume() const noexcept { return std::pow(pitch, dim); }

    /// Node coordinates for flat index (axis 0 fastest).
    Point node(std::size_t flat) const {
        Point p = Point::origin(Dim{dim});
        for (int k = 0; k < dim; ++k) {
            const auto n = counts[static_cast<std::size_t>(k)];
            p[static_cast<std::size_t>(k)] = lower[static_cast<std::size_t>(k)] + pitch * static_cast<double>(flat % n);
            flat /= n;
        }
        return p;
    }
};

struct DensityField {
    Grid grid;
    double t = 0.0;
    double h = 0.0;
    std::vector<double> values;

    /// Riemann sum of the field over the grid.
    double integral() const {
        double s = 0.0;
        for (double v : values) s += v;
        return s * grid.cell_volume();
    }
};

namespace detail {

inline void check_density_dim(int d) {
    if (d >= 4)
        throw DomainError("density requested in d >= 4: Y_t is singular with respect to Lebesgue measure there");
}

// Adds weight * p_h(node - x) for all nodes within 10 sqrt(h) of x.
inline void splat(const Grid& grid, std::span<const double> x, double h, double weight, std::span<double> values) {
    const double cutoff = 10.0 * std::sqrt(h);
    const int d = grid.dim;
    std::array<std::size_t, kMaxDim> lo{0, 0, 0}, hi{1, 1, 1};
    for (int k = 0; k < d; ++k) {
        const auto uk = static_cast<std::size_t>(k);
        const double a = (x[uk] - cutoff - grid.lower[uk]) / grid.pitch;
        const double b = (x[uk] + cutoff - grid.lower[uk]) / grid.pitch;
        const auto n = static_cast<double>(grid.counts[uk]);
        if (b < 0.0 || a > n - 1.0) return;
        lo[uk] = static_cast<std::size_t>(std::max(0.0, std::ceil(a)));
        hi[uk] = static_cast<std::size_t>(std::min(n - 1.0, std::floor(b))) + 1;
    }
    const double norm = weight * heat_kernel_r2(h, 0.0, d);
    const double inv2h = 1.0 / (2.0 * h);
    for (std::size_t i2 = lo[2]; i2 < hi[2]; ++i2) {
        const double d2 = d > 2 ? grid.lower[2] + grid.pitch * static_cast<double>(i2) - x[2] : 0.0;
        for (std::size_t i1 = lo[1]; i1 < hi[1]; ++i1) {
            const double d1 = d > 1 ? grid.lower[1] + grid.pitch * static_cast<double>(i1) - x[1] : 0.0;
            const std::size_t row = (i2 * grid.counts[1] + i1) * grid.counts[0];
            for (std::size_t i0 = lo[0]; i0 < hi[0]; ++i0) {
                const double d0 = grid.lower[0] + grid.pitch * static_cast<double>(i0) - x[0];
                values[row + i0] += norm * std::exp(-(d0 * d0 + d1 * d1 + d2 * d2) * inv2h);
            }
        }
    }
}

}  // namespace detail

/// Y_h(t, x) = sum_{t_k < t} spacing * m * sum_i p_h(x, x_i^{(k)}) on the grid.
inline DensityField density_field(const OccupationAccumulator& acc, double t, double h, const Grid& grid) {
    detail::check_density_dim(grid.dim);
    if (!(h > 0.0)) throw DomainError("density_field: bandwidth h must be > 0");
    DensityField field;
    field.grid = grid;
    field.t = t;
    field.h = h;
    field.values.assign(grid.size(), 0.0);
    if (acc.snapshot_count() == 0) return field;
    if (acc.trajectory().dim != grid.dim) throw DomainError("density_field: grid and trajectory dimensions differ");
    const std::size_t k_end = acc.index_of(t);
    for (std::size_t k = 0; k < k_end; ++k) {
        const auto& cloud = acc.trajectory().snapshots[k];
        const double w = acc.spacing() * cloud.unit_mass;
        for (std::size_t i = 0; i < cloud.count(); ++i) detail::splat(grid, cloud.point(i), h, w, field.values);
    }
    return field;
}

/// Streaming density recorder: feed every cloud of a run in order and it
/// keeps Y_h(t_k, .) on the grid for the requested step indices.
class DensityRecorder {
public:
    DensityRecorder(Grid grid, double h, double spacing, std::vector<std::size_t> record_steps)
        : grid_(std::move(grid)), h_(h), spacing_(spacing), records_(std::move(record_steps)) {
        detail::check_density_dim(grid_.dim);
        if (!(h > 0.0)) throw DomainError("DensityRecorder: bandwidth h must be > 0");
        std::sort(records_.begin(), records_.end());
        acc_.assign(grid_.size(), 0.0);
    }

    void observe(const ParticleCloud& cloud) {
        while (next_ < records_.size() && records_[next_] == step_) {
            DensityField f;
            f.grid = grid_;
            f.t = static_cast<double>(step_) * spacing_;
            f.h = h_;
            f.values = acc_;
            fields_.push_back(std::move(f));
            ++next_;
        }
        const double w = spacing_ * cloud.unit_mass;
        for (std::size_t i = 0; i < cloud.count(); ++i) detail::splat(grid_, cloud.point(i), h_, w, acc_);
        ++step_;
    }

    const std::vector<DensityField>& fields() const noexcept { return fields_; }

private:
    Grid grid_;
    double h_;
    double spacing_;
    std::vector<std::size_t> records_;
    std::vector<double> acc_;
    std::vector<DensityField> fields_;
    std::size_t next_ = 0;
    std::size_t step_ = 0;
};

// ---------------------------------------------------------------------------
// Tanaka identity
// ---------------------------------------------------------------------------

struct TanakaTerm {
    double eps = 0.0;
    double lhs = 0.0;          // sum_k dt X_k(p_eps^a)
    double initial = 0.0;      // X_0(g_{alpha,eps}^a)
    double terminal = 0.0;     // X_T(g_{alpha,eps}^a)
    double drift = 0.0;        // alpha sum_k dt X_k(g_{alpha,eps}^a)
    double martingale = 0.0;   // M_T(g_{alpha,eps}^a) from the martingale-problem identity
    double rhs = 0.0;
    double residual = 0.0;     // |lhs - rhs|
};

struct TanakaReport {
    Point center;
    double alpha = 0.0;
    double dt = 0.0;
    std::vector<TanakaTerm> terms;
    /// |lhs(eps_i) - lhs(eps_{i+1})| for consecutive entries of the eps list.
    std::vector<double> successive_gaps;
    double max_residual() const {
        double m = 0.0;
        for (const auto& t : terms) m = std::max(m, t.residual);
        return m;
    }
};

inline const std::vector<double>& default_eps_sequence() {
    static const std::vector<double> eps = {0.2, 0.05, 0.0125};
    return eps;
}

/// Discrete Tanaka decomposition of the mollified local time at a.
inline TanakaReport tanaka_check(const Trajectory& traj, const Point& a, double alpha,
                                 const std::vector<double>& eps_list = default_eps_sequence()) {
    if (a.dim() != traj.dim) throw DomainError("tanaka_check: centre dimension does not match trajectory");
    if (alpha < 0.0) throw DomainError("tanaka_check: alpha must be >= 0");
    if (alpha == 0.0 && traj.dim <= 2) throw DomainError("tanaka_check: alpha = 0 is not admissible for d <= 2");
    TanakaReport rep;
    rep.center = a;
    rep.alpha = alpha;
    rep.dt = traj.spacing();
    const std::size_t n = traj.snapshots.size();
    for (double eps : eps_list) {
        if (!(eps > 0.0)) throw DomainError("tanaka_check: eps must be > 0");
        const auto g = mollified_resolvent_observable({alpha, a, eps});
        auto p_eps = [&](std::span<const double> y) { return heat_kernel_r2(eps, squared_distance(a, y), a.dim()); };
        TanakaTerm term;
        term.eps = eps;
        double sum_p = 0.0, sum_g = 0.0, sum_lap = 0.0;
        for (std::size_t k = 0; k + 1 < n; ++k) {
            const auto& c = traj.snapshots[k];
            sum_p += integrate_with(c, p_eps);
            sum_g += integrate_with(c, g.value);
            sum_lap += integrate_with(c, g.half_laplacian);
        }
        const double h = rep.dt;
        term.lhs = h * sum_p;
        if (n > 0) {
            term.initial = integrate_with(traj.snapshots.front(), g.value);
            term.terminal = integrate_with(traj.snapshots.back(), g.value);
        }
        term.drift = alpha * h * sum_g;
        term.martingale = term.terminal - term.initial - h * sum_lap;
        term.rhs = term.initial - term.terminal + term.drift + term.martingale;
        term.residual = std::abs(term.lhs - term.rhs);
        rep.terms.push_back(term);
    }
    for (std::size_t i = 0; i + 1 < rep.terms.size(); ++i)
        rep.successive_gaps.push_back(std::abs(rep.terms[i].lhs - rep.terms[i + 1].lhs));
    return rep;
}

// ---------------------------------------------------------------------------
// Green-function representation
// ---------------------------------------------------------------------------

struct GreenReport {
    double terminal = 0.0;        // X_T(g_alpha^a)
    double initial = 0.0;         // X_0(P_T g_alpha^a)
    double martingale_sum = 0.0;  // sum_k dM_k(psi_k)
    double residual = 0.0;        // terminal - initial - martingale_sum
    std::size_t singular_hits = 0;
};

/// psi_s = P_s g_alpha^a evaluated at distance r from a (s = 0 gives g_alpha).
inline double resolvent_semigroup(double alpha, double s, double r, int d) {
    if (s == 0.0) return resolvent_radial(alpha, r, d);
    return shifted_resolvent(alpha, s, r, d);
}

/// R = X_T(g) - X_0(P_T g) - sum_k ([X_{k+1} - X_k](psi_k) - dt X_k((Delta/2) psi_k)),
/// psi_k = P_{T - t_k} g_alpha^a and (Delta/2) psi_k = alpha psi_k - p_{T - t_k}^a.
inline GreenReport green_rep_check(const Trajectory& traj, const Point& a, double alpha) {
    if (a.dim() != traj.dim) throw DomainError("green_rep_check: centre dimension does not match trajectory");
    if (!(alpha > 0.0)) throw DomainError("green_rep_check: alpha must be > 0");
    GreenReport rep;
    const std::size_t n = traj.snapshots.size();
    if (n <= 1) return rep;
    const int d = traj.dim;
    const double h = traj.spacing();
    const double horizon = traj.snapshots.back().time;
    const double t0 = traj.snapshots.front().time;

    auto eval = [&](const ParticleCloud& c, double s, double lap_weight, double* lap_out) {
        double v = 0.0, lap = 0.0;
        for (std::size_t i = 0; i < c.count(); ++i) {
            const double r2 = squared_distance(a, c.point(i));
            if (s == 0.0 && d > 1 && r2 == 0.0) {
                ++rep.singular_hits;
                continue;
            }
            const double psi = resolvent_semigroup(alpha, s, std::sqrt(r2), d);
            v += psi;
            if (lap_out) lap += alpha * psi - heat_kernel_r2(s, r2, d);
        }
        if (lap_out) *lap_out = lap_weight * c.unit_mass * lap;
        return c.unit_mass * v;
    };

    rep.terminal = eval(traj.snapshots.back(), 0.0, 0.0, nullptr);
    rep.initial = eval(traj.snapshots.front(), horizon - t0, 0.0, nullptr);
    for (std::size_t k = 0; k + 1 < n; ++k) {
        const double s = std::max(horizon - traj.snapshots[k].time, 0.0);
        double lap = 0.0;
        const double now = eval(traj.snapshots[k], s, h, &lap);
        const double next = eval(traj.snapshots[k + 1], s, 0.0, nullptr);
        rep.martingale_sum += next - now - lap;
    }
    rep.residual = rep.terminal - rep.initial - rep.martingale_sum;
    return rep;
}

}  // namespace superocc
