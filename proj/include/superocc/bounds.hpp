#pragma once

// Randomized numerical checks of four kernel inequalities. Each check draws
// parameter tuples, evaluates the ratio LHS / RHS(without constant), and fits
// the constant as the largest ratio seen. Stability is measured by comparing
// the constant fitted on the first n samples with the one fitted on 2n.
//
//   power_law_smoothing   Q_t |a - .|^{-gamma}(x)             <= C t^{1 - gamma/2}
//   resolvent_holder      |g_alpha^a(x) - g_alpha^b(x)|        <= C |a - b|^gamma     (d = 1)
//   heat_time_difference  |p_t(x) - p_s(x)|                    <= C (t - s) s^{-d/2-1}, s <= t
//   heat_product          p_s(x, v) p_t(x, v)                  <= C (s^t)^{-d/2} p_{(s v t)/2}(x, v)

#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "superocc/core.hpp"
#include "superocc/kernels.hpp"
#include "superocc/random.hpp"

namespace superocc {

struct BoundCheck {
    std::string name;
    std::string statement;
    std::size_t samples = 0;     // 2n samples drawn in total
    double constant_half = 0.0;  // fitted on the first n samples
    double constant = 0.0;       // fitted on all 2n samples
    double reference = std::numeric_limits<double>::quiet_NaN();  // known sharp constant, if any
    std::size_t failures = 0;    // samples whose evaluation threw
    double drift() const noexcept {
        return constant_half > 0.0 ? std::abs(constant - constant_half) / constant_half
                                   : std::numeric_limits<double>::infinity();
    }
    bool finite() const noexcept { return std::isfinite(constant) && std::isfinite(constant_half) && constant > 0.0; }
    bool stable(double tol = 0.1) const noexcept { return finite() && drift() < tol; }
};

struct BoundSuiteOptions {
    int power_law_dim = 2;
    double power_law_gamma = 0.5;
    double holder_alpha = 1.0;
    double holder_gamma = 0.5;
    int time_difference_dim = 1;
    int product_dim = 1;
};

namespace detail {

// Draws 2n ratios from `ratio(rng)` and fits the constant on both halves.
inline BoundCheck fit_bound(std::string name, std::string statement, std::size_t n, Rng& rng,
                            const std::function<double(Rng&)>& ratio) {
    BoundCheck out;
    out.name = std::move(name);
    out.statement = std::move(statement);
    out.samples = 2 * n;
    double best = 0.0;
    for (std::size_t i = 0; i < 2 * n; ++i) {
        try {
            const double r = ratio(rng);
            if (!std::isfinite(r)) {
                ++out.failures;
            } else {
                best = std::max(best, r);
            }
        } catch (const std::exception&) {
            ++out.failures;
        }
        if (i + 1 == n) out.constant_half = best;
    }
    out.constant = best;
    return out;
}

inline double log_uniform(Rng& rng, double lo, double hi) {
    UniformDist u;
    return lo * std::exp(u(rng) * std::log(hi / lo));
}

}  // namespace detail

/// Q_t phi_{a,gamma}(x) <= C t^{1-gamma/2}. Q is evaluated by quadrature;
/// the offset |x - a| / sqrt(t) is drawn in [0, 2].
inline BoundCheck check_power_law_smoothing(std::size_t n, Rng& rng, int d, double gamma) {
    const Dim dim{d};
    if (!(gamma > 0.0 && gamma < std::min(2.0, static_cast<double>(d))))
        throw DomainError("power-law smoothing bound needs 0 < gamma < min(2, d)");
    auto ratio = [=](Rng& g) {
        UniformDist u;
        const double t = detail::log_uniform(g, 1e-2, 4.0);
        const double z = 2.0 * u(g);
        Point a = Point::origin(dim);
        a[0] = 2.0 * u(g) - 1.0;
        Point x = a;
        x[0] += z * std::sqrt(t);
        const auto phi = TestFunction::power_law(a, gamma);
        return q_operator(t, phi, x) / std::pow(t, 1.0 - 0.5 * gamma);
    };
    auto out = detail::fit_bound("power_law_smoothing",
                                 "Q_t|a-.|^-g(x) <= C t^(1-g/2), d=" + std::to_string(d) + " g=" + std::to_string(gamma),
                                 n, rng, ratio);
    // Sharp constant: the centre value int_0^1 E|sqrt(s) Z|^{-gamma} ds.
    out.reference = std::pow(2.0, -0.5 * gamma) * std::tgamma(0.5 * (d - gamma)) / std::tgamma(0.5 * d) /
                    (1.0 - 0.5 * gamma);
    return out;
}

/// |g_alpha^a(x) - g_alpha^b(x)| <= C |a - b|^gamma in d = 1. The gap |a - b|
/// is log-uniform over six decades; x runs over the worst placements
/// {a - delta, a, (a + b)/2, b, b + delta}.
inline BoundCheck check_resolvent_holder(std::size_t n, Rng& rng, double alpha, double gamma) {
    if (!(alpha > 0.0)) throw DomainError("resolvent Holder bound needs alpha > 0");
    if (!(gamma > 0.0 && gamma < 1.0)) throw DomainError("resolvent Holder bound needs 0 < gamma < 1");
    auto ratio = [=](Rng& g) {
        UniformDist u;
        const double delta = detail::log_uniform(g, 1e-4, 1e2);
        const double a = 2.0 * u(g) - 1.0;
        const double b = a + delta;
        double worst = 0.0;
        for (double x : {a - delta, a, 0.5 * (a + b), b, b + delta}) {
            const double ga = resolvent_radial(alpha, std::abs(x - a), 1);
            const double gb = resolvent_radial(alpha, std::abs(x - b), 1);
            worst = std::max(worst, std::abs(ga - gb));
        }
        return worst / std::pow(delta, gamma);
    };
    return detail::fit_bound("resolvent_holder",
                             "|g_a^a(x)-g_a^b(x)| <= C|a-b|^g, d=1 alpha=" + std::to_string(alpha) +
                                 " g=" + std::to_string(gamma),
                             n, rng, ratio);
}

/// |p_t(x) - p_s(x)| <= C (t - s) s^{-d/2 - 1} for s <= t. The ratio is
/// scale free, so only t/s - 1 (log-uniform) and |x| / sqrt(s) are drawn.
inline BoundCheck check_heat_time_difference(std::size_t n, Rng& rng, int d) {
    const Dim dim{d};
    auto ratio = [=](Rng& g) {
        UniformDist u;
        const double s = detail::log_uniform(g, 1e-2, 1.0);
        const double t = s * (1.0 + detail::log_uniform(g, 1e-3, 10.0));
        const double z = 3.0 * u(g);
        const double r2 = z * z * s;
        const double lhs = std::abs(heat_kernel_r2(t, r2, dim) - heat_kernel_r2(s, r2, dim));
        return lhs / ((t - s) * std::pow(s, -0.5 * d - 1.0));
    };
    auto out = detail::fit_bound("heat_time_difference",
                                 "|p_t(x)-p_s(x)| <= C (t-s) s^(-d/2-1), d=" + std::to_string(d), n, rng, ratio);
    // sup_z |d/du p_u| u^{d/2+1} at u = 1 is attained at z = 0: (d/2) (2 pi)^{-d/2}.
    out.reference = 0.5 * d * std::pow(kTwoPi, -0.5 * d);
    return out;
}

/// p_s(x, v) p_t(x, v) <= C (min(s,t))^{-d/2} p_{max(s,t)/2}(x, v), sharp with
/// C = (4 pi)^{-d/2}, attained at v = x.
inline BoundCheck check_heat_product(std::size_t n, Rng& rng, int d) {
    const Dim dim{d};
    auto ratio = [=](Rng& g) {
        UniformDist u;
        const double s = detail::log_uniform(g, 1e-2, 2.0);
        const double t = detail::log_uniform(g, 1e-2, 2.0);
        const double lo = std::min(s, t), hi = std::max(s, t);
        const double z = 3.0 * u(g);
        const double r2 = z * z * lo;
        const double lhs = heat_kernel_r2(s, r2, dim) * heat_kernel_r2(t, r2, dim);
        const double rhs = std::pow(lo, -0.5 * d) * heat_kernel_r2(0.5 * hi, r2, dim);
        return lhs / rhs;
    };
    auto out = detail::fit_bound("heat_product",
                                 "p_s(x,v) p_t(x,v) <= C (s^t)^(-d/2) p_(svt/2)(x,v), d=" + std::to_string(d), n, rng,
                                 ratio);
    out.reference = std::pow(4.0 * kPi, -0.5 * d);
    return out;
}

/// All four checks with n and 2n samples each, streams derived from `seed`.
inline std::vector<BoundCheck> bound_check_suite(std::uint64_t seed, std::size_t n_samples,
                                                 const BoundSuiteOptions& opt = {}) {
    if (n_samples == 0) throw DomainError("bound_check_suite: n_samples must be > 0");
    const std::uint64_t base = purpose_seed(seed, StreamPurpose::Bounds);
    std::vector<BoundCheck> out;
    Rng r0 = make_stream(base, 0), r1 = make_stream(base, 1), r2 = make_stream(base, 2), r3 = make_stream(base, 3);
    out.push_back(check_power_law_smoothing(n_samples, r0, opt.power_law_dim, opt.power_law_gamma));
    out.push_back(check_resolvent_holder(n_samples, r1, opt.holder_alpha, opt.holder_gamma));
    out.push_back(check_heat_time_difference(n_samples, r2, opt.time_difference_dim));
    out.push_back(check_heat_product(n_samples, r3, opt.product_dim));
    return out;
}

}  // namespace superocc
