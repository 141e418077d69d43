#pragma once

// Heat kernel, Brownian semigroup, its time integral, and the resolvent
// family g_alpha built from it. Everything here is pure and reentrant.

#include <algorithm>
#include <cmath>
#include <span>
#include <sstream>
#include <string>

#include "superocc/core.hpp"
#include "superocc/quadrature.hpp"
#include "superocc/special.hpp"

namespace superocc {

// ---------------------------------------------------------------------------
// Heat kernel
// ---------------------------------------------------------------------------

/// p_t(r) as a function of the squared distance; no argument checks.
inline double heat_kernel_r2(double t, double r2, int d) noexcept {
    const double norm = d == 1 ? 1.0 / std::sqrt(kTwoPi * t)
                      : d == 2 ? 1.0 / (kTwoPi * t)
                               : 1.0 / ((kTwoPi * t) * std::sqrt(kTwoPi * t));
    return norm * std::exp(-r2 / (2.0 * t));
}

/// Transition density of standard Brownian motion in R^d.
inline double heat_kernel(double t, std::span<const double> x, std::span<const double> y, Dim d) {
    if (!(t > 0.0)) throw DomainError("heat_kernel: t must be > 0");
    if (x.size() != static_cast<std::size_t>(d.value()) || y.size() != x.size())
        throw DomainError("heat_kernel: point dimension does not match d");
    return heat_kernel_r2(t, squared_distance(x, y), d.value());
}

inline double heat_kernel(double t, std::span<const double> x, std::span<const double> y) {
    return heat_kernel(t, x, y, Dim{static_cast<int>(x.size())});
}

namespace detail {

// Antiderivative in u of p_u(r), for r > 0 (and r = 0 in d = 1).
inline double heat_antiderivative(double u, double r, int d) {
    if (u <= 0.0) return 0.0;
    switch (d) {
        case 1:
            return std::sqrt(2.0 * u / kPi) * std::exp(-r * r / (2.0 * u)) -
                   r * std::erfc(r / std::sqrt(2.0 * u));
        case 2:
            return special::expint_e1(r * r / (2.0 * u)) / kTwoPi;
        default:
            return std::erfc(r / std::sqrt(2.0 * u)) / (kTwoPi * r);
    }
}

}  // namespace detail

/// int_a^b p_u(r) du for 0 <= a <= b, in closed form.
inline double heat_time_integral(double a, double b, double r, int d) {
    if (a < 0.0 || b < a) throw DomainError("heat_time_integral: need 0 <= a <= b");
    if (a == b) return 0.0;
    if (r == 0.0 && d > 1) {
        if (a == 0.0) throw DomainError("heat_time_integral: divergent at r = 0 from u = 0 for d >= 2");
        if (d == 2) return std::log(b / a) / kTwoPi;
        return 2.0 * (1.0 / std::sqrt(a) - 1.0 / std::sqrt(b)) / std::pow(kTwoPi, 1.5);
    }
    if (d == 2 && a > 0.0) {
        // E1 difference written to keep precision when both arguments are small.
        const double za = r * r / (2.0 * a);
        const double zb = r * r / (2.0 * b);
        return (special::expint_e1(zb) - special::expint_e1(za)) / kTwoPi;
    }
    return detail::heat_antiderivative(b, r, d) - detail::heat_antiderivative(a, r, d);
}

// ---------------------------------------------------------------------------
// Test functions
// ---------------------------------------------------------------------------

/// Symbolic test function. The three kinds are the ones whose semigroup
/// action is known in closed form or reduces to one-dimensional quadrature.
class TestFunction {
public:
    enum class Kind { GaussianBump, Constant, PowerLaw };

    /// p_h^a: the heat kernel at time h centred at a.
    static TestFunction gaussian_bump(const Point& center, double bandwidth) {
        if (!(bandwidth > 0.0)) throw DomainError("GaussianBump bandwidth must be > 0");
        TestFunction f;
        f.kind_ = Kind::GaussianBump;
        f.center_ = center;
        f.param_ = bandwidth;
        return f;
    }
    static TestFunction constant(double c) {
        if (!(c >= 0.0)) throw DomainError("Constant test function must be >= 0");
        TestFunction f;
        f.kind_ = Kind::Constant;
        f.param_ = c;
        return f;
    }
    /// |a - x|^{-gamma} with 0 < gamma < d.
    static TestFunction power_law(const Point& center, double exponent) {
        if (!(exponent > 0.0 && exponent < center.dim()))
            throw DomainError("PowerLaw exponent must lie in (0, d)");
        TestFunction f;
        f.kind_ = Kind::PowerLaw;
        f.center_ = center;
        f.param_ = exponent;
        return f;
    }

    Kind kind() const noexcept { return kind_; }
    const Point& center() const noexcept { return center_; }
    double bandwidth() const noexcept { return param_; }
    double constant_value() const noexcept { return param_; }
    double exponent() const noexcept { return param_; }
    bool twice_differentiable() const noexcept { return kind_ != Kind::PowerLaw; }

    double operator()(std::span<const double> x) const noexcept {
        switch (kind_) {
            case Kind::GaussianBump:
                return heat_kernel_r2(param_, squared_distance(center_, x), center_.dim());
            case Kind::Constant:
                return param_;
            case Kind::PowerLaw: {
                const double r2 = squared_distance(center_, x);
                return r2 == 0.0 ? std::numeric_limits<double>::infinity() : std::pow(r2, -0.5 * param_);
            }
        }
        return 0.0;
    }

    /// (Delta/2) phi. For p_h this is d/dh p_h = p_h (r^2/h - d) / (2h).
    double half_laplacian(std::span<const double> x) const {
        switch (kind_) {
            case Kind::GaussianBump: {
                const double r2 = squared_distance(center_, x);
                const double p = heat_kernel_r2(param_, r2, center_.dim());
                return p * (r2 / param_ - center_.dim()) / (2.0 * param_);
            }
            case Kind::Constant:
                return 0.0;
            case Kind::PowerLaw:
                break;
        }
        throw UnsupportedFunctionError("PowerLaw test function is not twice differentiable at its centre");
    }

    std::string describe() const {
        std::ostringstream os;
        os.precision(17);
        switch (kind_) {
            case Kind::GaussianBump: os << "gaussian_bump(h=" << param_ << ",a="; break;
            case Kind::Constant: os << "constant(" << param_ << ")"; return os.str();
            case Kind::PowerLaw: os << "power_law(gamma=" << param_ << ",a="; break;
        }
        for (int i = 0; i < center_.dim(); ++i) os << (i ? "," : "") << center_[i];
        os << ")";
        return os.str();
    }

private:
    TestFunction() = default;
    Kind kind_ = Kind::Constant;
    Point center_{};
    double param_ = 0.0;
};

namespace detail {

inline void check_dims(const TestFunction& phi, std::span<const double> x) {
    if (phi.kind() != TestFunction::Kind::Constant && x.size() != static_cast<std::size_t>(phi.center().dim()))
        throw DomainError("test function and evaluation point have different dimensions");
}

// Spherical average of p_t(b e, r omega) times the area of S^{d-1}.
inline double shell_heat(double t, double b, double r, int d) {
    const double gap = b - r;
    const double base = std::exp(-gap * gap / (2.0 * t));
    if (d == 1) {
        const double far = b + r;
        return (base + std::exp(-far * far / (2.0 * t))) / std::sqrt(kTwoPi * t);
    }
    const double z = b * r / t;
    if (d == 2) return base * special::bessel_i0_scaled(z) / t;
    // 4 pi (2 pi t)^{-3/2} sinh(z)/z with the exp(z) pulled into `base`.
    const double shell = z < 1e-8 ? 1.0 : -std::expm1(-2.0 * z) / (2.0 * z);
    return 4.0 * kPi * base * shell / std::pow(kTwoPi * t, 1.5);
}

// P_t |a - .|^{-gamma}(x) by radial quadrature with r = u^{1/(d-gamma)},
// which turns the integrable r^{d-1-gamma} singularity into a constant.
inline double power_law_semigroup(double t, double b, double gamma, int d, const quad::Options& opt) {
    const double k = d - gamma;
    const double sd = std::sqrt(t);
    auto integrand = [&](double u) {
        const double r = std::pow(u, 1.0 / k);
        return shell_heat(t, b, r, d) / k;
    };
    const double r_lo = std::max(0.0, b - 12.0 * sd);
    const double r_hi = b + 12.0 * sd;
    double total = 0.0;
    const double cuts[] = {0.0, r_lo, b, r_hi};
    for (int i = 0; i < 3; ++i) {
        const double ua = std::pow(cuts[i], k);
        const double ub = std::pow(cuts[i + 1], k);
        if (ub > ua) total += quad::integrate(integrand, ua, ub, opt).value;
    }
    return total;
}

}  // namespace detail

/// P_t phi(x) = int p_t(x, y) phi(y) dy.
inline double semigroup_apply(double t, const TestFunction& phi, std::span<const double> x,
                              const quad::Options& opt = {}) {
    if (t < 0.0) throw DomainError("semigroup_apply: t must be >= 0");
    detail::check_dims(phi, x);
    if (t == 0.0) return phi(x);
    switch (phi.kind()) {
        case TestFunction::Kind::Constant:
            return phi.constant_value();
        case TestFunction::Kind::GaussianBump:
            return heat_kernel_r2(t + phi.bandwidth(), squared_distance(phi.center(), x), phi.center().dim());
        case TestFunction::Kind::PowerLaw:
            return detail::power_law_semigroup(t, distance(phi.center(), x), phi.exponent(), phi.center().dim(), opt);
    }
    return 0.0;
}

/// Q_t phi(x) = int_0^t P_s phi(x) ds.
inline double q_operator(double t, const TestFunction& phi, std::span<const double> x,
                         const quad::Options& opt = {}) {
    if (t < 0.0) throw DomainError("q_operator: t must be >= 0");
    detail::check_dims(phi, x);
    if (t == 0.0) return 0.0;
    switch (phi.kind()) {
        case TestFunction::Kind::Constant:
            return phi.constant_value() * t;
        case TestFunction::Kind::GaussianBump:
            return heat_time_integral(phi.bandwidth(), t + phi.bandwidth(), distance(phi.center(), x),
                                      phi.center().dim());
        case TestFunction::Kind::PowerLaw:
            break;
    }
    const double gamma = phi.exponent();
    const int d = phi.center().dim();
    const double b = distance(phi.center(), x);
    if (b == 0.0 && gamma >= 2.0)
        throw DomainError("q_operator: Q_t |a-x|^{-gamma} diverges at x = a for gamma >= 2");
    // s = t v^p absorbs the s^{-gamma/2} behaviour at the centre.
    const double p = gamma < 2.0 ? 2.0 / (2.0 - gamma) : 2.0;
    auto integrand = [&](double v) {
        if (v == 0.0) return 0.0;
        const double s = t * std::pow(v, p);
        const double ds = t * p * std::pow(v, p - 1.0);
        return detail::power_law_semigroup(s, b, gamma, d, opt) * ds;
    };
    return quad::integrate(integrand, 0.0, 1.0, opt).value;
}

// ---------------------------------------------------------------------------
// Resolvent
// ---------------------------------------------------------------------------

/// Parameters of g_{alpha,eps}^a(y) = int_0^inf e^{-alpha t} p_{t+eps}^a(y) dt.
struct ResolventSpec {
    double alpha = 1.0;
    Point center{};
    double eps = 0.0;
};

/// The weight g_0 bounding the resolvent from above: 1 in d=1,
/// 1 + log+(1/r) in d=2 and 1/(2 pi r) in d=3.
inline double resolvent_weight_g0(double r, int d) {
    switch (d) {
        case 1: return 1.0;
        case 2:
            if (r == 0.0) throw DomainError("g_0 is singular at its centre in d = 2");
            return 1.0 + std::max(std::log(1.0 / r), 0.0);
        default:
            if (r == 0.0) throw DomainError("g_0 is singular at its centre in d = 3");
            return 1.0 / (kTwoPi * r);
    }
}

/// int_s^inf e^{-alpha (u - s)} p_u(r) du, which equals both the mollified
/// resolvent g_{alpha,s}(r) and the semigroup action P_s g_alpha(r).
/// Closed form through erfc in d = 1, 3; log-time quadrature in d = 2.
inline double shifted_resolvent(double alpha, double shift, double r, int d, const quad::Options& opt = {}) {
    if (alpha < 0.0) throw DomainError("resolvent: alpha must be >= 0");
    if (!(shift > 0.0)) throw DomainError("shifted_resolvent: shift must be > 0");
    if (alpha == 0.0 && d <= 2) throw DomainError("resolvent with alpha = 0 diverges for d <= 2");
    const double kappa = std::sqrt(2.0 * alpha);
    const double root2s = std::sqrt(2.0 * shift);
    const double a_arg = r / root2s - kappa * shift / root2s;  // r/sqrt(2s) - kappa sqrt(s/2)
    const double b_arg = r / root2s + kappa * shift / root2s;
    const double as = alpha * shift;
    if (d == 1) {
        return (special::exp_times_erfc(as - kappa * r, -a_arg) + special::exp_times_erfc(as + kappa * r, b_arg)) /
               (2.0 * kappa);
    }
    if (d == 3) {
        if (r < 1e-5 * std::sqrt(shift)) {
            const double tail = alpha == 0.0 ? 0.0 : 2.0 * std::sqrt(kPi * alpha) * special::erfcx(std::sqrt(as));
            return (2.0 / std::sqrt(shift) - tail) / std::pow(kTwoPi, 1.5);
        }
        return (special::exp_times_erfc(as - kappa * r, -a_arg) - special::exp_times_erfc(as + kappa * r, b_arg)) /
               (4.0 * kPi * r);
    }
    // d = 2: u = s e^w on [s, s + 750/alpha].
    const double w_hi = std::log1p(750.0 / as);
    auto integrand = [&](double w) {
        const double u = shift * std::exp(w);
        return std::exp(-alpha * (u - shift) - r * r / (2.0 * u)) / kTwoPi;
    };
    return quad::integrate(integrand, 0.0, w_hi, opt).value;
}

/// Unmollified resolvent g_alpha(r) for alpha > 0; closed form in d = 1, 3.
inline double resolvent_radial(double alpha, double r, int d, const quad::Options& opt = {}) {
    if (!(alpha > 0.0)) throw DomainError("resolvent_radial: alpha must be > 0");
    const double kappa = std::sqrt(2.0 * alpha);
    if (d == 1) return std::exp(-kappa * r) / kappa;
    if (r == 0.0) throw DomainError("resolvent is singular at its centre for d >= 2");
    if (d == 3) return std::exp(-kappa * r) / (kTwoPi * r);
    // d = 2: t = e^v; the integrand exp(-alpha e^v - r^2 e^{-v}/2) / (2 pi)
    // is negligible outside [log(r^2/1500) - 1, log(750/alpha) + 1].
    const double v_lo = std::log(r * r / 1500.0) - 1.0;
    const double v_hi = std::log(750.0 / alpha) + 1.0;
    auto integrand = [&](double v) {
        const double ev = std::exp(v);
        return std::exp(-alpha * ev - 0.5 * r * r / ev) / kTwoPi;
    };
    const double v_mid = std::clamp(0.5 * std::log(r * r / (2.0 * alpha)), v_lo, v_hi);
    return quad::integrate(integrand, v_lo, v_mid, opt).value + quad::integrate(integrand, v_mid, v_hi, opt).value;
}

/// g_{alpha,eps}^a(y). With eps = 0 and alpha = 0 this returns the g_0 weight.
inline double resolvent(const ResolventSpec& spec, std::span<const double> y, const quad::Options& opt = {}) {
    if (y.size() != static_cast<std::size_t>(spec.center.dim()))
        throw DomainError("resolvent: point dimension does not match centre");
    if (spec.eps < 0.0) throw DomainError("resolvent: eps must be >= 0");
    const int d = spec.center.dim();
    const double r = distance(spec.center, y);
    if (spec.eps > 0.0) return shifted_resolvent(spec.alpha, spec.eps, r, d, opt);
    if (spec.alpha == 0.0) return resolvent_weight_g0(r, d);
    return resolvent_radial(spec.alpha, r, d, opt);
}

inline double resolvent(const ResolventSpec& spec, std::span<const double> y, Dim d) {
    if (spec.center.dim() != d.value()) throw DomainError("resolvent: centre dimension does not match d");
    return resolvent(spec, y);
}

/// Green weight g_d: 1 (d=1), log+(1/|x|) (d=2), 1/|x| (d=3).
inline double green_weight_gd(std::span<const double> x, Dim d) {
    if (x.size() != static_cast<std::size_t>(d.value())) throw DomainError("green_weight_gd: dimension mismatch");
    double r2 = 0.0;
    for (double v : x) r2 += v * v;
    const double r = std::sqrt(r2);
    switch (d.value()) {
        case 1: return 1.0;
        case 2:
            if (r == 0.0) throw DomainError("green_weight_gd: singular at the origin in d = 2");
            return std::max(std::log(1.0 / r), 0.0);
        default:
            if (r == 0.0) throw DomainError("green_weight_gd: singular at the origin in d = 3");
            return 1.0 / r;
    }
}

/// |(Delta/2) g_{alpha,eps} - (alpha g_{alpha,eps} - p_eps)| at y with the
/// Laplacian taken by second-order central differences of step fd_step.
inline double mollified_resolvent_identity_residual(const ResolventSpec& spec, std::span<const double> y,
                                                    double fd_step) {
    if (!(spec.eps > 0.0)) throw DomainError("mollified resolvent identity needs eps > 0");
    if (!(fd_step > 0.0)) throw DomainError("fd_step must be > 0");
    const int d = spec.center.dim();
    Point probe(y);
    const double center_val = resolvent(spec, probe);
    double lap = 0.0;
    for (int i = 0; i < d; ++i) {
        Point up = probe, down = probe;
        up[i] += fd_step;
        down[i] -= fd_step;
        lap += (resolvent(spec, up) - 2.0 * center_val + resolvent(spec, down)) / (fd_step * fd_step);
    }
    const double p_eps = heat_kernel(spec.eps, spec.center, probe);
    return std::abs(0.5 * lap - (spec.alpha * center_val - p_eps));
}

}  // namespace superocc
