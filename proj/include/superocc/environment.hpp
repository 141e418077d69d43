#pragma once

// Gaussian environment: white in time, coloured in space with covariance
// g(x, y). Increments over a step dt at a finite set of positions are
// centred Gaussians with covariance dt * G, G_ij = g(x_i, x_j).

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "superocc/core.hpp"
#include "superocc/random.hpp"

namespace superocc {

class CovKernel {
public:
    enum class Kind { Zero, Constant, Gaussian, Exponential };

    static CovKernel zero() { return CovKernel{}; }
    static CovKernel constant(double c) {
        if (!(c >= 0.0 && std::isfinite(c))) throw DomainError("Constant kernel needs c >= 0");
        CovKernel k;
        k.kind_ = Kind::Constant;
        k.sigma2_ = c;
        return k;
    }
    /// sigma2 * exp(-|x-y|^2 / (2 l^2)).
    static CovKernel gaussian(double sigma2, double length_scale) {
        check(sigma2, length_scale);
        CovKernel k;
        k.kind_ = Kind::Gaussian;
        k.sigma2_ = sigma2;
        k.length_ = length_scale;
        return k;
    }
    /// sigma2 * exp(-|x-y| / l).
    static CovKernel exponential(double sigma2, double length_scale) {
        check(sigma2, length_scale);
        CovKernel k;
        k.kind_ = Kind::Exponential;
        k.sigma2_ = sigma2;
        k.length_ = length_scale;
        return k;
    }

    Kind kind() const noexcept { return kind_; }
    double sigma2() const noexcept { return sigma2_; }
    double length_scale() const noexcept { return length_; }
    /// sup |g|, attained on the diagonal.
    double sup_norm() const noexcept { return sigma2_; }
    bool is_zero() const noexcept { return kind_ == Kind::Zero || sigma2_ == 0.0; }

    double operator()(std::span<const double> x, std::span<const double> y) const noexcept {
        switch (kind_) {
            case Kind::Zero: return 0.0;
            case Kind::Constant: return sigma2_;
            case Kind::Gaussian: return sigma2_ * std::exp(-squared_distance(x, y) / (2.0 * length_ * length_));
            case Kind::Exponential: return sigma2_ * std::exp(-distance(x, y) / length_);
        }
        return 0.0;
    }

    std::string describe() const {
        std::ostringstream os;
        os.precision(17);
        switch (kind_) {
            case Kind::Zero: return "zero";
            case Kind::Constant: os << "constant(c=" << sigma2_ << ")"; break;
            case Kind::Gaussian: os << "gaussian(sigma2=" << sigma2_ << ",length_scale=" << length_ << ")"; break;
            case Kind::Exponential: os << "exponential(sigma2=" << sigma2_ << ",length_scale=" << length_ << ")"; break;
        }
        return os.str();
    }

private:
    static void check(double sigma2, double length) {
        if (!(sigma2 >= 0.0 && std::isfinite(sigma2))) throw DomainError("kernel sigma2 must be >= 0");
        if (!(length > 0.0 && std::isfinite(length))) throw DomainError("kernel length_scale must be > 0");
    }
    Kind kind_ = Kind::Zero;
    double sigma2_ = 0.0;
    double length_ = 1.0;
};

/// Flat coordinate storage for m points of dimension d (x_0 y_0 z_0 x_1 ...).
struct PositionView {
    std::span<const double> coords;
    int dim = 1;

    std::size_t size() const noexcept { return coords.size() / static_cast<std::size_t>(dim); }
    std::span<const double> operator[](std::size_t i) const noexcept {
        return coords.subspan(i * static_cast<std::size_t>(dim), static_cast<std::size_t>(dim));
    }
};

/// G_ij = g(x_i, x_j).
inline Eigen::MatrixXd covariance_matrix(const CovKernel& kernel, PositionView pos) {
    const auto m = static_cast<Eigen::Index>(pos.size());
    Eigen::MatrixXd g(m, m);
    for (Eigen::Index i = 0; i < m; ++i) {
        g(i, i) = kernel(pos[i], pos[i]);
        for (Eigen::Index j = 0; j < i; ++j) g(i, j) = g(j, i) = kernel(pos[i], pos[j]);
    }
    return g;
}

struct CovarianceFactor {
    Eigen::MatrixXd lower;  // L with L L^T = G + jitter I
    double jitter = 0.0;
};

/// Cholesky factor of G. Duplicate positions make G singular, so on failure a
/// diagonal jitter is added, growing geometrically up to 1e-10 * trace(G).
inline CovarianceFactor factorize_covariance(const Eigen::MatrixXd& g) {
    CovarianceFactor out;
    if (g.rows() == 0) return out;
    Eigen::LLT<Eigen::MatrixXd> llt(g);
    if (llt.info() == Eigen::Success) {
        out.lower = llt.matrixL();
        return out;
    }
    const double trace = std::max(g.trace(), std::numeric_limits<double>::min());
    const double cap = 1e-10 * trace;
    for (double jitter = 1e-16 * trace; jitter <= cap * (1.0 + 1e-12); jitter *= 10.0) {
        Eigen::MatrixXd shifted = g;
        shifted.diagonal().array() += jitter;
        llt.compute(shifted);
        if (llt.info() == Eigen::Success) {
            out.lower = llt.matrixL();
            out.jitter = jitter;
            return out;
        }
    }
    throw NumericError("covariance matrix is not positive semidefinite within jitter 1e-10 * trace", cap);
}

namespace detail {

// Omitted variance tolerance of the series representation of the Gaussian kernel.
inline constexpr double kFeatureTailTol = 1e-13;
// Above this many series terms the dense factorization is used instead.
inline constexpr std::size_t kMaxFeatures = 4000;

// Number of terms N such that exp(-u) sum_{n >= N} u^n/n! <= kFeatureTailTol.
inline std::size_t gaussian_feature_count(double u_max) {
    if (u_max <= 0.0) return 1;
    // Walk the Poisson(u) pmf in log space until the remaining tail, bounded
    // by a geometric series once n > u, drops below the tolerance.
    double log_term = -u_max;
    for (std::size_t n = 1;; ++n) {
        log_term += std::log(u_max) - std::log(static_cast<double>(n));
        const double ratio = u_max / static_cast<double>(n + 1);
        if (ratio < 1.0 && std::exp(log_term) * ratio / (1.0 - ratio) <= kFeatureTailTol) return n + 1;
        if (n > 10 * kMaxFeatures) return n + 1;
    }
}

// sqrt(n) for n < kMaxFeatures + 1, shared by the recursions below.
inline const std::vector<double>& sqrt_table() {
    static const std::vector<double> table = [] {
        std::vector<double> t(kMaxFeatures + 1);
        for (std::size_t n = 0; n < t.size(); ++n) t[n] = std::sqrt(static_cast<double>(n));
        return t;
    }();
    return table;
}

// f_n(x) = exp(-x^2/2) x^n / sqrt(n!) for n < count, written into out[0..count).
// exp(-(x-y)^2/2) = sum_n f_n(x) f_n(y).
inline void gaussian_features(double x, std::size_t count, std::span<double> out) {
    std::fill(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(count), 0.0);
    if (x == 0.0) {
        out[0] = 1.0;
        return;
    }
    const auto& root = sqrt_table();
    const double u = x * x;
    // Start at the mode of the weights f_n^2, where f_n is O(1), then recurse both ways.
    const std::size_t mode = std::min<std::size_t>(static_cast<std::size_t>(u), count - 1);
    const double ax = std::abs(x);
    const double f = std::exp(-0.5 * u + static_cast<double>(mode) * std::log(ax) -
                              0.5 * std::lgamma(static_cast<double>(mode) + 1.0));
    // Signed recursion: f_{n+1} = f_n x / sqrt(n+1).
    double up = (x < 0.0 && (mode % 2 == 1)) ? -f : f;
    out[mode] = up;
    const double inv_x = 1.0 / x;
    for (std::size_t n = mode + 1; n < count; ++n) {
        up *= x / root[n];
        out[n] = up;
    }
    double down = out[mode];
    for (std::size_t n = mode; n > 0; --n) {
        down *= root[n] * inv_x;
        if (down == 0.0) break;
        out[n - 1] = down;
    }
}

}  // namespace detail

/// Draws from the environment. Routes by kernel and dimension:
///   Zero          -> no draws;
///   Constant      -> one shared standard normal (rank one);
///   Exponential/1 -> exact Ornstein-Uhlenbeck sweep over the sorted positions;
///   Gaussian/1    -> exact series exp(-(x-y)^2/2l^2) = sum_n f_n(x/l) f_n(y/l),
///                    truncated once the omitted variance is below 1e-13;
///   otherwise     -> dense Cholesky of G.
class EnvironmentSampler {
public:
    explicit EnvironmentSampler(CovKernel kernel) : kernel_(kernel) {}

    const CovKernel& kernel() const noexcept { return kernel_; }

    /// Writes one draw with unit-time covariance G into out (size m).
    void sample_unit(PositionView pos, Rng& rng, std::span<double> out) {
        const std::size_t m = pos.size();
        if (out.size() != m) throw DomainError("sample_unit: output size mismatch");
        if (m == 0) return;
        if (kernel_.is_zero()) {
            std::fill(out.begin(), out.end(), 0.0);
            return;
        }
        const double sigma = std::sqrt(kernel_.sigma2());
        switch (kernel_.kind()) {
            case CovKernel::Kind::Zero:
                break;
            case CovKernel::Kind::Constant: {
                const double v = sigma * normal_(rng);
                std::fill(out.begin(), out.end(), v);
                return;
            }
            case CovKernel::Kind::Exponential:
                if (pos.dim == 1) return exponential_sweep(pos, rng, out, sigma);
                break;
            case CovKernel::Kind::Gaussian:
                if (pos.dim == 1 && gaussian_series(pos, rng, out, sigma)) return;
                break;
        }
        dense(pos, rng, out);
    }

    /// Jitter used by the most recent dense factorization (0 if none).
    double last_jitter() const noexcept { return last_jitter_; }

private:
    void exponential_sweep(PositionView pos, Rng& rng, std::span<double> out, double sigma) {
        const std::size_t m = pos.size();
        order_.resize(m);
        std::iota(order_.begin(), order_.end(), std::size_t{0});
        std::stable_sort(order_.begin(), order_.end(),
                         [&](std::size_t a, std::size_t b) { return pos.coords[a] < pos.coords[b]; });
        double prev_x = pos.coords[order_[0]];
        double prev = sigma * normal_(rng);
        out[order_[0]] = prev;
        for (std::size_t k = 1; k < m; ++k) {
            const double x = pos.coords[order_[k]];
            const double rho = std::exp(-(x - prev_x) / kernel_.length_scale());
            const double innov = std::sqrt(std::max(0.0, 1.0 - rho * rho));
            prev = rho * prev + sigma * innov * normal_(rng);
            out[order_[k]] = prev;
            prev_x = x;
        }
    }

    bool gaussian_series(PositionView pos, Rng& rng, std::span<double> out, double sigma) {
        const double ell = kernel_.length_scale();
        double u_max = 0.0;
        for (double x : pos.coords) u_max = std::max(u_max, (x / ell) * (x / ell));
        const std::size_t count = detail::gaussian_feature_count(u_max);
        if (count > detail::kMaxFeatures) return false;
        z_.resize(count);
        for (auto& z : z_) z = normal_(rng);
        features_.resize(count);
        for (std::size_t i = 0; i < pos.size(); ++i) {
            detail::gaussian_features(pos.coords[i] / ell, count, features_);
            double acc = 0.0;
            for (std::size_t n = 0; n < count; ++n) acc += z_[n] * features_[n];
            out[i] = sigma * acc;
        }
        return true;
    }

    void dense(PositionView pos, Rng& rng, std::span<double> out) {
        const auto factor = factorize_covariance(covariance_matrix(kernel_, pos));
        last_jitter_ = factor.jitter;
        Eigen::VectorXd z(static_cast<Eigen::Index>(pos.size()));
        for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = normal_(rng);
        const Eigen::VectorXd v = factor.lower.triangularView<Eigen::Lower>() * z;
        for (Eigen::Index i = 0; i < z.size(); ++i) out[static_cast<std::size_t>(i)] = v(i);
    }

    CovKernel kernel_;
    NormalDist normal_{0.0, 1.0};
    std::vector<std::size_t> order_;
    std::vector<double> z_;
    std::vector<double> features_;
    double last_jitter_ = 0.0;
};

struct NoiseIncrement {
    std::vector<double> positions;  // flat, as in PositionView
    int dim = 1;
    double dt = 0.0;
    std::vector<double> values;
};

/// sqrt(dt) * (draw with covariance G) at the given positions.
inline NoiseIncrement sample_increment(const CovKernel& kernel, PositionView pos, double dt, Rng& rng) {
    if (!(dt > 0.0)) throw DomainError("sample_increment: dt must be > 0");
    NoiseIncrement inc;
    inc.positions.assign(pos.coords.begin(), pos.coords.end());
    inc.dim = pos.dim;
    inc.dt = dt;
    inc.values.resize(pos.size());
    EnvironmentSampler sampler(kernel);
    sampler.sample_unit(pos, rng, inc.values);
    const double s = std::sqrt(dt);
    for (double& v : inc.values) v *= s;
    return inc;
}

/// sum_ij w_i w_j g(x_i, x_j), using the same structure as the sampler where
/// it allows better than quadratic cost.
inline double kernel_quadratic_form(const CovKernel& kernel, PositionView pos, std::span<const double> w) {
    const std::size_t m = pos.size();
    if (w.size() != m) throw DomainError("kernel_quadratic_form: weight size mismatch");
    if (m == 0 || kernel.is_zero()) return 0.0;
    switch (kernel.kind()) {
        case CovKernel::Kind::Zero:
            return 0.0;
        case CovKernel::Kind::Constant: {
            const double s = std::accumulate(w.begin(), w.end(), 0.0);
            return kernel.sigma2() * s * s;
        }
        case CovKernel::Kind::Exponential:
            if (pos.dim == 1) {
                std::vector<std::size_t> order(m);
                std::iota(order.begin(), order.end(), std::size_t{0});
                std::stable_sort(order.begin(), order.end(),
                                 [&](std::size_t a, std::size_t b) { return pos.coords[a] < pos.coords[b]; });
                double total = 0.0;
                double carry = 0.0;  // sum_{j<k} w_j exp(-(x_k - x_j)/l)
                for (std::size_t k = 0; k < m; ++k) {
                    if (k > 0) {
                        const double gap = pos.coords[order[k]] - pos.coords[order[k - 1]];
                        carry = std::exp(-gap / kernel.length_scale()) * (carry + w[order[k - 1]]);
                    }
                    const double wk = w[order[k]];
                    total += wk * wk + 2.0 * wk * carry;
                }
                return kernel.sigma2() * total;
            }
            break;
        case CovKernel::Kind::Gaussian:
            if (pos.dim == 1) {
                const double ell = kernel.length_scale();
                double u_max = 0.0;
                for (double x : pos.coords) u_max = std::max(u_max, (x / ell) * (x / ell));
                const std::size_t count = detail::gaussian_feature_count(u_max);
                if (count > detail::kMaxFeatures) break;
                std::vector<double> proj(count, 0.0), f(count);
                for (std::size_t i = 0; i < m; ++i) {
                    detail::gaussian_features(pos.coords[i] / ell, count, f);
                    for (std::size_t n = 0; n < count; ++n) proj[n] += w[i] * f[n];
                }
                double total = 0.0;
                for (double p : proj) total += p * p;
                return kernel.sigma2() * total;
            }
            break;
    }
    double total = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        total += w[i] * w[i] * kernel(pos[i], pos[i]);
        for (std::size_t j = 0; j < i; ++j) total += 2.0 * w[i] * w[j] * kernel(pos[i], pos[j]);
    }
    return total;
}

}  // namespace superocc
