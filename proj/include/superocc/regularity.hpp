#pragma once

// Hoelder exponent estimation by second-order structure functions:
// S(lag) = E|F(u + lag) - F(u)|^2 is regressed on lag in log-log scale and the
// exponent is half the slope. Spatial lags run along grid axis 0; temporal
// lags run along recorded time series at fixed nodes. A calibration harness of
// synthetic fields with known exponents gates any use on simulation output.

#include <boost/math/distributions/students_t.hpp>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "superocc/core.hpp"
#include "superocc/occupation.hpp"
#include "superocc/random.hpp"

namespace superocc {

struct StructureFunctionFit {
    std::vector<double> lags;
    std::vector<double> values;  // mean squared increment per lag
    std::vector<std::size_t> pair_counts;
    std::size_t replicates = 0;
    double slope = 0.0;
    double slope_ci = 0.0;  // 95% half-width
    double intercept = 0.0;
    double r_squared = 0.0;

    double exponent() const noexcept { return 0.5 * slope; }
    double exponent_ci() const noexcept { return 0.5 * slope_ci; }
};

/// OLS of log(values) on log(lags). Needs >= 4 lags spanning >= one decade and
/// strictly positive values.
inline StructureFunctionFit fit_structure_function(std::vector<double> lags, std::vector<double> values) {
    if (lags.size() != values.size()) throw DomainError("structure fit: lags and values differ in length");
    if (lags.size() < 4) throw InsufficientDataError("structure fit needs at least 4 lags");
    const auto [lo, hi] = std::minmax_element(lags.begin(), lags.end());
    if (!(*lo > 0.0) || *hi / *lo < 10.0 - 1e-9)
        throw InsufficientDataError("structure fit: lags must be positive and span at least one decade");
    for (double v : values)
        if (!(v > 0.0) || !std::isfinite(v))
            throw InsufficientDataError("structure fit: degenerate increments (zero or non-finite structure value)");

    const std::size_t n = lags.size();
    std::vector<double> lx(n), ly(n);
    for (std::size_t i = 0; i < n; ++i) {
        lx[i] = std::log(lags[i]);
        ly[i] = std::log(values[i]);
    }
    const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / static_cast<double>(n);
    const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
        syy += (ly[i] - my) * (ly[i] - my);
    }
    StructureFunctionFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double sse = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double e = ly[i] - (fit.intercept + fit.slope * lx[i]);
        sse += e * e;
    }
    fit.r_squared = syy > 0.0 ? 1.0 - sse / syy : 1.0;
    const double dof = static_cast<double>(n - 2);
    const double se = std::sqrt(sse / dof / sxx);
    const boost::math::students_t dist(dof);
    fit.slope_ci = boost::math::quantile(boost::math::complement(dist, 0.025)) * se;
    fit.lags = std::move(lags);
    fit.values = std::move(values);
    return fit;
}

/// Spatial structure function over node pairs (i, i + lag) along axis 0 of
/// each field, averaged over pairs and replicates.
inline StructureFunctionFit spatial_exponent(const std::vector<DensityField>& fields,
                                             const std::vector<std::size_t>& lag_steps,
                                             std::size_t min_replicates = 100) {
    if (fields.size() < min_replicates)
        throw InsufficientDataError("spatial_exponent: " + std::to_string(fields.size()) + " replicates, need " +
                                    std::to_string(min_replicates));
    if (fields.empty()) throw InsufficientDataError("spatial_exponent: no fields");
    const Grid& grid = fields.front().grid;
    const std::size_t n0 = grid.counts[0];
    std::vector<double> lags, values;
    std::vector<std::size_t> counts;
    for (std::size_t lag : lag_steps) {
        if (lag == 0 || lag >= n0) throw DomainError("spatial_exponent: lag outside the grid");
        double sum = 0.0;
        std::size_t pairs = 0;
        for (const auto& f : fields) {
            if (f.values.size() != grid.size() || f.grid.counts != grid.counts)
                throw DomainError("spatial_exponent: fields live on different grids");
            for (std::size_t i = 0; i < f.values.size(); ++i) {
                if (i % n0 + lag >= n0) continue;
                const double diff = f.values[i + lag] - f.values[i];
                sum += diff * diff;
                ++pairs;
            }
        }
        lags.push_back(static_cast<double>(lag) * grid.pitch);
        values.push_back(sum / static_cast<double>(pairs));
        counts.push_back(pairs);
    }
    auto fit = fit_structure_function(lags, values);
    fit.pair_counts = std::move(counts);
    fit.replicates = fields.size();
    return fit;
}

/// Temporal structure function over equally spaced time series (one per
/// replicate and node), averaged over all start times, nodes and replicates.
inline StructureFunctionFit temporal_exponent(const std::vector<std::vector<double>>& series, double time_step,
                                              const std::vector<std::size_t>& lag_steps,
                                              std::size_t min_series = 1) {
    if (series.size() < min_series || series.empty())
        throw InsufficientDataError("temporal_exponent: not enough time series");
    if (!(time_step > 0.0)) throw DomainError("temporal_exponent: time step must be > 0");
    std::vector<double> lags, values;
    std::vector<std::size_t> counts;
    for (std::size_t lag : lag_steps) {
        double sum = 0.0;
        std::size_t pairs = 0;
        for (const auto& s : series) {
            if (lag == 0 || lag >= s.size()) throw DomainError("temporal_exponent: lag exceeds the series length");
            for (std::size_t k = 0; k + lag < s.size(); ++k) {
                const double diff = s[k + lag] - s[k];
                sum += diff * diff;
                ++pairs;
            }
        }
        lags.push_back(static_cast<double>(lag) * time_step);
        values.push_back(sum / static_cast<double>(pairs));
        counts.push_back(pairs);
    }
    auto fit = fit_structure_function(lags, values);
    fit.pair_counts = std::move(counts);
    fit.replicates = series.size();
    return fit;
}

/// Time series at the given nodes from a list of fields recorded at equally
/// spaced times (one replicate): out[j][k] = fields[k].values[nodes[j]].
inline std::vector<std::vector<double>> node_series(const std::vector<DensityField>& fields,
                                                    const std::vector<std::size_t>& nodes) {
    std::vector<std::vector<double>> out(nodes.size());
    for (std::size_t j = 0; j < nodes.size(); ++j) {
        out[j].reserve(fields.size());
        for (const auto& f : fields) {
            if (nodes[j] >= f.values.size()) throw DomainError("node_series: node index outside the grid");
            out[j].push_back(f.values[nodes[j]]);
        }
    }
    return out;
}

/// Every other lag, used for the fit-stability check.
inline std::vector<std::size_t> halved_lags(const std::vector<std::size_t>& lags) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < lags.size(); i += 2) out.push_back(lags[i]);
    if (out.back() != lags.back()) out.push_back(lags.back());
    return out;
}

inline const std::vector<std::size_t>& default_lag_steps() {
    static const std::vector<std::size_t> lags = {1, 2, 3, 4, 6, 8, 11, 16};
    return lags;
}

// ---------------------------------------------------------------------------
// Calibration harness
// ---------------------------------------------------------------------------

namespace harness {

/// f(x) = x on the grid.
inline DensityField linear_field(const Grid& grid) {
    DensityField f;
    f.grid = grid;
    f.values.resize(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) f.values[i] = grid.node(i)[0];
    return f;
}

/// Slice x -> W(x, t0) of a Brownian sheet along axis 0: sqrt(t0) times a
/// Brownian path started at the first node.
inline DensityField brownian_slice(const Grid& grid, double t0, Rng& rng) {
    NormalDist normal(0.0, 1.0);
    DensityField f;
    f.grid = grid;
    f.values.resize(grid.size());
    const std::size_t n0 = grid.counts[0];
    const double sd = std::sqrt(t0 * grid.pitch);
    for (std::size_t i = 0; i < grid.size(); ++i)
        f.values[i] = i % n0 == 0 ? 0.0 : f.values[i - 1] + sd * normal(rng);
    return f;
}

/// Independent N(0, 1) per node.
inline DensityField white_noise_field(const Grid& grid, Rng& rng) {
    NormalDist normal(0.0, 1.0);
    DensityField f;
    f.grid = grid;
    f.values.resize(grid.size());
    for (double& v : f.values) v = normal(rng);
    return f;
}

inline std::vector<double> linear_series(std::size_t n, double step) {
    std::vector<double> s(n);
    for (std::size_t k = 0; k < n; ++k) s[k] = step * static_cast<double>(k);
    return s;
}

inline std::vector<double> brownian_series(std::size_t n, double step, Rng& rng) {
    NormalDist normal(0.0, 1.0);
    std::vector<double> s(n, 0.0);
    for (std::size_t k = 1; k < n; ++k) s[k] = s[k - 1] + std::sqrt(step) * normal(rng);
    return s;
}

}  // namespace harness

struct CalibrationResult {
    std::string name;
    double expected = 0.0;
    double estimate = 0.0;
    double estimate_halved = 0.0;  // same data, every other lag
    double r_squared = 0.0;
    bool recovered(double tol = 0.1) const noexcept { return std::abs(estimate - expected) <= tol; }
    bool stable(double tol = 0.1) const noexcept { return std::abs(estimate - estimate_halved) < tol; }
};

/// Known-exponent synthetic fields on a line grid of `nodes` nodes: Lipschitz
/// (1) and Brownian slice (1/2) in space, linear (1) and Brownian (1/2) in time.
inline std::vector<CalibrationResult> calibration_suite(std::uint64_t seed, std::size_t replicates = 200,
                                                        std::size_t nodes = 64,
                                                        const std::vector<std::size_t>& lags = default_lag_steps()) {
    Rng rng = make_stream(purpose_seed(seed, StreamPurpose::Harness), 0);
    const Grid grid = Grid::line(-1.0, 1.0, nodes);
    const double step = 0.01;
    std::vector<CalibrationResult> out;
    auto record = [&](std::string name, double expected, auto&& fit) {
        const auto full = fit(lags);
        const auto half = fit(halved_lags(lags));
        out.push_back({std::move(name), expected, full.exponent(), half.exponent(), full.r_squared});
    };

    const std::vector<DensityField> lin = {harness::linear_field(grid)};
    record("spatial_lipschitz", 1.0, [&](const auto& l) { return spatial_exponent(lin, l, 1); });

    std::vector<DensityField> bm;
    for (std::size_t r = 0; r < replicates; ++r) bm.push_back(harness::brownian_slice(grid, 1.0, rng));
    record("spatial_brownian_slice", 0.5, [&](const auto& l) { return spatial_exponent(bm, l, 1); });

    const std::vector<std::vector<double>> lin_t = {harness::linear_series(nodes, step)};
    record("temporal_linear", 1.0, [&](const auto& l) { return temporal_exponent(lin_t, step, l); });

    std::vector<std::vector<double>> bm_t;
    for (std::size_t r = 0; r < replicates; ++r) bm_t.push_back(harness::brownian_series(nodes, step, rng));
    record("temporal_brownian", 0.5, [&](const auto& l) { return temporal_exponent(bm_t, step, l); });
    return out;
}

}  // namespace superocc
