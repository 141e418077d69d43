#pragma once

// Experiment configuration: a versioned JSON document parsed strictly. Every
// object rejects keys it does not know, and every error names the offending
// field path (e.g. "simulation.kernel.sigma2"). The resolved configuration
// serializes back to the same schema, which is what run manifests store.

#include <cstdint>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "superocc/core.hpp"
#include "superocc/environment.hpp"
#include "superocc/occupation.hpp"
#include "superocc/particle_system.hpp"
#include "superocc/regularity.hpp"

namespace superocc {

using Json = nlohmann::ordered_json;

inline constexpr int kConfigSchemaVersion = 1;

class ConfigError : public std::invalid_argument {
public:
    ConfigError(const std::string& path, const std::string& what)
        : std::invalid_argument(path + ": " + what), path_(path) {}
    const std::string& path() const noexcept { return path_; }

private:
    std::string path_;
};

struct MomentsSection {
    std::size_t replicates = 400;
    double bump_bandwidth = 0.5;
    bool second_moments = true;
    std::vector<CovKernel> kernels;  // empty: use the simulation kernel
    std::size_t oracle_paths = 200000;
    double oracle_dt = 0.0;  // 0 selects 1e-3 T
    std::size_t oracle_block = 500;
};

struct TanakaSection {
    Point center{0.0};
    double alpha = 1.0;
    std::vector<double> eps = default_eps_sequence();
    std::size_t replicates = 200;
};

struct GreenSection {
    Point center{0.0};
    double alpha = 1.0;
    double dt0 = 4e-3;
    std::size_t levels = 3;
    std::size_t replicates = 100;
    double min_ratio = 1.8;
};

struct HolderSection {
    std::size_t replicates = 200;
    std::size_t nodes = 64;
    double half_width = 2.0;
    double start_time = 0.25;
    double record_every = 0.01;
    std::vector<std::size_t> lags = default_lag_steps();
};

struct SimulateSection {
    std::size_t replicates = 1;
    std::string snapshot_format = "csv";  // csv, binary or none
};

struct ExperimentConfig {
    int schema_version = kConfigSchemaVersion;
    std::uint64_t seed = 20261016;
    unsigned threads = 1;
    std::string out_dir = "superocc_out";
    SimConfig sim;
    SimulateSection simulate;
    MomentsSection moments;
    TanakaSection tanaka;
    GreenSection green;
    HolderSection holder;
};

namespace detail {

// Field-path aware view of one JSON object; finish() rejects unread keys.
class ObjectReader {
public:
    ObjectReader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(label(), "expected an object");
    }

    std::string at(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }
    bool has(const std::string& key) const { return j_.contains(key); }

    const Json& raw(const std::string& key) {
        seen_.insert(key);
        return j_.at(key);
    }

    template <class T>
    void read(const std::string& key, T& out) {
        if (!has(key)) return;
        out = convert<T>(raw(key), at(key));
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!seen_.count(it.key())) throw ConfigError(at(it.key()), "unknown key");
    }

    template <class T>
    static T convert(const Json& v, const std::string& path) {
        if constexpr (std::is_same_v<T, bool>) {
            if (!v.is_boolean()) throw ConfigError(path, "expected a boolean");
        } else if constexpr (std::is_same_v<T, std::string>) {
            if (!v.is_string()) throw ConfigError(path, "expected a string");
        } else if constexpr (std::is_floating_point_v<T>) {
            if (!v.is_number()) throw ConfigError(path, "expected a number");
        } else if constexpr (std::is_integral_v<T>) {
            if (!v.is_number_integer()) throw ConfigError(path, "expected an integer");
            if (std::is_unsigned_v<T> && v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0)
                throw ConfigError(path, "expected a non-negative integer");
        } else {
            if (!v.is_array()) throw ConfigError(path, "expected an array");
            T out;
            for (std::size_t i = 0; i < v.size(); ++i)
                out.push_back(convert<typename T::value_type>(v[i], path + "[" + std::to_string(i) + "]"));
            return out;
        }
        return v.get<T>();
    }

private:
    std::string label() const { return path_.empty() ? "<root>" : path_; }
    const Json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

// Runs `body` and re-labels domain errors with the field path.
template <class F>
auto at_path(const std::string& path, F&& body) {
    try {
        return body();
    } catch (const ConfigError&) {
        throw;
    } catch (const DomainError& e) {
        throw ConfigError(path, e.what());
    }
}

inline Point parse_point(const Json& v, const std::string& path) {
    const auto c = ObjectReader::convert<std::vector<double>>(v, path);
    return at_path(path, [&] {
        if (c.empty()) throw DomainError("point needs at least one coordinate");
        return Point(std::span<const double>(c));
    });
}

inline Json point_json(const Point& p) {
    Json a = Json::array();
    for (double v : p.coords()) a.push_back(v);
    return a;
}

inline CovKernel parse_kernel(const Json& j, const std::string& path) {
    ObjectReader r(j, path);
    std::string type;
    if (!r.has("type")) throw ConfigError(r.at("type"), "missing");
    r.read("type", type);
    double c = 0.0, sigma2 = 0.0, length = 1.0;
    CovKernel k;
    if (type == "zero") {
        k = CovKernel::zero();
    } else if (type == "constant") {
        r.read("c", c);
        k = at_path(r.at("c"), [&] { return CovKernel::constant(c); });
    } else if (type == "gaussian" || type == "exponential") {
        r.read("sigma2", sigma2);
        r.read("length_scale", length);
        k = at_path(path, [&] {
            return type == "gaussian" ? CovKernel::gaussian(sigma2, length) : CovKernel::exponential(sigma2, length);
        });
    } else {
        throw ConfigError(r.at("type"), "unknown kernel type '" + type + "' (zero, constant, gaussian, exponential)");
    }
    r.finish();
    return k;
}

inline Json kernel_json(const CovKernel& k) {
    Json j;
    switch (k.kind()) {
        case CovKernel::Kind::Zero: j["type"] = "zero"; break;
        case CovKernel::Kind::Constant:
            j["type"] = "constant";
            j["c"] = k.sigma2();
            break;
        case CovKernel::Kind::Gaussian:
        case CovKernel::Kind::Exponential:
            j["type"] = k.kind() == CovKernel::Kind::Gaussian ? "gaussian" : "exponential";
            j["sigma2"] = k.sigma2();
            j["length_scale"] = k.length_scale();
            break;
    }
    return j;
}

inline InitialMeasure parse_initial(const Json& j, const std::string& path) {
    ObjectReader r(j, path);
    std::string type;
    if (!r.has("type")) throw ConfigError(r.at("type"), "missing");
    r.read("type", type);
    InitialMeasure mu;
    if (type == "dirac") {
        if (!r.has("at")) throw ConfigError(r.at("at"), "missing");
        const Point at = parse_point(r.raw("at"), r.at("at"));
        double mass = 1.0;
        r.read("mass", mass);
        mu = at_path(r.at("mass"), [&] { return InitialMeasure::dirac(at, mass); });
    } else if (type == "diracs") {
        if (!r.has("atoms")) throw ConfigError(r.at("atoms"), "missing");
        const Json& arr = r.raw("atoms");
        if (!arr.is_array()) throw ConfigError(r.at("atoms"), "expected an array");
        std::vector<WeightedAtom> atoms;
        for (std::size_t i = 0; i < arr.size(); ++i) {
            ObjectReader a(arr[i], r.at("atoms") + "[" + std::to_string(i) + "]");
            WeightedAtom w;
            if (!a.has("at")) throw ConfigError(a.at("at"), "missing");
            w.point = parse_point(a.raw("at"), a.at("at"));
            a.read("mass", w.mass);
            a.finish();
            atoms.push_back(w);
        }
        mu = at_path(r.at("atoms"), [&] { return InitialMeasure::weighted_diracs(atoms); });
    } else if (type == "gaussian") {
        if (!r.has("mean")) throw ConfigError(r.at("mean"), "missing");
        const Point mean = parse_point(r.raw("mean"), r.at("mean"));
        double variance = 1.0, mass = 1.0;
        r.read("variance", variance);
        r.read("mass", mass);
        mu = at_path(path, [&] { return InitialMeasure::gaussian_density(mean, variance, mass); });
    } else {
        throw ConfigError(r.at("type"), "unknown initial measure type '" + type + "' (dirac, diracs, gaussian)");
    }
    r.finish();
    return mu;
}

inline Json initial_json(const InitialMeasure& mu) {
    Json j;
    switch (mu.kind()) {
        case InitialMeasure::Kind::Dirac:
            j["type"] = "dirac";
            j["at"] = point_json(mu.atoms().front().point);
            j["mass"] = mu.atoms().front().mass;
            break;
        case InitialMeasure::Kind::WeightedDiracs: {
            j["type"] = "diracs";
            Json arr = Json::array();
            for (const auto& a : mu.atoms()) {
                Json e;
                e["at"] = point_json(a.point);
                e["mass"] = a.mass;
                arr.push_back(e);
            }
            j["atoms"] = arr;
            break;
        }
        case InitialMeasure::Kind::GaussianDensity:
            j["type"] = "gaussian";
            j["mean"] = point_json(mu.atoms().front().point);
            j["variance"] = mu.variance();
            j["mass"] = mu.total_mass();
            break;
    }
    return j;
}

inline void require(bool ok, const std::string& path, const std::string& what) {
    if (!ok) throw ConfigError(path, what);
}

}  // namespace detail

/// Parses and validates a configuration document. Missing keys keep their
/// defaults; unknown keys, wrong types and out-of-domain values raise
/// ConfigError naming the field path.
inline ExperimentConfig parse_config(const Json& doc) {
    using detail::ObjectReader;
    using detail::require;
    ExperimentConfig cfg;
    ObjectReader root(doc, "");
    if (!root.has("schema_version")) throw ConfigError("schema_version", "missing");
    root.read("schema_version", cfg.schema_version);
    require(cfg.schema_version == kConfigSchemaVersion, "schema_version",
            "unsupported version " + std::to_string(cfg.schema_version) + " (expected " +
                std::to_string(kConfigSchemaVersion) + ")");
    root.read("seed", cfg.seed);
    root.read("threads", cfg.threads);
    root.read("out_dir", cfg.out_dir);
    require(cfg.threads >= 1, "threads", "must be >= 1");

    int dim = 1;
    if (root.has("simulation")) {
        ObjectReader s(root.raw("simulation"), "simulation");
        s.read("dim", dim);
        cfg.sim.dim = detail::at_path(s.at("dim"), [&] { return Dim{dim}; });
        cfg.sim.mu = InitialMeasure::dirac(Point::origin(cfg.sim.dim));
        s.read("unit_mass", cfg.sim.unit_mass);
        s.read("horizon", cfg.sim.horizon);
        s.read("snapshot_stride", cfg.sim.snapshot_stride);
        s.read("population_cap", cfg.sim.population_cap);
        if (s.has("kernel")) cfg.sim.kernel = detail::parse_kernel(s.raw("kernel"), s.at("kernel"));
        if (s.has("initial")) cfg.sim.mu = detail::parse_initial(s.raw("initial"), s.at("initial"));
        s.finish();
    }
    cfg.sim.seed = cfg.seed;
    detail::at_path("simulation", [&] {
        cfg.sim.validate();
        return 0;
    });

    if (root.has("simulate")) {
        ObjectReader s(root.raw("simulate"), "simulate");
        s.read("replicates", cfg.simulate.replicates);
        s.read("snapshot_format", cfg.simulate.snapshot_format);
        s.finish();
    }
    const auto& fmt = cfg.simulate.snapshot_format;
    require(fmt == "csv" || fmt == "binary" || fmt == "none", "simulate.snapshot_format", "expected csv, binary or none");
    require(cfg.simulate.replicates >= 1, "simulate.replicates", "must be >= 1");

    if (root.has("moments")) {
        ObjectReader s(root.raw("moments"), "moments");
        s.read("replicates", cfg.moments.replicates);
        s.read("bump_bandwidth", cfg.moments.bump_bandwidth);
        s.read("second_moments", cfg.moments.second_moments);
        if (s.has("kernels")) {
            const Json& arr = s.raw("kernels");
            require(arr.is_array(), s.at("kernels"), "expected an array");
            for (std::size_t i = 0; i < arr.size(); ++i)
                cfg.moments.kernels.push_back(detail::parse_kernel(arr[i], s.at("kernels") + "[" + std::to_string(i) + "]"));
        }
        s.read("oracle_paths", cfg.moments.oracle_paths);
        s.read("oracle_dt", cfg.moments.oracle_dt);
        s.read("oracle_block", cfg.moments.oracle_block);
        s.finish();
    }
    require(cfg.moments.replicates >= 2, "moments.replicates", "must be >= 2");
    require(cfg.moments.bump_bandwidth > 0.0, "moments.bump_bandwidth", "must be > 0");
    require(cfg.moments.oracle_paths >= 2, "moments.oracle_paths", "must be >= 2");
    require(cfg.moments.oracle_dt >= 0.0, "moments.oracle_dt", "must be >= 0");
    require(cfg.moments.oracle_block >= 1, "moments.oracle_block", "must be >= 1");
    for (std::size_t i = 0; i < cfg.moments.kernels.size(); ++i)
        require(cfg.moments.kernels[i].sup_norm() * std::sqrt(cfg.sim.dt()) <= 0.5,
                "moments.kernels[" + std::to_string(i) + "]", "clipping guard violated: sup|g| * sqrt(dt) > 1/2");

    auto center_for = [&](ObjectReader& s, Point& center) {
        if (!s.has("center")) {
            center = Point::origin(cfg.sim.dim);
            return;
        }
        center = detail::parse_point(s.raw("center"), s.at("center"));
        require(center.dim() == cfg.sim.dim.value(), s.at("center"), "dimension does not match simulation.dim");
    };
    {
        cfg.tanaka.center = Point::origin(cfg.sim.dim);
        if (root.has("tanaka")) {
            ObjectReader s(root.raw("tanaka"), "tanaka");
            center_for(s, cfg.tanaka.center);
            s.read("alpha", cfg.tanaka.alpha);
            s.read("eps", cfg.tanaka.eps);
            s.read("replicates", cfg.tanaka.replicates);
            s.finish();
        }
        require(cfg.tanaka.alpha >= 0.0, "tanaka.alpha", "must be >= 0");
        require(!cfg.tanaka.eps.empty(), "tanaka.eps", "needs at least one value");
        for (double e : cfg.tanaka.eps) require(e > 0.0, "tanaka.eps", "values must be > 0");
        require(cfg.tanaka.replicates >= 2, "tanaka.replicates", "must be >= 2");
    }
    {
        cfg.green.center = Point::origin(cfg.sim.dim);
        if (root.has("green")) {
            ObjectReader s(root.raw("green"), "green");
            center_for(s, cfg.green.center);
            s.read("alpha", cfg.green.alpha);
            s.read("dt0", cfg.green.dt0);
            s.read("levels", cfg.green.levels);
            s.read("replicates", cfg.green.replicates);
            s.read("min_ratio", cfg.green.min_ratio);
            s.finish();
        }
        require(cfg.green.alpha > 0.0, "green.alpha", "must be > 0");
        require(cfg.green.dt0 > 0.0, "green.dt0", "must be > 0");
        require(cfg.green.levels >= 2, "green.levels", "must be >= 2");
        require(cfg.green.replicates >= 1, "green.replicates", "must be >= 1");
    }
    if (root.has("holder")) {
        ObjectReader s(root.raw("holder"), "holder");
        s.read("replicates", cfg.holder.replicates);
        s.read("nodes", cfg.holder.nodes);
        s.read("half_width", cfg.holder.half_width);
        s.read("start_time", cfg.holder.start_time);
        s.read("record_every", cfg.holder.record_every);
        s.read("lags", cfg.holder.lags);
        s.finish();
    }
    require(cfg.holder.nodes >= 2, "holder.nodes", "must be >= 2");
    require(cfg.holder.half_width > 0.0, "holder.half_width", "must be > 0");
    require(cfg.holder.record_every > 0.0, "holder.record_every", "must be > 0");
    require(cfg.holder.start_time >= 0.0, "holder.start_time", "must be >= 0");
    require(cfg.holder.lags.size() >= 4, "holder.lags", "needs at least 4 lags");
    for (auto l : cfg.holder.lags) require(l >= 1 && l < cfg.holder.nodes, "holder.lags", "lags must lie in [1, nodes)");
    root.finish();
    return cfg;
}

/// Reads and parses a configuration file; JSON syntax errors become
/// ConfigError at the root path.
inline ExperimentConfig load_config(std::istream& is) {
    Json doc;
    try {
        doc = Json::parse(is);
    } catch (const Json::parse_error& e) {
        throw ConfigError("<root>", std::string("invalid JSON: ") + e.what());
    }
    return parse_config(doc);
}

/// Full resolved configuration in the input schema.
inline Json to_json(const ExperimentConfig& c) {
    Json j;
    j["schema_version"] = c.schema_version;
    j["seed"] = c.seed;
    j["threads"] = c.threads;
    j["out_dir"] = c.out_dir;
    Json s;
    s["dim"] = c.sim.dim.value();
    s["unit_mass"] = c.sim.unit_mass;
    s["horizon"] = c.sim.horizon;
    s["snapshot_stride"] = c.sim.snapshot_stride;
    s["population_cap"] = c.sim.population_cap;
    s["kernel"] = detail::kernel_json(c.sim.kernel);
    s["initial"] = detail::initial_json(c.sim.mu);
    j["simulation"] = s;
    j["simulate"] = {{"replicates", c.simulate.replicates}, {"snapshot_format", c.simulate.snapshot_format}};
    Json kernels = Json::array();
    for (const auto& k : c.moments.kernels) kernels.push_back(detail::kernel_json(k));
    j["moments"] = {{"replicates", c.moments.replicates},     {"bump_bandwidth", c.moments.bump_bandwidth},
                    {"second_moments", c.moments.second_moments}, {"kernels", kernels},
                    {"oracle_paths", c.moments.oracle_paths}, {"oracle_dt", c.moments.oracle_dt},
                    {"oracle_block", c.moments.oracle_block}};
    j["tanaka"] = {{"center", detail::point_json(c.tanaka.center)},
                   {"alpha", c.tanaka.alpha},
                   {"eps", c.tanaka.eps},
                   {"replicates", c.tanaka.replicates}};
    j["green"] = {{"center", detail::point_json(c.green.center)}, {"alpha", c.green.alpha},
                  {"dt0", c.green.dt0},                           {"levels", c.green.levels},
                  {"replicates", c.green.replicates},             {"min_ratio", c.green.min_ratio}};
    j["holder"] = {{"replicates", c.holder.replicates},     {"nodes", c.holder.nodes},
                   {"half_width", c.holder.half_width},     {"start_time", c.holder.start_time},
                   {"record_every", c.holder.record_every}, {"lags", c.holder.lags}};
    return j;
}

}  // namespace superocc
