// Command-line driver: parses a JSON config, runs one experiment, writes CSV
// tables and JSON reports plus a manifest into the output directory.
//
// Exit codes: 0 pass, 1 check failure, 2 usage or config error, 3 runtime error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "superocc/superocc.hpp"

namespace fs = std::filesystem;
using namespace superocc;

namespace {

enum Exit { kPass = 0, kCheckFailed = 1, kUsage = 2, kRuntime = 3 };

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Options {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
    std::string out_dir;
};

class Run {
public:
    Run(std::string command, ExperimentConfig cfg) : command_(std::move(command)), cfg_(std::move(cfg)) {
        std::error_code ec;
        fs::create_directories(cfg_.out_dir, ec);
        if (ec) throw IoError("cannot create output directory " + cfg_.out_dir + ": " + ec.message());
    }

    const ExperimentConfig& cfg() const noexcept { return cfg_; }

    std::ofstream open(const std::string& name, bool binary = false) {
        const fs::path p = fs::path(cfg_.out_dir) / name;
        std::ofstream os(p, binary ? std::ios::binary : std::ios::out);
        if (!os) throw IoError("cannot open " + p.string() + " for writing");
        outputs_.push_back(name);
        return os;
    }

    void close(std::ofstream& os, const std::string& name) {
        os.close();
        if (!os) throw IoError("write failed for " + (fs::path(cfg_.out_dir) / name).string());
    }

    void write_json(const std::string& name, const Json& j) {
        auto os = open(name);
        os << j.dump(2) << '\n';
        close(os, name);
    }

    template <class F>
    void write_text(const std::string& name, F&& body, bool binary = false) {
        auto os = open(name, binary);
        body(os);
        close(os, name);
    }

    /// Writes manifest.json and maps the verdict to an exit code.
    int finish(bool pass) {
        Json m;
        m["tool"] = "superocc";
        m["version"] = kVersion;
        m["command"] = command_;
        m["seed"] = cfg_.seed;
        m["status"] = pass ? "pass" : "fail";
        m["outputs"] = outputs_;
        m["config"] = to_json(cfg_);
        const fs::path p = fs::path(cfg_.out_dir) / "manifest.json";
        std::ofstream os(p);
        if (!os) throw IoError("cannot open " + p.string() + " for writing");
        os << m.dump(2) << '\n';
        os.close();
        if (!os) throw IoError("write failed for " + p.string());
        std::cout << command_ << ": " << (pass ? "PASS" : "FAIL") << " (" << cfg_.out_dir << ")\n";
        return pass ? kPass : kCheckFailed;
    }

private:
    std::string command_;
    ExperimentConfig cfg_;
    std::vector<std::string> outputs_;
};

ExperimentConfig resolve_config(const Options& opt) {
    ExperimentConfig cfg;
    if (opt.config_path.empty()) {
        cfg = parse_config(Json{{"schema_version", kConfigSchemaVersion}});
    } else {
        std::ifstream is(opt.config_path);
        if (!is) throw ConfigError("--config", "cannot read " + opt.config_path);
        cfg = load_config(is);
    }
    if (opt.seed) cfg.seed = *opt.seed;
    cfg.sim.seed = cfg.seed;
    if (opt.threads) {
        if (*opt.threads == 0) throw ConfigError("--threads", "must be >= 1");
        cfg.threads = *opt.threads;
    }
    // Precedence for the output directory: --out, then SUPEROCC_OUT_DIR, then the config.
    if (const char* env = std::getenv("SUPEROCC_OUT_DIR"); env && *env) cfg.out_dir = env;
    if (!opt.out_dir.empty()) cfg.out_dir = opt.out_dir;
    return cfg;
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

int cmd_simulate(Run& run) {
    const auto& cfg = run.cfg();
    const auto& sim = cfg.sim;
    const auto& format = cfg.simulate.snapshot_format;
    struct Row {
        RunSummary summary;
        std::size_t final_count = 0;
        double final_mass = 0.0;
        double occupation_mass = 0.0;
    };
    const std::size_t reps = cfg.simulate.replicates;
    std::vector<std::string> names(reps);
    for (std::size_t i = 0; i < reps; ++i) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "snapshots_r%04zu.%s", i, format == "binary" ? "bin" : "csv");
        names[i] = buf;
    }
    // Files are opened up front so that the output list is in replicate order.
    std::vector<std::ofstream> files;
    if (format != "none")
        for (const auto& n : names) files.push_back(run.open(n, format == "binary"));
    const auto rows = run_replicates(reps, cfg.seed, cfg.threads, [&](std::size_t i, Rng&) {
        Rng rng = make_stream(purpose_seed(sim.seed, StreamPurpose::Simulation), i);
        Row row;
        std::ofstream* os = format == "none" ? nullptr : &files[i];
        if (os && format == "csv") write_snapshot_csv_header(*os, sim.dim.value());
        const std::size_t last = sim.steps();
        row.summary = simulate(sim, rng, [&](const ParticleCloud& c, const StepInfo& info) {
            if (info.step < last) row.occupation_mass += sim.dt() * c.total_mass();
            if (info.step == last) {
                row.final_count = c.count();
                row.final_mass = c.total_mass();
            }
            if (!os || info.step % sim.snapshot_stride != 0) return;
            if (format == "csv") {
                write_snapshot_csv(*os, c, info.step);
            } else {
                write_snapshot_binary(*os, c);
            }
        });
        return row;
    });
    for (std::size_t i = 0; i < files.size(); ++i) run.close(files[i], names[i]);

    run.write_text("summary.csv", [&](std::ostream& os) {
        write_row(os, {"replicate", "steps", "final_count", "final_mass", "occupation_mass", "max_population",
                       "branch_decisions", "clamped", "clamp_fraction", "extinct", "extinction_time"});
        for (std::size_t i = 0; i < rows.size(); ++i) {
            const auto& r = rows[i];
            write_row(os, {std::to_string(i), std::to_string(r.summary.steps), std::to_string(r.final_count),
                           fmt(r.final_mass), fmt(r.occupation_mass), std::to_string(r.summary.max_population),
                           std::to_string(r.summary.branch_decisions), std::to_string(r.summary.clamped),
                           fmt(r.summary.clamp_fraction()), r.summary.extinct ? "1" : "0",
                           fmt(r.summary.extinction_time)});
        }
    });
    return run.finish(true);
}

// ---------------------------------------------------------------------------
// verify-moments
// ---------------------------------------------------------------------------

Json report_json(const MomentReport& r, double z_max) {
    return {{"identity", r.identity},
            {"estimate", r.estimate},
            {"estimate_se", r.estimate_se},
            {"oracle", r.oracle},
            {"oracle_se", r.oracle_se},
            {"z", r.z_score()},
            {"estimate_replicates", r.estimate_replicates},
            {"oracle_paths", r.oracle_paths},
            {"pass", std::abs(r.z_score()) <= z_max}};
}

int cmd_verify_moments(Run& run) {
    const auto& cfg = run.cfg();
    MomentsConfig m;
    m.sim = cfg.sim;
    m.kernels = cfg.moments.kernels.empty() ? std::vector<CovKernel>{cfg.sim.kernel} : cfg.moments.kernels;
    m.replicates = cfg.moments.replicates;
    m.bump_bandwidth = cfg.moments.bump_bandwidth;
    m.second_moments = cfg.moments.second_moments;
    m.oracle.n_paths = cfg.moments.oracle_paths;
    m.oracle.dt_fk = cfg.moments.oracle_dt;
    m.oracle.block = cfg.moments.oracle_block;
    m.oracle.seed = cfg.seed;
    m.oracle.threads = cfg.threads;
    m.threads = cfg.threads;
    const double z_max = 4.0;
    const auto rows = verify_moments(m);
    bool pass = true;
    Json arr = Json::array();
    for (const auto& r : rows) {
        pass = pass && std::abs(r.z_score()) <= z_max;
        arr.push_back(report_json(r, z_max));
        std::printf("%-60s est %12.6g +- %-10.3g oracle %12.6g +- %-10.3g z %+6.2f\n", r.identity.c_str(), r.estimate,
                    r.estimate_se, r.oracle, r.oracle_se, r.z_score());
    }
    run.write_json("moments.json", Json{{"z_max", z_max}, {"rows", arr}});
    run.write_text("moments.csv", [&](std::ostream& os) {
        write_row(os, {"identity", "estimate", "estimate_se", "oracle", "oracle_se", "z"});
        for (const auto& r : rows)
            write_row(os, {'"' + r.identity + '"', fmt(r.estimate), fmt(r.estimate_se), fmt(r.oracle),
                           fmt(r.oracle_se), fmt(r.z_score())});
    });
    return run.finish(pass);
}

// ---------------------------------------------------------------------------
// tanaka
// ---------------------------------------------------------------------------

int cmd_tanaka(Run& run) {
    const auto& cfg = run.cfg();
    const auto& t = cfg.tanaka;
    const auto ex = tanaka_experiment(cfg.sim, t.center, t.alpha, t.eps, t.replicates, cfg.threads);
    Json rows = Json::array();
    for (const auto& r : ex.rows) {
        rows.push_back({{"eps", r.eps}, {"mean_occupation", r.mean_lhs}, {"se", r.se}, {"gap", r.gap}});
        std::printf("eps %-8g mean %.6f +- %.6f gap to target %.6f\n", r.eps, r.mean_lhs, r.se, r.gap);
    }
    std::printf("target %.6f  max residual %.3g (limit %.3g)\n", ex.target, ex.max_residual, 5.0 * ex.dt);
    const bool pass = ex.monotone() && ex.residual_ok();
    run.write_json("tanaka.json", Json{{"target", ex.target},
                                       {"dt", ex.dt},
                                       {"replicates", ex.replicates},
                                       {"max_residual", ex.max_residual},
                                       {"residual_limit", 5.0 * ex.dt},
                                       {"monotone", ex.monotone()},
                                       {"rows", rows}});
    run.write_text("tanaka.csv", [&](std::ostream& os) {
        write_row(os, {"eps", "mean_occupation", "se", "gap"});
        for (const auto& r : ex.rows) write_row(os, {fmt(r.eps), fmt(r.mean_lhs), fmt(r.se), fmt(r.gap)});
    });
    return run.finish(pass);
}

// ---------------------------------------------------------------------------
// green-rep
// ---------------------------------------------------------------------------

int cmd_green_rep(Run& run) {
    const auto& cfg = run.cfg();
    const auto& g = cfg.green;
    const auto ex = green_experiment(cfg.sim, g.center, g.alpha, g.dt0, g.levels, g.replicates, cfg.threads);
    Json levels = Json::array();
    for (const auto& l : ex.levels) {
        levels.push_back({{"dt", l.dt}, {"rms_residual", l.rms}, {"mean_terminal", l.mean_terminal}, {"terminal_se", l.terminal_se}});
        std::printf("dt %-8g rms residual %.6g  mean X_T(g) %.6f +- %.6f\n", l.dt, l.rms, l.mean_terminal, l.terminal_se);
    }
    const auto ratios = ex.ratios();
    for (double r : ratios) std::printf("halving ratio %.3f (need >= %.2f)\n", r, g.min_ratio);
    run.write_json("green.json", Json{{"expected_terminal", ex.expected_terminal},
                                      {"min_ratio", g.min_ratio},
                                      {"ratios", ratios},
                                      {"levels", levels}});
    run.write_text("green.csv", [&](std::ostream& os) {
        write_row(os, {"dt", "rms_residual", "mean_terminal", "terminal_se"});
        for (const auto& l : ex.levels) write_row(os, {fmt(l.dt), fmt(l.rms), fmt(l.mean_terminal), fmt(l.terminal_se)});
    });
    return run.finish(ex.pass(g.min_ratio));
}

// ---------------------------------------------------------------------------
// holder
// ---------------------------------------------------------------------------

Json fit_json(const StructureFunctionFit& f, double halved) {
    return {{"exponent", f.exponent()}, {"exponent_ci", f.exponent_ci()}, {"exponent_halved_lags", halved},
            {"slope", f.slope},         {"intercept", f.intercept},       {"r_squared", f.r_squared},
            {"replicates", f.replicates}, {"lags", f.lags},               {"values", f.values}};
}

void write_fit_csv(Run& run, const std::string& name, const StructureFunctionFit& f) {
    run.write_text(name, [&](std::ostream& os) {
        write_row(os, {"lag", "structure_value", "pairs"});
        for (std::size_t i = 0; i < f.lags.size(); ++i)
            write_row(os, {fmt(f.lags[i]), fmt(f.values[i]), std::to_string(f.pair_counts[i])});
    });
}

int cmd_holder(Run& run) {
    const auto& cfg = run.cfg();
    HolderConfig h;
    h.sim = cfg.sim;
    h.replicates = cfg.holder.replicates;
    h.nodes = cfg.holder.nodes;
    h.half_width = cfg.holder.half_width;
    h.start_time = cfg.holder.start_time;
    h.record_every = cfg.holder.record_every;
    h.lags = cfg.holder.lags;
    h.threads = cfg.threads;
    const auto ex = holder_experiment(h);
    Json cal = Json::array();
    for (const auto& c : ex.calibration) {
        cal.push_back({{"name", c.name}, {"expected", c.expected}, {"estimate", c.estimate},
                       {"estimate_halved_lags", c.estimate_halved}, {"recovered", c.recovered()}, {"stable", c.stable()}});
        std::printf("calibration %-24s expected %.2f estimate %.4f halved %.4f\n", c.name.c_str(), c.expected,
                    c.estimate, c.estimate_halved);
    }
    run.write_text("holder_calibration.csv", [&](std::ostream& os) {
        write_row(os, {"name", "expected", "estimate", "estimate_halved_lags"});
        for (const auto& c : ex.calibration) write_row(os, {c.name, fmt(c.expected), fmt(c.estimate), fmt(c.estimate_halved)});
    });
    // d = 2, 3 exponents are reported without a verdict.
    const bool graded = cfg.sim.dim.value() == 1;
    Json report{{"calibrated", ex.calibrated()}, {"calibration", cal}, {"graded", graded}, {"bandwidth_h", ex.bandwidth}};
    bool pass = ex.calibrated();
    if (!ex.simulated) {
        std::printf("calibration failed: simulation skipped\n");
    } else {
        std::printf("spatial exponent %.4f (halved lags %.4f, R^2 %.4f)\n", ex.spatial.exponent(), ex.spatial_halved,
                    ex.spatial.r_squared);
        std::printf("temporal exponent %.4f (halved lags %.4f, R^2 %.4f)\n", ex.temporal.exponent(),
                    ex.temporal_halved, ex.temporal.r_squared);
        report["spatial"] = fit_json(ex.spatial, ex.spatial_halved);
        report["temporal"] = fit_json(ex.temporal, ex.temporal_halved);
        report["spatial_range"] = {0.7, 1.1};
        report["temporal_range"] = {0.35, 0.65};
        if (graded) {
            report["spatial_pass"] = ex.spatial_pass();
            report["temporal_pass"] = ex.temporal_pass();
            pass = pass && ex.spatial_pass() && ex.temporal_pass();
        }
        write_fit_csv(run, "holder_spatial.csv", ex.spatial);
        write_fit_csv(run, "holder_temporal.csv", ex.temporal);
        run.write_text("density_mean.csv", [&](std::ostream& os) { write_field_csv(os, ex.mean_final); });
        run.write_text("density_mean.matrix", [&](std::ostream& os) { write_field_matrix(os, ex.mean_final); });
    }
    run.write_json("holder.json", report);
    return run.finish(pass);
}

// ---------------------------------------------------------------------------
// kernel-selftest
// ---------------------------------------------------------------------------

int cmd_kernel_selftest(Run& run) {
    const auto& cfg = run.cfg();
    const auto rows = kernel_selftest();
    const auto bounds = bound_check_suite(cfg.seed, 100);
    const std::vector<double> probes = {0.0, 0.3, 1.0};
    std::vector<SamplerCheck> samplers;
    for (const auto& k : {CovKernel::constant(0.5), CovKernel::gaussian(0.5, 1.0), CovKernel::exponential(0.5, 1.0)})
        samplers.push_back(sampler_covariance_check(k, probes, 1, 1e-2, 20000, cfg.seed));

    bool pass = all_pass(rows);
    Json jr = Json::array();
    for (const auto& r : rows) {
        jr.push_back({{"name", r.name}, {"value", r.value}, {"threshold", r.threshold}, {"pass", r.pass}});
        if (!r.pass) std::printf("FAIL %s: %.3g vs %.3g\n", r.name.c_str(), r.value, r.threshold);
    }
    std::printf("kernel identities: %zu checks, %s\n", rows.size(), pass ? "all pass" : "failures above");
    Json jb = Json::array();
    for (const auto& b : bounds) {
        pass = pass && b.stable() && b.failures == 0;
        jb.push_back({{"name", b.name}, {"statement", b.statement}, {"samples", b.samples},
                      {"constant_half", b.constant_half}, {"constant", b.constant}, {"drift", b.drift()},
                      {"reference", std::isnan(b.reference) ? Json(nullptr) : Json(b.reference)},
                      {"failures", b.failures}, {"stable", b.stable()}});
        std::printf("bound %-22s C %.6g (half %.6g, drift %.3f)\n", b.name.c_str(), b.constant, b.constant_half,
                    b.drift());
    }
    Json js = Json::array();
    for (const auto& s : samplers) {
        pass = pass && s.pass();
        js.push_back({{"kernel", s.kernel}, {"draws", s.draws}, {"max_cov_z", s.max_cov_z},
                      {"max_cross_z", s.max_cross_z}, {"max_mean_z", s.max_mean_z}, {"pass", s.pass()}});
        std::printf("sampler %-40s cov z %.2f cross z %.2f mean z %.2f\n", s.kernel.c_str(), s.max_cov_z,
                    s.max_cross_z, s.max_mean_z);
    }
    run.write_json("selftest.json", Json{{"identities", jr}, {"bounds", jb}, {"sampler", js}});
    run.write_text("selftest.csv", [&](std::ostream& os) {
        write_row(os, {"name", "value", "threshold", "pass"});
        for (const auto& r : rows) write_row(os, {'"' + r.name + '"', fmt(r.value), fmt(r.threshold), r.pass ? "1" : "0"});
    });
    run.write_text("bounds.csv", [&](std::ostream& os) {
        write_row(os, {"name", "samples", "constant_half", "constant", "drift", "reference"});
        for (const auto& b : bounds)
            write_row(os, {b.name, std::to_string(b.samples), fmt(b.constant_half), fmt(b.constant), fmt(b.drift()),
                           fmt(b.reference)});
    });
    return run.finish(pass);
}

// ---------------------------------------------------------------------------
// plot-script
// ---------------------------------------------------------------------------

/// Emits plots.gp for whichever known outputs exist in `dir`.
int cmd_plot_script(const std::string& dir) {
    auto has = [&](const char* f) { return fs::exists(fs::path(dir) / f); };
    std::ostringstream gp;
    gp << "# gnuplot script for the outputs in this directory; run: gnuplot plots.gp\n"
          "set datafile separator ','\nset terminal pngcairo size 900,600\n";
    std::size_t plots = 0;
    auto loglog = [&](const char* csv, const char* png, const char* title) {
        gp << "\nset output '" << png << "'\nset logscale xy\nset title '" << title
           << "'\nset xlabel 'lag'\nset ylabel 'mean squared increment'\n"
              "f(x) = a + b*x\nfit f(x) '" << csv << "' using (log($1)):(log($2)) every ::1 via a, b\n"
              "plot '" << csv << "' using 1:2 every ::1 with points pt 7 title 'data', "
              "exp(a)*x**b title sprintf('slope %.3f', b)\nunset logscale\n";
        ++plots;
    };
    if (has("holder_spatial.csv")) loglog("holder_spatial.csv", "holder_spatial.png", "spatial structure function");
    if (has("holder_temporal.csv")) loglog("holder_temporal.csv", "holder_temporal.png", "temporal structure function");
    if (has("density_mean.matrix")) {
        gp << "\nset datafile separator whitespace\nset output 'density_mean.png'\nset title 'mean occupation density'\n"
              "plot 'density_mean.matrix' matrix with image notitle\nset datafile separator ','\n";
        ++plots;
    }
    if (has("tanaka.csv")) {
        gp << "\nset output 'tanaka.png'\nset logscale x\nset title 'mollified occupation vs eps'\n"
              "set xlabel 'eps'\nset ylabel 'gap to eps = 0 target'\n"
              "plot 'tanaka.csv' using 1:4 every ::1 with linespoints pt 7 notitle\nunset logscale\n";
        ++plots;
    }
    if (has("green.csv")) {
        gp << "\nset output 'green.png'\nset logscale xy\nset title 'Green representation residual'\n"
              "set xlabel 'dt'\nset ylabel 'RMS residual'\n"
              "plot 'green.csv' using 1:2 every ::1 with linespoints pt 7 notitle\nunset logscale\n";
        ++plots;
    }
    const fs::path p = fs::path(dir) / "plots.gp";
    std::ofstream os(p);
    if (!os) throw IoError("cannot open " + p.string() + " for writing");
    os << gp.str();
    os.close();
    if (!os) throw IoError("write failed for " + p.string());
    std::cout << "wrote " << p.string() << " with " << plots << " plot(s)\n";
    return kPass;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Simulation and verification of superprocesses in a random environment and their occupation densities"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);
    app.fallthrough();
    Options opt;
    app.add_option("--config", opt.config_path, "JSON experiment configuration")->check(CLI::ExistingFile);
    app.add_option("--seed", opt.seed, "master seed (overrides the config)");
    app.add_option("--threads", opt.threads, "worker threads for replicate ensembles");
    app.add_option("--out", opt.out_dir, "output directory (overrides SUPEROCC_OUT_DIR and the config)");

    struct Command {
        const char* name;
        const char* help;
        int (*body)(Run&);
    };
    const Command commands[] = {
        {"simulate", "run replicate trajectories and write snapshots and summaries", cmd_simulate},
        {"verify-moments", "compare ensemble moments with moment-formula oracles", cmd_verify_moments},
        {"tanaka", "mollified local time trend and Tanaka identity residuals", cmd_tanaka},
        {"green-rep", "Green-function representation residual under dt halving", cmd_green_rep},
        {"holder", "Hoelder exponents of the occupation density by structure functions", cmd_holder},
        {"kernel-selftest", "kernel identities, inequality constants and sampler covariance", cmd_kernel_selftest},
    };
    for (const auto& c : commands) app.add_subcommand(c.name, c.help);
    std::string plot_dir;
    auto* plot = app.add_subcommand("plot-script", "write a gnuplot script for the outputs in a directory");
    plot->add_option("dir", plot_dir, "directory holding experiment outputs")->required()->check(CLI::ExistingDirectory);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kPass : kUsage;
    }

    try {
        if (plot->parsed()) return cmd_plot_script(plot_dir);
        for (const auto& c : commands) {
            if (!app.got_subcommand(c.name)) continue;
            Run run(c.name, resolve_config(opt));
            return c.body(run);
        }
        return kUsage;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kUsage;
    } catch (const DomainError& e) {
        std::cerr << "invalid parameters: " << e.what() << '\n';
        return kUsage;
    } catch (const UnsupportedFunctionError& e) {
        std::cerr << "invalid parameters: " << e.what() << '\n';
        return kUsage;
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << '\n';
        return kRuntime;
    }
}
