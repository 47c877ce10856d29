#include "cvt/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>

#include "cvt/energy.hpp"
#include "cvt/laam.hpp"
#include "cvt/optimize.hpp"

namespace cvt::cli {

using io::json;
namespace fs = std::filesystem;

io::ExperimentConfig prepare(const fs::path& config_path, const Overrides& overrides) {
    io::ExperimentConfig cfg = io::load_config(config_path);
    if (overrides.out) cfg.output_dir = *overrides.out;
    if (overrides.seed) {
        cfg.seed = *overrides.seed;
        cfg.recovery.seed = *overrides.seed;
    }
    if (overrides.jobs) {
        if (*overrides.jobs == 0) throw io::ConfigError("--jobs", "must be >= 1");
        cfg.jobs = *overrides.jobs;
    }
    if (overrides.quadrature) {
        if (*overrides.quadrature < 2) throw io::ConfigError("--quadrature", "must be >= 2");
        cfg.quadrature = *overrides.quadrature;
        cfg.recovery.quadrature = *overrides.quadrature;
    }
    return cfg;
}

namespace {

Configuration start_configuration(const io::ExperimentConfig& cfg) {
    return cfg.initial ? *cfg.initial : sweep_start(cfg.domain, cfg.n_points, cfg.seed);
}

SweepSettings sweep_settings(const io::ExperimentConfig& cfg, bool polish) {
    SweepSettings s;
    s.base_seed = cfg.seed;
    s.proposal_std_rel = cfg.proposal_std_rel;
    s.quadrature = cfg.quadrature;
    s.jobs = cfg.jobs;
    s.polish = polish;
    s.adaptive_step = cfg.adaptive_step;
    s.record_every = cfg.record_every;
    s.start = cfg.initial;
    return s;
}

json header(const io::ExperimentConfig& cfg) {
    return {{"schema_version", io::kSchemaVersion},
            {"domain", io::to_json(cfg.domain)},
            {"n_points", cfg.n_points},
            {"seed", cfg.seed},
            {"quadrature", cfg.quadrature}};
}

void require_schedules(const io::ExperimentConfig& cfg) {
    if (cfg.schedules.empty()) throw io::ConfigError("schedules", "at least one schedule is required");
}

std::string run_name(std::size_t schedule, std::uint64_t seed) {
    return "run_s" + std::to_string(schedule) + "_seed" + std::to_string(seed) + ".json";
}

std::string fmt(double v) {
    std::ostringstream s;
    s << std::setprecision(std::numeric_limits<double>::max_digits10) << v;
    return s.str();
}

}  // namespace

int cmd_lloyd(const io::ExperimentConfig& cfg, std::ostream& log, std::ostream& err) {
    const fs::path out = cfg.output_dir;
    const Configuration start = start_configuration(cfg);
    const LloydResult result = lloyd_run(cfg.domain, start, cfg.lloyd_tol, cfg.max_iter);
    const EnergyReport report = electrostatic_energy(result.config, cfg.domain, Quadrature(cfg.quadrature));

    json doc = header(cfg);
    doc["initial"] = io::to_json(start);
    doc["config"] = io::to_json(result.config);
    doc["energy"] = io::to_json(report);
    doc["residuals"] = result.residuals;
    doc["centroid_energies"] = result.energies;
    doc["iterations"] = result.iterations;
    doc["converged"] = result.converged;
    io::write_atomic(out / "cvt.json", io::dump(doc));
    io::write_atomic(out / "cvt.svg", io::tessellation_svg(cfg.domain, tessellate(cfg.domain, result.config), result.config));

    log << "lloyd: " << result.iterations << " iterations, E = " << fmt(report.centroid_energy) << '\n';
    if (!result.converged) {
        err << "lloyd: residual " << (result.residuals.empty() ? 0.0 : result.residuals.back()) << " above tol "
            << cfg.lloyd_tol << " after max_iter = " << cfg.max_iter << '\n';
        return kNotConverged;
    }
    return kOk;
}

int cmd_anneal(const io::ExperimentConfig& cfg, std::ostream& log, std::ostream&) {
    require_schedules(cfg);
    const fs::path out = cfg.output_dir;
    const std::vector<RunRecord> records =
        sweep_rates(cfg.domain, cfg.n_points, cfg.schedules, cfg.seeds_per_schedule, sweep_settings(cfg, false));

    std::ostringstream csv;
    csv << "schedule,seed,sweep,energy,running_min\n";
    for (std::size_t r = 0; r < records.size(); ++r) {
        const RunRecord& rec = records[r];
        const std::size_t s = r / cfg.seeds_per_schedule;
        io::write_atomic(out / run_name(s, rec.seed), io::dump(io::to_json(rec)));
        double running_min = std::numeric_limits<double>::infinity();
        for (const auto& point : rec.trajectory) {
            running_min = std::min(running_min, point.energy);
            csv << s << ',' << rec.seed << ',' << point.sweep << ',' << fmt(point.energy) << ',' << fmt(running_min)
                << '\n';
        }
        log << "anneal: schedule " << s << " seed " << rec.seed << " U = " << fmt(rec.final_hamiltonian)
            << " accept " << rec.accept_rate << '\n';
    }
    io::write_atomic(out / "trajectory.csv", csv.str());
    return kOk;
}

int cmd_laam(const io::ExperimentConfig& cfg, std::ostream& log, std::ostream& err) {
    require_schedules(cfg);
    const fs::path out = cfg.output_dir;

    // A repeated schedule reruns identical chains, so dropping it changes nothing.
    std::vector<Schedule> schedules;
    for (const Schedule& s : cfg.schedules)
        if (std::find(schedules.begin(), schedules.end(), s) == schedules.end()) schedules.push_back(s);
    if (schedules.size() != cfg.schedules.size())
        log << "laam: dropped " << cfg.schedules.size() - schedules.size() << " duplicate schedule(s)\n";

    const std::vector<RunRecord> records =
        sweep_rates(cfg.domain, cfg.n_points, schedules, cfg.seeds_per_schedule, sweep_settings(cfg, true));
    const MinimaAtlas atlas = cluster_minima(records, cfg.cluster);
    log << "laam: " << records.size() << " runs, " << atlas.clusters.size() << " cluster(s)\n";

    json runs = json::array();
    for (std::size_t r = 0; r < records.size(); ++r) {
        std::optional<std::size_t> owner;
        for (std::size_t k = 0; k < atlas.clusters.size() && !owner; ++k)
            if (std::binary_search(atlas.clusters[k].members.begin(), atlas.clusters[k].members.end(), r)) owner = k;
        runs.push_back({{"schedule", r / cfg.seeds_per_schedule},
                        {"seed", records[r].seed},
                        {"final_hamiltonian", records[r].final_hamiltonian},
                        {"cluster", owner ? json(*owner) : json(nullptr)}});
    }

    bool all_passed = true;
    json recovery = json::array();
    for (std::size_t k = 0; k < atlas.clusters.size(); ++k) {
        const RecoveryResult rr = minimal_anchor(cfg.domain, atlas, k, cfg.recovery);
        all_passed = all_passed && rr.passed;
        recovery.push_back({{"cluster", rr.cluster},
                            {"layers", rr.layers},
                            {"successes", rr.successes},
                            {"trials", rr.trials},
                            {"passed", rr.passed},
                            {"distances", rr.distances},
                            {"anchor", io::to_json(rr.anchor)}});
        log << "laam: cluster " << k << " U = " << fmt(atlas.clusters[k].energy_u) << " recovery " << rr.successes << '/'
            << rr.trials << " at layers " << rr.layers << (rr.passed ? "" : " FAILED") << '\n';
        const MinimumCluster& c = atlas.clusters[k];
        io::write_atomic(out / ("cluster_" + std::to_string(k) + ".svg"),
                         io::tessellation_svg(cfg.domain, tessellate(cfg.domain, c.representative), c.representative));
    }

    json doc = header(cfg);
    doc["schedules"] = json::array();
    for (const Schedule& s : schedules) doc["schedules"].push_back(io::to_json(s));
    doc["seeds_per_schedule"] = cfg.seeds_per_schedule;
    doc["atlas"] = io::to_json(atlas);
    doc["runs"] = runs;
    doc["recovery"] = recovery;
    doc["recovery_passed"] = all_passed;
    if (atlas.clusters.size() >= 2) {
        const GapTimescaleTable table = gap_timescale_table(atlas);
        json rows = json::array();
        for (const auto& row : table.rows)
            rows.push_back({{"cluster", row.cluster},
                            {"gap", row.gap},
                            {"trap_timescale", row.trap_timescale ? json(*row.trap_timescale) : json(nullptr)}});
        doc["gap_timescale"] = {{"rows", rows}, {"spearman", table.spearman ? json(*table.spearman) : json(nullptr)}};
    } else {
        doc["gap_timescale"] = nullptr;
    }
    io::write_atomic(out / "atlas.json", io::dump(doc));

    if (!all_passed) {
        err << "laam: anchored recovery failed for at least one cluster at max_layers = " << cfg.recovery.max_layers
            << '\n';
        return kRecoveryFailure;
    }
    return kOk;
}

int cmd_verify(const io::ExperimentConfig& cfg, std::ostream& log, std::ostream& err) {
    const fs::path out = cfg.output_dir;
    const LloydResult lloyd = lloyd_run(cfg.domain, start_configuration(cfg), cfg.lloyd_tol, cfg.max_iter);
    if (!lloyd.converged) {
        err << "verify: Lloyd did not reach tol " << cfg.lloyd_tol << " in " << cfg.max_iter << " iterations\n";
        return kNotConverged;
    }
    const Configuration& cvt = lloyd.config;
    const Tessellation tess = tessellate(cfg.domain, cvt);
    const double h = default_fd_step(cfg.domain);
    const Quadrature quad(cfg.quadrature);
    const double near_zero = kNearZeroRelTol;

    struct Entry {
        const char* name;
        SpectrumReport report;
    };
    const std::vector<Entry> checked = {
        {"centroid", numeric_hessian(centroid_functional(cfg.domain), cfg.domain, cvt, h, near_zero)},
        {"edge", numeric_hessian(frozen_edge_functional(tess), cfg.domain, cvt, h, near_zero)},
        {"electrostatic", numeric_hessian(electrostatic_functional(cfg.domain, quad), cfg.domain, cvt, h, near_zero)},
    };
    const SpectrumReport retessellated = numeric_hessian(edge_functional(cfg.domain), cfg.domain, cvt, h, near_zero);

    json doc = header(cfg);
    doc["config"] = io::to_json(cvt);
    doc["fd_step"] = h;
    doc["near_zero_rel"] = near_zero;
    doc["spectrum_rel_tol"] = cfg.spectrum_rel_tol;
    bool ok = true;
    json spectra = json::object();
    for (const Entry& e : checked) {
        const bool psd = projected_psd(e.report, cfg.spectrum_rel_tol);
        ok = ok && psd;
        json s = io::to_json(e.report);
        s["symmetry_modes"] = e.report.num_near_zero;
        s["passed"] = psd;
        spectra[e.name] = s;
        log << "verify: " << e.name << " projected min " << fmt(e.report.projected_min_eigenvalue) << " / max "
            << fmt(e.report.max_abs_eigenvalue) << ", " << e.report.num_near_zero << " symmetry mode(s)"
            << (psd ? "" : "  VIOLATION") << '\n';
        if (!psd) {
            err << "verify: " << e.name << " Hessian has projected eigenvalue " << fmt(e.report.projected_min_eigenvalue)
                << " < " << -cfg.spectrum_rel_tol << " * " << fmt(e.report.max_abs_eigenvalue) << "; eigenvector:";
            for (const double v : e.report.projected_min_eigenvector) err << ' ' << fmt(v);
            err << '\n';
        }
    }
    spectra["edge_retessellated"] = io::to_json(retessellated);
    doc["spectra"] = spectra;
    doc["passed"] = ok;
    io::write_atomic(out / "spectra.json", io::dump(doc));
    return ok ? kOk : kSpectrumViolation;
}

int cmd_energy(const io::ExperimentConfig& cfg, std::ostream& log, std::ostream&) {
    if (!cfg.initial) throw io::ConfigError("initial", "the energy command needs an explicit configuration");
    const EnergyReport report = electrostatic_energy(*cfg.initial, cfg.domain, Quadrature(cfg.quadrature));
    json doc = header(cfg);
    doc["config"] = io::to_json(*cfg.initial);
    doc["energy"] = io::to_json(report);
    io::write_atomic(fs::path(cfg.output_dir) / "energy.json", io::dump(doc));
    log << "energy: U = " << fmt(report.total_electrostatic) << " E = " << fmt(report.centroid_energy)
        << " E~ = " << fmt(report.edge_energy) << '\n';
    return kOk;
}

int run(int argc, const char* const* argv, std::ostream& log, std::ostream& err) {
    CLI::App app{"Centroidal Voronoi tessellations as electrostatic minimizers"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out;
    std::uint64_t seed = 0;
    std::size_t jobs = 0;
    std::size_t quadrature = 0;
    app.add_option("--config", config_path, "experiment config (JSON)")->required();
    auto* out_opt = app.add_option("--out", out, "output directory");
    auto* seed_opt = app.add_option("--seed", seed, "base seed");
    auto* jobs_opt = app.add_option("--jobs", jobs, "concurrent runs");
    auto* quad_opt = app.add_option("--quadrature", quadrature, "Gauss-Legendre points per boundary edge");

    using Command = int (*)(const io::ExperimentConfig&, std::ostream&, std::ostream&);
    const std::vector<std::tuple<const char*, const char*, Command>> commands = {
        {"lloyd", "run Lloyd iteration to a CVT", cmd_lloyd},
        {"anneal", "Metropolis annealing, one record per schedule and seed", cmd_anneal},
        {"laam", "rate sweep, minima atlas and anchored recovery", cmd_laam},
        {"verify", "Hessian spectra of E, E~ and U at a Lloyd CVT", cmd_verify},
        {"energy", "energy report for the configured points", cmd_energy},
    };
    for (const auto& [name, help, fn] : commands) app.add_subcommand(name, help)->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        std::ostringstream o, r;
        const int code = app.exit(e, o, r);
        log << o.str();
        err << r.str();
        return code == 0 ? kOk : kConfigError;
    }

    Overrides ov;
    if (*out_opt) ov.out = out;
    if (*seed_opt) ov.seed = seed;
    if (*jobs_opt) ov.jobs = jobs;
    if (*quad_opt) ov.quadrature = quadrature;

    try {
        const io::ExperimentConfig cfg = prepare(config_path, ov);
        for (const auto& [name, help, fn] : commands)
            if (app.got_subcommand(name)) return fn(cfg, log, err);
    } catch (const io::ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return kConfigError;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return kConfigError;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kConfigError;
    }
    return kConfigError;
}

}  // namespace cvt::cli
