#include "cvt/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace cvt::io {

json to_json(Vec2 p) { return json::array({p.x, p.y}); }

Vec2 vec2_from_json(const json& j) {
    if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
        throw std::invalid_argument("expected a [x, y] pair of numbers");
    return {j[0].get<double>(), j[1].get<double>()};
}

json to_json(const Configuration& c) {
    json arr = json::array();
    for (const Vec2 p : c.points) arr.push_back(to_json(p));
    return arr;
}

Configuration configuration_from_json(const json& j) {
    if (!j.is_array()) throw std::invalid_argument("expected an array of points");
    Configuration c;
    for (const auto& p : j) c.points.push_back(vec2_from_json(p));
    return c;
}

json to_json(const Domain& d) {
    json arr = json::array();
    for (const Vec2 v : d.vertices()) arr.push_back(to_json(v));
    return {{"vertices", arr}, {"area", d.area()}, {"perimeter", d.perimeter()}};
}

json to_json(const EnergyReport& r) {
    json j = {{"centroid_energy", r.centroid_energy},
              {"edge_energy", r.edge_energy},
              {"pair_energy", r.pair_energy},
              {"boundary_energy", r.boundary_energy},
              {"confined", r.confined}};
    j["total_electrostatic"] = r.confined ? json(r.total_electrostatic) : json(nullptr);
    return j;
}

EnergyReport energy_report_from_json(const json& j) {
    EnergyReport r;
    r.centroid_energy = j.at("centroid_energy").get<double>();
    r.edge_energy = j.at("edge_energy").get<double>();
    r.pair_energy = j.at("pair_energy").get<double>();
    r.boundary_energy = j.at("boundary_energy").get<double>();
    r.confined = j.at("confined").get<bool>();
    r.total_electrostatic = j.at("total_electrostatic").is_null() ? 0.0 : j.at("total_electrostatic").get<double>();
    return r;
}

json to_json(const Schedule& s) {
    if (s.kind == ScheduleKind::geometric)
        return {{"kind", "geometric"}, {"t0", s.t0}, {"alpha", s.alpha}, {"steps", s.steps}};
    return {{"kind", "logarithmic"}, {"c", s.c}, {"t0", s.t0}, {"steps", s.steps}};
}

Schedule schedule_from_json(const json& j) {
    const std::string kind = j.at("kind").get<std::string>();
    const auto steps = j.at("steps").get<std::size_t>();
    if (kind == "geometric") {
        const double t0 = j.at("t0").get<double>();
        if (j.contains("final_ratio")) return Schedule::geometric_with_ratio(t0, j.at("final_ratio").get<double>(), steps);
        return Schedule::geometric(t0, j.at("alpha").get<double>(), steps);
    }
    if (kind == "logarithmic") return Schedule::logarithmic(j.at("c").get<double>(), steps);
    throw std::invalid_argument("unknown schedule kind '" + kind + "'");
}

json to_json(const RunRecord& r) {
    json traj = json::array();
    for (const auto& t : r.trajectory) traj.push_back(json::array({t.sweep, t.energy}));
    return {{"schema_version", kSchemaVersion},
            {"seed", r.seed},
            {"stream", r.stream},
            {"schedule", to_json(r.schedule)},
            {"final_config", to_json(r.final_config)},
            {"final_energy", to_json(r.final_energy)},
            {"final_hamiltonian", r.final_hamiltonian},
            {"accept_rate", r.accept_rate},
            {"uphill_accept_rate", r.uphill_accept_rate},
            {"proposal_std_initial", r.proposal_std_initial},
            {"proposal_std_final", r.proposal_std_final},
            {"step_halvings", r.step_halvings},
            {"polish_sweeps", r.polish_sweeps},
            {"trajectory", traj}};
}

RunRecord run_record_from_json(const json& j) {
    RunRecord r;
    r.seed = j.at("seed").get<std::uint64_t>();
    r.stream = j.at("stream").get<std::uint64_t>();
    // Stored alpha/c are exact, so rebuild field by field rather than re-deriving.
    const json& s = j.at("schedule");
    r.schedule.kind = s.at("kind").get<std::string>() == "geometric" ? ScheduleKind::geometric : ScheduleKind::logarithmic;
    r.schedule.t0 = s.at("t0").get<double>();
    r.schedule.steps = s.at("steps").get<std::size_t>();
    if (r.schedule.kind == ScheduleKind::geometric)
        r.schedule.alpha = s.at("alpha").get<double>();
    else
        r.schedule.c = s.at("c").get<double>();
    r.final_config = configuration_from_json(j.at("final_config"));
    r.final_energy = energy_report_from_json(j.at("final_energy"));
    r.final_hamiltonian = j.at("final_hamiltonian").get<double>();
    r.accept_rate = j.at("accept_rate").get<double>();
    r.uphill_accept_rate = j.at("uphill_accept_rate").get<double>();
    r.proposal_std_initial = j.at("proposal_std_initial").get<double>();
    r.proposal_std_final = j.at("proposal_std_final").get<double>();
    r.step_halvings = j.at("step_halvings").get<std::size_t>();
    r.polish_sweeps = j.at("polish_sweeps").get<std::size_t>();
    for (const auto& t : j.at("trajectory")) r.trajectory.push_back({t.at(0).get<std::size_t>(), t.at(1).get<double>()});
    return r;
}

json to_json(const SpectrumReport& s) {
    return {{"eigenvalues", s.eigenvalues},
            {"min_eigenvalue", s.min_eigenvalue},
            {"max_abs_eigenvalue", s.max_abs_eigenvalue},
            {"num_near_zero", s.num_near_zero},
            {"zero_tol", s.zero_tol},
            {"projected_min_eigenvalue", s.projected_min_eigenvalue},
            {"projected_min_eigenvector", s.projected_min_eigenvector}};
}

SpectrumReport spectrum_from_json(const json& j) {
    SpectrumReport s;
    s.eigenvalues = j.at("eigenvalues").get<std::vector<double>>();
    s.min_eigenvalue = j.at("min_eigenvalue").get<double>();
    s.max_abs_eigenvalue = j.at("max_abs_eigenvalue").get<double>();
    s.num_near_zero = j.at("num_near_zero").get<std::size_t>();
    s.zero_tol = j.at("zero_tol").get<double>();
    s.projected_min_eigenvalue = j.at("projected_min_eigenvalue").get<double>();
    s.projected_min_eigenvector = j.at("projected_min_eigenvector").get<std::vector<double>>();
    return s;
}

json to_json(const MinimaAtlas& a) {
    json clusters = json::array();
    for (const auto& c : a.clusters)
        clusters.push_back({{"representative", to_json(c.representative)},
                            {"representative_run", c.representative_run},
                            {"energy_u", c.energy_u},
                            {"energy_centroid", c.energy_centroid},
                            {"gap", c.gap},
                            {"members", c.members},
                            {"trap_timescale", c.trap_timescale ? json(*c.trap_timescale) : json(nullptr)}});
    return {{"global_index", a.global_index}, {"clusters", clusters}};
}

MinimaAtlas atlas_from_json(const json& j) {
    MinimaAtlas a;
    a.global_index = j.at("global_index").get<std::size_t>();
    for (const auto& c : j.at("clusters")) {
        MinimumCluster m;
        m.representative = configuration_from_json(c.at("representative"));
        m.representative_run = c.at("representative_run").get<std::size_t>();
        m.energy_u = c.at("energy_u").get<double>();
        m.energy_centroid = c.at("energy_centroid").get<double>();
        m.gap = c.at("gap").get<double>();
        m.members = c.at("members").get<std::vector<std::size_t>>();
        if (!c.at("trap_timescale").is_null()) m.trap_timescale = c.at("trap_timescale").get<std::size_t>();
        a.clusters.push_back(std::move(m));
    }
    return a;
}

std::string to_string(TilingKind k) { return k == TilingKind::translate ? "translate-tile" : "mirror-tile"; }

json to_json(const LatticeAnchor& a) {
    json pts = json::array();
    for (const Vec2 p : a.points) pts.push_back(to_json(p));
    return {{"layers", a.layers}, {"construction", to_string(a.construction)}, {"points", pts}};
}

LatticeAnchor anchor_from_json(const json& j) {
    LatticeAnchor a;
    a.layers = j.at("layers").get<std::size_t>();
    a.construction = j.at("construction").get<std::string>() == "mirror-tile" ? TilingKind::mirror : TilingKind::translate;
    for (const auto& p : j.at("points")) a.points.push_back(vec2_from_json(p));
    return a;
}

// ---------------------------------------------------------------------------

std::string tessellation_svg(const Domain& domain, const Tessellation& tess, const Configuration& config) {
    double lo_x = std::numeric_limits<double>::infinity(), lo_y = lo_x, hi_x = -lo_x, hi_y = -lo_x;
    for (const Vec2 v : domain.vertices()) {
        lo_x = std::min(lo_x, v.x);
        lo_y = std::min(lo_y, v.y);
        hi_x = std::max(hi_x, v.x);
        hi_y = std::max(hi_y, v.y);
    }
    const double pad = 0.02 * domain.diameter();
    const double scale = 500.0 / domain.diameter();
    const auto X = [&](double x) { return (x - lo_x + pad) * scale; };
    const auto Y = [&](double y) { return (hi_y - y + pad) * scale; };  // SVG y points down
    const double width = (hi_x - lo_x + 2 * pad) * scale;
    const double height = (hi_y - lo_y + 2 * pad) * scale;

    std::ostringstream out;
    out.precision(6);
    out << std::fixed;
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
        << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
    for (std::size_t i = 0; i < tess.size(); ++i) {
        out << "  <polygon class=\"cell\" data-index=\"" << i << "\" fill=\"hsl(" << (i * 137) % 360
            << ",55%,82%)\" stroke=\"#333\" stroke-width=\"1\" points=\"";
        for (std::size_t k = 0; k < tess.cells[i].size(); ++k)
            out << (k ? " " : "") << X(tess.cells[i][k].x) << ',' << Y(tess.cells[i][k].y);
        out << "\"/>\n";
    }
    out << "  <path class=\"domain\" fill=\"none\" stroke=\"#000\" stroke-width=\"2\" d=\"";
    for (std::size_t k = 0; k < domain.num_edges(); ++k)
        out << (k ? " L " : "M ") << X(domain.vertex(k).x) << ' ' << Y(domain.vertex(k).y);
    out << " Z\"/>\n";
    for (std::size_t i = 0; i < config.size(); ++i)
        out << "  <circle class=\"generator\" data-index=\"" << i << "\" cx=\"" << X(config.points[i].x) << "\" cy=\""
            << Y(config.points[i].y) << "\" r=\"4\" fill=\"#b00\"/>\n";
    out << "</svg>\n";
    return out.str();
}

void write_atomic(const std::filesystem::path& path, const std::string& contents) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
        f << contents;
        if (!f.flush()) throw std::runtime_error("failed writing " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream s;
    s << f.rdbuf();
    return s.str();
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

// ---------------------------------------------------------------------------
// Config

namespace {

template <typename T>
T field(const json& obj, const std::string& key, const std::string& path, T fallback) {
    if (!obj.contains(key)) return fallback;
    try {
        return obj.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(path + key, std::string("wrong type (") + e.what() + ")");
    }
}

void reject_unknown(const json& obj, std::initializer_list<const char*> known, const std::string& path) {
    const std::set<std::string> allowed(known.begin(), known.end());
    for (const auto& [key, _] : obj.items())
        if (!allowed.contains(key)) throw ConfigError(path + key, "unknown field");
}

std::size_t positive_size(const json& obj, const std::string& key, const std::string& path, std::size_t fallback) {
    if (obj.contains(key) && !(obj.at(key).is_number_integer() && obj.at(key).get<long long>() >= 0))
        throw ConfigError(path + key, "expected a non-negative integer");
    return field<std::size_t>(obj, key, path, fallback);
}

Domain parse_domain(const json& spec) {
    if (!spec.is_object()) throw ConfigError("domain", "expected an object");
    reject_unknown(spec, {"preset", "k", "radius", "vertices"}, "domain.");
    try {
        if (spec.contains("vertices")) {
            std::vector<Vec2> v;
            for (const auto& p : spec.at("vertices")) v.push_back(vec2_from_json(p));
            return Domain::from_vertices(std::move(v));
        }
        const std::string preset = field<std::string>(spec, "preset", "domain.", "unit-square");
        if (preset == "unit-square") return Domain::unit_square();
        if (preset == "regular-k-gon") {
            if (!spec.contains("k")) throw ConfigError("domain.k", "required for regular-k-gon");
            return Domain::regular_polygon(positive_size(spec, "k", "domain.", 0), field<double>(spec, "radius", "domain.", 1.0));
        }
        throw ConfigError("domain.preset", "unknown preset '" + preset + "'");
    } catch (const Error& e) {
        throw ConfigError("domain", e.what());
    } catch (const std::invalid_argument& e) {
        throw ConfigError("domain.vertices", e.what());
    }
}

}  // namespace

ExperimentConfig parse_config(const json& j) {
    if (!j.is_object()) throw ConfigError("<root>", "expected a JSON object");
    reject_unknown(j,
                   {"schema_version", "domain", "n_points", "initial", "schedules", "seed", "seeds_per_schedule",
                    "quadrature", "proposal_std", "adaptive_step", "record_every", "lloyd", "cluster", "recovery",
                    "spectrum_rel_tol", "output_dir", "jobs"},
                   "");
    ExperimentConfig cfg;
    if (!j.contains("schema_version")) throw ConfigError("schema_version", "required");
    cfg.schema_version = field<int>(j, "schema_version", "", 0);
    if (cfg.schema_version != kSchemaVersion)
        throw ConfigError("schema_version", "unsupported version " + std::to_string(cfg.schema_version));

    cfg.domain_spec = j.contains("domain") ? j.at("domain") : json{{"preset", "unit-square"}};
    cfg.domain = parse_domain(cfg.domain_spec);

    if (j.contains("initial")) {
        try {
            cfg.initial = configuration_from_json(j.at("initial"));
            validate(cfg.domain, *cfg.initial);
        } catch (const std::invalid_argument& e) {
            throw ConfigError("initial", e.what());
        } catch (const Error& e) {
            throw ConfigError("initial", e.what());
        }
    }
    cfg.n_points = positive_size(j, "n_points", "", cfg.initial ? cfg.initial->size() : 0);
    if (cfg.initial && cfg.initial->size() != cfg.n_points)
        throw ConfigError("n_points", "does not match the size of 'initial'");
    if (cfg.n_points == 0) throw ConfigError("n_points", "must be >= 1 (or give 'initial')");

    if (j.contains("schedules")) {
        const json& list = j.at("schedules");
        if (!list.is_array()) throw ConfigError("schedules", "expected an array");
        for (std::size_t k = 0; k < list.size(); ++k) {
            const std::string path = "schedules[" + std::to_string(k) + "]";
            try {
                if (list[k].contains("steps") && list[k].at("steps").is_number_integer() &&
                    list[k].at("steps").get<long long>() <= 0)
                    throw ConfigError(path + ".steps", "must be >= 1");
                Schedule s = schedule_from_json(list[k]);
                s.validate();
                cfg.schedules.push_back(s);
            } catch (const ConfigError&) {
                throw;
            } catch (const std::exception& e) {
                throw ConfigError(path, e.what());
            }
        }
    }

    if (j.contains("seed") && !(j.at("seed").is_number_unsigned() ||
                                (j.at("seed").is_number_integer() && j.at("seed").get<std::int64_t>() >= 0)))
        throw ConfigError("seed", "expected an unsigned integer");
    cfg.seed = field<std::uint64_t>(j, "seed", "", 0);
    cfg.seeds_per_schedule = positive_size(j, "seeds_per_schedule", "", 1);
    if (cfg.seeds_per_schedule == 0) throw ConfigError("seeds_per_schedule", "must be >= 1");
    cfg.quadrature = positive_size(j, "quadrature", "", Quadrature::kDefaultPointsPerEdge);
    if (cfg.quadrature < 2) throw ConfigError("quadrature", "must be >= 2");
    cfg.proposal_std_rel = field<double>(j, "proposal_std", "", 0.05);
    if (!(cfg.proposal_std_rel > 0.0 && cfg.proposal_std_rel < 1.0))
        throw ConfigError("proposal_std", "must lie in (0, 1) as a fraction of the diameter");
    cfg.adaptive_step = field<bool>(j, "adaptive_step", "", true);
    cfg.record_every = positive_size(j, "record_every", "", 0);
    cfg.spectrum_rel_tol = field<double>(j, "spectrum_rel_tol", "", 1e-5);
    cfg.output_dir = field<std::string>(j, "output_dir", "", "out");
    cfg.jobs = positive_size(j, "jobs", "", 1);
    if (cfg.jobs == 0) throw ConfigError("jobs", "must be >= 1");

    if (j.contains("lloyd")) {
        const json& l = j.at("lloyd");
        reject_unknown(l, {"tol", "max_iter"}, "lloyd.");
        cfg.lloyd_tol = field<double>(l, "tol", "lloyd.", 1e-10);
        if (!(cfg.lloyd_tol > 0.0)) throw ConfigError("lloyd.tol", "must be positive");
        cfg.max_iter = positive_size(l, "max_iter", "lloyd.", 10000);
    }
    if (j.contains("cluster")) {
        const json& c = j.at("cluster");
        reject_unknown(c, {"dist_tol", "energy_tol"}, "cluster.");
        cfg.cluster.dist_tol = field<double>(c, "dist_tol", "cluster.", 1e-2);
        cfg.cluster.energy_tol = field<double>(c, "energy_tol", "cluster.", 1e-3);
        if (!(cfg.cluster.dist_tol >= 0.0)) throw ConfigError("cluster.dist_tol", "must be >= 0");
        if (!(cfg.cluster.energy_tol >= 0.0)) throw ConfigError("cluster.energy_tol", "must be >= 0");
    }
    cfg.recovery.tolerances = cfg.cluster;
    if (j.contains("recovery")) {
        const json& r = j.at("recovery");
        reject_unknown(r, {"max_layers", "trials", "required", "perturbation", "proposal_std", "construction", "schedule"},
                       "recovery.");
        cfg.recovery.max_layers = positive_size(r, "max_layers", "recovery.", 3);
        if (cfg.recovery.max_layers == 0) throw ConfigError("recovery.max_layers", "must be >= 1");
        cfg.recovery.trials = positive_size(r, "trials", "recovery.", 10);
        cfg.recovery.required = positive_size(r, "required", "recovery.", 8);
        if (cfg.recovery.required > cfg.recovery.trials) throw ConfigError("recovery.required", "exceeds trials");
        cfg.recovery.perturbation_rel = field<double>(r, "perturbation", "recovery.", 0.05);
        cfg.recovery.proposal_std_rel = field<double>(r, "proposal_std", "recovery.", 0.01);
        if (!(cfg.recovery.proposal_std_rel > 0.0 && cfg.recovery.proposal_std_rel < 1.0))
            throw ConfigError("recovery.proposal_std", "must lie in (0, 1)");
        const std::string kind = field<std::string>(r, "construction", "recovery.", "translate-tile");
        if (kind == "translate-tile")
            cfg.recovery.construction = TilingKind::translate;
        else if (kind == "mirror-tile")
            cfg.recovery.construction = TilingKind::mirror;
        else
            throw ConfigError("recovery.construction", "expected translate-tile or mirror-tile");
        if (r.contains("schedule")) {
            try {
                cfg.recovery.schedule = schedule_from_json(r.at("schedule"));
                cfg.recovery.schedule.validate();
            } catch (const std::exception& e) {
                throw ConfigError("recovery.schedule", e.what());
            }
        }
    }
    cfg.recovery.seed = cfg.seed;
    cfg.recovery.quadrature = cfg.quadrature;
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::string text;
    try {
        text = read_file(path);
    } catch (const std::exception& e) {
        throw ConfigError("<file>", e.what());
    }
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError("<root>", std::string("malformed JSON: ") + e.what());
    }
    return parse_config(j);
}

}  // namespace cvt::io
