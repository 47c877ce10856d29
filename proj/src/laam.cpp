#include "cvt/laam.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <numeric>
#include <string>
#include <thread>

namespace cvt {

// ---------------------------------------------------------------------------
// Signatures and clustering

Signature make_signature(const Configuration& config, double energy_u) {
    Signature sig;
    sig.energy_u = energy_u;
    const auto& x = config.points;
    sig.sorted_pair_distances.reserve(x.size() * (x.size() - (x.empty() ? 0 : 1)) / 2);
    for (std::size_t i = 0; i < x.size(); ++i)
        for (std::size_t j = i + 1; j < x.size(); ++j) sig.sorted_pair_distances.push_back(distance(x[i], x[j]));
    std::sort(sig.sorted_pair_distances.begin(), sig.sorted_pair_distances.end());
    return sig;
}

double signature_distance(const Signature& a, const Signature& b) {
    const auto& da = a.sorted_pair_distances;
    const auto& db = b.sorted_pair_distances;
    if (da.size() != db.size()) return std::numeric_limits<double>::infinity();
    if (da.empty()) return 0.0;
    const double mean_a = std::accumulate(da.begin(), da.end(), 0.0) / static_cast<double>(da.size());
    const double mean_b = std::accumulate(db.begin(), db.end(), 0.0) / static_cast<double>(db.size());
    double worst = 0.0;
    for (std::size_t k = 0; k < da.size(); ++k) worst = std::max(worst, std::abs(da[k] / mean_a - db[k] / mean_b));
    return worst;
}

bool same_minimum(const Signature& a, const Signature& b, const ClusterTolerances& tol) {
    if (signature_distance(a, b) > tol.dist_tol) return false;
    const double scale = std::max(std::abs(a.energy_u), std::abs(b.energy_u));
    return std::abs(a.energy_u - b.energy_u) <= tol.energy_tol * scale;
}

namespace {

struct DisjointSets {
    std::vector<std::size_t> parent;
    explicit DisjointSets(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), std::size_t{0}); }
    std::size_t find(std::size_t v) {
        while (parent[v] != v) v = parent[v] = parent[parent[v]];
        return v;
    }
    void unite(std::size_t a, std::size_t b) {
        a = find(a);
        b = find(b);
        if (a != b) parent[std::max(a, b)] = std::min(a, b);
    }
};

}  // namespace

MinimaAtlas cluster_minima(std::span<const RunRecord> records, const ClusterTolerances& tol) {
    if (records.empty()) throw Error(Errc::EmptyInput, "no run records to cluster");
    const std::size_t n = records.size();
    std::vector<Signature> sigs;
    sigs.reserve(n);
    for (const auto& r : records) {
        if (!r.final_energy.confined) throw Error(Errc::PointOutsideDomain, "run record has an exterior generator");
        sigs.push_back(make_signature(r.final_config, r.final_energy.total_electrostatic));
    }

    DisjointSets sets(n);
    for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = a + 1; b < n; ++b)
            if (same_minimum(sigs[a], sigs[b], tol)) sets.unite(a, b);

    std::map<std::size_t, std::vector<std::size_t>> groups;
    for (std::size_t r = 0; r < n; ++r) groups[sets.find(r)].push_back(r);

    // Runs per sweep count, for trap frequencies.
    std::map<std::size_t, std::size_t> runs_per_steps;
    for (const auto& r : records) ++runs_per_steps[r.schedule.steps];

    MinimaAtlas atlas;
    for (const auto& [root, members] : groups) {
        MinimumCluster c;
        c.members = members;
        std::size_t best = members.front();
        for (const std::size_t m : members) {
            const double u = sigs[m].energy_u;
            if (u < sigs[best].energy_u) best = m;
        }
        c.representative_run = best;
        c.representative = records[best].final_config;
        c.energy_u = sigs[best].energy_u;
        c.energy_centroid = records[best].final_energy.centroid_energy;

        std::map<std::size_t, std::size_t> hits;
        for (const std::size_t m : members) ++hits[records[m].schedule.steps];
        for (const auto& [steps, total] : runs_per_steps) {
            const auto it = hits.find(steps);
            const std::size_t count = it == hits.end() ? 0 : it->second;
            if (static_cast<double>(count) >= kTrapFrequency * static_cast<double>(total)) {
                c.trap_timescale = steps;
                break;
            }
        }
        atlas.clusters.push_back(std::move(c));
    }

    std::sort(atlas.clusters.begin(), atlas.clusters.end(), [](const MinimumCluster& a, const MinimumCluster& b) {
        if (a.energy_u != b.energy_u) return a.energy_u < b.energy_u;
        return a.members.front() < b.members.front();
    });
    atlas.global_index = 0;
    const double global_u = atlas.clusters.front().energy_u;
    for (auto& c : atlas.clusters) c.gap = c.energy_u - global_u;
    return atlas;
}

std::optional<std::size_t> classify(const MinimaAtlas& atlas, const Signature& sig, const ClusterTolerances& tol) {
    std::optional<std::size_t> best;
    double best_dist = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < atlas.clusters.size(); ++k) {
        const auto& c = atlas.clusters[k];
        const Signature rep = make_signature(c.representative, c.energy_u);
        if (!same_minimum(rep, sig, tol)) continue;
        const double d = signature_distance(rep, sig);
        if (d < best_dist) {
            best_dist = d;
            best = k;
        }
    }
    return best;
}

// ---------------------------------------------------------------------------
// Lattice anchors

namespace {

// x ↦ M x + t
struct Isometry {
    double m00 = 1, m01 = 0, m10 = 0, m11 = 1;
    Vec2 t;

    Vec2 operator()(Vec2 p) const { return {m00 * p.x + m01 * p.y + t.x, m10 * p.x + m11 * p.y + t.y}; }

    // (*this) ∘ other
    Isometry then_after(const Isometry& o) const {
        Isometry r;
        r.m00 = m00 * o.m00 + m01 * o.m10;
        r.m01 = m00 * o.m01 + m01 * o.m11;
        r.m10 = m10 * o.m00 + m11 * o.m10;
        r.m11 = m10 * o.m01 + m11 * o.m11;
        r.t = (*this)(o.t);
        return r;
    }

    static Isometry reflection(Vec2 a, Vec2 b) {
        const Vec2 u = (b - a) / distance(a, b);
        Isometry r;
        r.m00 = 2 * u.x * u.x - 1;
        r.m01 = 2 * u.x * u.y;
        r.m10 = r.m01;
        r.m11 = 2 * u.y * u.y - 1;
        const Vec2 ra{r.m00 * a.x + r.m01 * a.y, r.m10 * a.x + r.m11 * a.y};
        r.t = a - ra;
        return r;
    }
};

void push_unique(std::vector<Vec2>& out, Vec2 p, double tol) {
    for (const Vec2 q : out)
        if (distance(p, q) <= tol) return;
    out.push_back(p);
}

bool is_parallelogram(const Domain& domain) {
    if (domain.num_edges() != 4) return false;
    const auto& v = domain.vertices();
    return distance(v[0] + v[2], v[1] + v[3]) <= 1e-12 * domain.diameter();
}

}  // namespace

LatticeAnchor build_anchor(const Configuration& config, const Domain& domain, std::size_t layers,
                           TilingKind construction) {
    if (layers == 0) throw Error(Errc::InvalidAnchor, "an anchor needs at least one layer");
    if (config.size() == 0) throw Error(Errc::NoGenerators, "cannot anchor an empty configuration");

    const double tol = 1e-12 * domain.diameter();
    LatticeAnchor anchor;
    anchor.layers = layers;
    anchor.construction = construction;
    const auto L = static_cast<long>(layers);

    if (construction == TilingKind::translate) {
        if (!is_parallelogram(domain))
            throw Error(Errc::UnsupportedDomainForTiling, "translate tiling requires a parallelogram domain");
        const auto& v = domain.vertices();
        const Vec2 e1 = v[1] - v[0];
        const Vec2 e2 = v[3] - v[0];
        for (long a = -L; a <= L; ++a)
            for (long b = -L; b <= L; ++b) {
                if (a == 0 && b == 0) continue;
                const Vec2 shift = static_cast<double>(a) * e1 + static_cast<double>(b) * e2;
                for (const Vec2 p : config.points) anchor.points.push_back(p + shift);
            }
    } else {
        // Ring generators: reflection through each edge, and the two products
        // of reflections through the edges meeting at each corner.
        const std::size_t m = domain.num_edges();
        std::vector<Isometry> moves;
        for (std::size_t k = 0; k < m; ++k) {
            const Isometry r1 = Isometry::reflection(domain.vertex(k), domain.vertex(k + 1));
            const Isometry r2 = Isometry::reflection(domain.vertex(k + 1), domain.vertex(k + 2));
            moves.push_back(r1);
            moves.push_back(r2.then_after(r1));
            moves.push_back(r1.then_after(r2));
        }
        const Vec2 c = domain.centroid();
        const Vec2 v0 = domain.vertex(0);
        const auto same_tile = [&](const Isometry& g, const Isometry& h) {
            return distance(g(c), h(c)) <= tol && distance(g(v0), h(v0)) <= tol;
        };
        std::vector<Isometry> tiles{Isometry{}};
        std::vector<Isometry> frontier{Isometry{}};
        for (std::size_t level = 0; level < layers; ++level) {
            std::vector<Isometry> next;
            for (const auto& g : frontier)
                for (const auto& mv : moves) {
                    const Isometry h = g.then_after(mv);
                    if (std::any_of(tiles.begin(), tiles.end(), [&](const Isometry& t) { return same_tile(t, h); }))
                        continue;
                    tiles.push_back(h);
                    next.push_back(h);
                }
            frontier = std::move(next);
        }
        for (std::size_t k = 1; k < tiles.size(); ++k)
            for (const Vec2 p : config.points) {
                const Vec2 q = tiles[k](p);
                if (domain.signed_distance(q) < -tol) push_unique(anchor.points, q, tol);
            }
    }

    for (const Vec2 a : anchor.points)
        if (domain.signed_distance(a) >= 0.0) throw std::logic_error("anchor point inside the domain");
    return anchor;
}

RunRecord anchored_optimize(const Domain& domain, const LatticeAnchor& anchor, const Configuration& config0,
                            const Schedule& schedule, const AnnealParams& params) {
    if (config0.size() == 0) throw Error(Errc::NoGenerators, "anchored optimization needs generators");
    if (anchor.points.empty()) throw Error(Errc::InvalidAnchor, "anchor is empty");
    for (const Vec2 a : anchor.points)
        if (domain.signed_distance(a) >= 0.0) throw Error(Errc::InvalidAnchor, "anchor point not outside the domain");
    RunRecord record = anneal(domain, config0, schedule, params, anchor.points);
    polish_record(record, domain, params, anchor.points);
    return record;
}

// ---------------------------------------------------------------------------
// Rate sweep

Configuration sweep_start(const Domain& domain, std::size_t n_points, std::uint64_t seed) {
    CounterRng rng(seed, 1);
    return random_configuration(domain, n_points, rng);
}

std::vector<RunRecord> sweep_rates(const Domain& domain, std::size_t n_points, std::span<const Schedule> schedules,
                                   std::size_t seeds_per_schedule, const SweepSettings& settings) {
    if (schedules.empty()) throw Error(Errc::EmptyInput, "no schedules to sweep");
    if (n_points == 0) throw Error(Errc::NoGenerators, "sweep needs at least one generator");
    if (settings.start && settings.start->size() != n_points)
        throw Error(Errc::MismatchedSizes, "start configuration size differs from n_points");
    for (const auto& s : schedules) s.validate();

    const std::size_t total = schedules.size() * seeds_per_schedule;
    std::vector<RunRecord> records(total);
    const auto run_one = [&](std::size_t idx) {
        const Schedule& schedule = schedules[idx / seeds_per_schedule];
        const std::uint64_t seed = settings.base_seed + idx % seeds_per_schedule;
        AnnealParams params = AnnealParams::defaults_for(domain, seed, 0);
        params.proposal_std = settings.proposal_std_rel * domain.diameter();
        params.quadrature = settings.quadrature;
        params.adaptive_step = settings.adaptive_step;
        params.record_every =
            settings.record_every ? settings.record_every : std::max<std::size_t>(1, schedule.steps / 100);
        const Configuration start = settings.start ? *settings.start : sweep_start(domain, n_points, seed);
        RunRecord rec = anneal(domain, start, schedule, params);
        if (settings.polish) polish_record(rec, domain, params, {}, settings.polish_options);
        records[idx] = std::move(rec);
    };

    const std::size_t jobs = std::clamp<std::size_t>(settings.jobs, 1, std::max<std::size_t>(total, 1));
    if (jobs == 1) {
        for (std::size_t idx = 0; idx < total; ++idx) run_one(idx);
        return records;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(jobs);
    std::vector<std::thread> workers;
    for (std::size_t w = 0; w < jobs; ++w)
        workers.emplace_back([&, w] {
            try {
                for (std::size_t idx = next++; idx < total; idx = next++) run_one(idx);
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    for (auto& t : workers) t.join();
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
    return records;
}

// ---------------------------------------------------------------------------
// Gap/timescale

std::optional<double> spearman_correlation(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.size() < 2) return std::nullopt;
    const auto ranks = [](std::span<const double> v) {
        std::vector<std::size_t> idx(v.size());
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        std::stable_sort(idx.begin(), idx.end(), [&](std::size_t x, std::size_t y) { return v[x] < v[y]; });
        std::vector<double> r(v.size());
        for (std::size_t s = 0; s < idx.size();) {
            std::size_t e = s;
            while (e + 1 < idx.size() && v[idx[e + 1]] == v[idx[s]]) ++e;
            const double avg = 0.5 * static_cast<double>(s + e) + 1.0;
            for (std::size_t k = s; k <= e; ++k) r[idx[k]] = avg;
            s = e + 1;
        }
        return r;
    };
    const std::vector<double> ra = ranks(a);
    const std::vector<double> rb = ranks(b);
    const double n = static_cast<double>(a.size());
    const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n;
    const double mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t k = 0; k < ra.size(); ++k) {
        sab += (ra[k] - ma) * (rb[k] - mb);
        saa += (ra[k] - ma) * (ra[k] - ma);
        sbb += (rb[k] - mb) * (rb[k] - mb);
    }
    if (saa == 0.0 || sbb == 0.0) return std::nullopt;
    return sab / std::sqrt(saa * sbb);
}

GapTimescaleTable gap_timescale_table(const MinimaAtlas& atlas) {
    if (atlas.clusters.size() < 2) throw Error(Errc::TooFewClusters, "gap/timescale table needs at least two clusters");
    GapTimescaleTable table;
    for (std::size_t k = 0; k < atlas.clusters.size(); ++k)
        table.rows.push_back({k, atlas.clusters[k].gap, atlas.clusters[k].trap_timescale});
    std::stable_sort(table.rows.begin(), table.rows.end(), [&](const GapTimescaleRow& x, const GapTimescaleRow& y) {
        if (x.cluster == atlas.global_index) return y.cluster != atlas.global_index;
        if (y.cluster == atlas.global_index) return false;
        return x.gap < y.gap;
    });
    std::vector<double> gaps, rates;
    for (const auto& row : table.rows) {
        if (row.cluster == atlas.global_index) continue;
        gaps.push_back(row.gap);
        rates.push_back(row.trap_timescale ? 1.0 / static_cast<double>(*row.trap_timescale) : 0.0);
    }
    table.spearman = spearman_correlation(gaps, rates);
    return table;
}

// ---------------------------------------------------------------------------
// Anchored recovery

Configuration perturb(const Domain& domain, const Configuration& config, double length, CounterRng& rng) {
    Configuration out = config;
    for (std::size_t i = 0; i < out.size(); ++i) {
        for (;;) {
            const double theta = 2.0 * std::numbers::pi * rng.uniform();
            const Vec2 p = config.points[i] + length * Vec2{std::cos(theta), std::sin(theta)};
            if (!domain.contains(p)) continue;
            bool clash = false;
            for (std::size_t j = 0; j < i; ++j) clash = clash || distance(p, out.points[j]) <= kCoincidenceTol;
            if (clash) continue;
            out.points[i] = p;
            break;
        }
    }
    return out;
}

RecoveryResult minimal_anchor(const Domain& domain, const MinimaAtlas& atlas, std::size_t cluster,
                              const RecoverySettings& settings) {
    if (cluster >= atlas.clusters.size()) throw Error(Errc::InvalidParams, "cluster index out of range");
    if (settings.max_layers == 0) throw Error(Errc::InvalidAnchor, "max_layers must be >= 1");
    const MinimumCluster& source = atlas.clusters[cluster];
    const Signature source_sig = make_signature(source.representative, source.energy_u);
    // The anchored Hamiltonian shifts energies, so membership is decided by shape alone.
    const ClusterTolerances shape_only{settings.tolerances.dist_tol, std::numeric_limits<double>::infinity()};

    RecoveryResult result;
    result.cluster = cluster;
    for (std::size_t layers = 1; layers <= settings.max_layers; ++layers) {
        result.layers = layers;
        result.anchor = build_anchor(source.representative, domain, layers, settings.construction);
        result.successes = 0;
        result.trials = settings.trials;
        result.distances.clear();
        for (std::size_t trial = 0; trial < settings.trials; ++trial) {
            CounterRng rng(settings.seed + trial, 2);
            const Configuration start =
                perturb(domain, source.representative, settings.perturbation_rel * domain.diameter(), rng);
            AnnealParams params = AnnealParams::defaults_for(domain, settings.seed + trial, 3);
            params.proposal_std = settings.proposal_std_rel * domain.diameter();
            params.quadrature = settings.quadrature;
            params.record_every = std::max<std::size_t>(1, settings.schedule.steps / 20);
            const RunRecord rec = anchored_optimize(domain, result.anchor, start, settings.schedule, params);
            const Signature sig = make_signature(rec.final_config, rec.final_energy.total_electrostatic);
            result.distances.push_back(signature_distance(sig, source_sig));
            if (classify(atlas, sig, shape_only) == cluster) ++result.successes;
        }
        if (result.successes >= settings.required) {
            result.passed = true;
            break;
        }
    }
    return result;
}

}  // namespace cvt
