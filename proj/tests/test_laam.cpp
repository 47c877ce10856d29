#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "cvt/energy.hpp"
#include "cvt/laam.hpp"
#include "cvt/optimize.hpp"
#include "cvt/rng.hpp"
#include "oracles.hpp"

using namespace cvt;

namespace {

RunRecord record(Configuration c, double u, std::size_t steps = 100) {
    RunRecord r;
    r.final_config = std::move(c);
    r.final_energy.total_electrostatic = u;
    r.final_hamiltonian = u;
    r.schedule = Schedule::geometric(1.0, 0.9, steps);
    return r;
}

Configuration rotated(const Configuration& c, double theta, Vec2 shift, bool mirror) {
    Configuration out;
    for (const Vec2 p : c.points) {
        const Vec2 q = mirror ? Vec2{p.x, -p.y} : p;
        out.points.push_back(Vec2{std::cos(theta) * q.x - std::sin(theta) * q.y,
                                  std::sin(theta) * q.x + std::cos(theta) * q.y} +
                             shift);
    }
    return out;
}

const Configuration kTriangle{{{0.2, 0.2}, {0.8, 0.25}, {0.5, 0.7}}};
const Configuration kLine{{{0.1, 0.5}, {0.5, 0.5}, {0.9, 0.5}}};

}  // namespace

TEST_CASE("signature invariance") {
    CounterRng rng(21, 0);
    const Domain sq = Domain::unit_square();
    for (int trial = 0; trial < 20; ++trial) {
        const Configuration c = random_configuration(sq, 2 + rng.below(8), rng);
        Configuration moved = rotated(c, 2 * std::numbers::pi * rng.uniform(), {rng.uniform(), -rng.uniform()},
                                      rng.below(2) == 1);
        rng.shuffle(std::span(moved.points));
        const Signature a = make_signature(c, 1.0);
        const Signature b = make_signature(moved, 1.0);
        CHECK(a.sorted_pair_distances.size() == c.size() * (c.size() - 1) / 2);
        CHECK(std::is_sorted(a.sorted_pair_distances.begin(), a.sorted_pair_distances.end()));
        CHECK(oracle::max_abs_diff(a.sorted_pair_distances, b.sorted_pair_distances) < 1e-10);
        CHECK(signature_distance(a, b) < 1e-10);
    }
    CHECK(signature_distance(make_signature(Configuration{{{0.5, 0.5}}}, 1), make_signature(Configuration{}, 2)) == 0.0);
}

TEST_CASE("cluster_minima rules") {
    std::vector<RunRecord> dup(5, record(kTriangle, 10.0));
    CHECK(cluster_minima(dup).clusters.size() == 1);

    Configuration mirrored = kTriangle;
    for (Vec2& p : mirrored.points) p = oracle::square_symmetry(1, p);
    const std::vector<RunRecord> pair = {record(kTriangle, 10.0), record(mirrored, 10.0)};
    CHECK(cluster_minima(pair).clusters.size() == 1);

    const std::vector<RunRecord> three = {record(kTriangle, 10.0), record(kTriangle, 10.001), record(kLine, 12.0)};
    const MinimaAtlas atlas = cluster_minima(three, {1e-2, 1e-2});
    REQUIRE(atlas.clusters.size() == 2);
    CHECK(atlas.global_index == 0);
    CHECK(atlas.clusters[0].gap == 0.0);
    CHECK(atlas.clusters[1].gap == doctest::Approx(2.0));
    CHECK(atlas.clusters[0].members == std::vector<std::size_t>{0, 1});
    CHECK(atlas.clusters[0].representative_run == 0);

    // Same shape, energies apart by more than energy_tol.
    const std::vector<RunRecord> split = {record(kTriangle, 10.0), record(kTriangle, 10.5)};
    CHECK(cluster_minima(split, {1e-2, 1e-3}).clusters.size() == 2);

    CHECK_THROWS_AS(cluster_minima(std::vector<RunRecord>{}), Error);
}

TEST_CASE("trap timescale is the first sweep count reaching frequency 0.5") {
    std::vector<RunRecord> rs;
    // 100 sweeps: 1 of 4 runs find the triangle; 400 sweeps: 3 of 4.
    for (int k = 0; k < 4; ++k) rs.push_back(record(k < 1 ? kTriangle : kLine, k < 1 ? 10.0 : 11.0, 100));
    for (int k = 0; k < 4; ++k) rs.push_back(record(k < 3 ? kTriangle : kLine, k < 3 ? 10.0 : 11.0, 400));
    const MinimaAtlas atlas = cluster_minima(rs);
    REQUIRE(atlas.clusters.size() == 2);
    CHECK(atlas.clusters[0].trap_timescale == 400u);
    CHECK(atlas.clusters[1].trap_timescale == 100u);
}

TEST_CASE("clustering is permutation stable") {
    CounterRng rng(4, 0);
    const Domain sq = Domain::unit_square();
    std::vector<RunRecord> rs;
    for (int k = 0; k < 12; ++k) {
        Configuration c = k % 3 == 0 ? kLine : kTriangle;
        for (Vec2& p : c.points) p = oracle::square_symmetry(static_cast<int>(rng.below(8)), p);
        rs.push_back(record(c, k % 3 == 0 ? 11.0 : 10.0));
    }
    const auto partition = [](const MinimaAtlas& a, const std::vector<std::size_t>& map) {
        std::set<std::set<std::size_t>> out;
        for (const auto& c : a.clusters) {
            std::set<std::size_t> m;
            for (const auto i : c.members) m.insert(map[i]);
            out.insert(m);
        }
        return out;
    };
    std::vector<std::size_t> id(rs.size());
    std::iota(id.begin(), id.end(), std::size_t{0});
    const auto base = partition(cluster_minima(rs), id);
    for (int rep = 0; rep < 10; ++rep) {
        std::vector<std::size_t> order = id;
        rng.shuffle(std::span(order));
        std::vector<RunRecord> shuffled;
        for (const auto k : order) shuffled.push_back(rs[k]);
        CHECK(partition(cluster_minima(shuffled), order) == base);
    }
}

TEST_CASE("classify") {
    const MinimaAtlas atlas = cluster_minima(std::vector<RunRecord>{record(kTriangle, 10.0), record(kLine, 12.0)});
    CHECK(classify(atlas, make_signature(kLine, 12.0), {}) == 1u);
    CHECK(classify(atlas, make_signature(kTriangle, 10.0), {}) == 0u);
    const Configuration other{{{0.1, 0.1}, {0.15, 0.1}, {0.9, 0.9}}};
    CHECK_FALSE(classify(atlas, make_signature(other, 10.0), {}).has_value());
}

TEST_CASE("build_anchor") {
    const Domain sq = Domain::unit_square();
    const Configuration two{{{0.25, 0.5}, {0.75, 0.5}}};
    const LatticeAnchor a = build_anchor(two, sq, 1, TilingKind::translate);
    CHECK(a.points.size() == 16);
    for (std::size_t layers = 1; layers <= 3; ++layers) {
        const LatticeAnchor al = build_anchor(two, sq, layers, TilingKind::translate);
        CHECK(al.points.size() == ((2 * layers + 1) * (2 * layers + 1) - 1) * 2);
        for (const Vec2 p : al.points) CHECK(sq.signed_distance(p) < 0.0);
    }
    CHECK_THROWS_AS(build_anchor(two, sq, 0, TilingKind::translate), Error);
    CHECK_THROWS_AS(build_anchor(Configuration{}, sq, 1, TilingKind::translate), Error);
    CHECK_THROWS_AS(build_anchor(two, Domain::regular_polygon(5), 1, TilingKind::translate), Error);

    const Configuration center{{{0.5, 0.5}}};
    auto t = build_anchor(center, sq, 1, TilingKind::translate).points;
    auto m = build_anchor(center, sq, 1, TilingKind::mirror).points;
    REQUIRE(t.size() == 8);
    REQUIRE(m.size() == 8);
    const auto lex = [](Vec2 p, Vec2 q) { return p.x != q.x ? p.x < q.x - 1e-12 : p.y < q.y; };
    std::sort(t.begin(), t.end(), lex);
    std::sort(m.begin(), m.end(), lex);
    for (std::size_t k = 0; k < 8; ++k) CHECK(distance(t[k], m[k]) < 1e-12);

    const Domain pent = Domain::regular_polygon(5);
    const LatticeAnchor mp = build_anchor(Configuration{{{0.1, 0.2}, {-0.3, 0.1}}}, pent, 2, TilingKind::mirror);
    CHECK_FALSE(mp.points.empty());
    for (const Vec2 p : mp.points) CHECK(pent.signed_distance(p) < 0.0);
}

TEST_CASE("anchored optimize recovers the center for one charge") {
    const Domain sq = Domain::unit_square();
    const LatticeAnchor anchor = build_anchor(Configuration{{{0.5, 0.5}}}, sq, 1, TilingKind::translate);

    // Oracle: grid search of boundary potential plus anchor interaction.
    Vec2 best{};
    double best_u = std::numeric_limits<double>::infinity();
    for (int a = 1; a < 200; ++a)
        for (int b = 1; b < 200; ++b) {
            const Vec2 p{a / 200.0, b / 200.0};
            double u = oracle::boundary_potential_exact(p, sq.vertices(), 0.25);
            for (const Vec2 q : anchor.points) u += 1.0 / distance(p, q);
            if (u < best_u) {
                best_u = u;
                best = p;
            }
        }
    CHECK(distance(best, {0.5, 0.5}) < 1e-9);

    AnnealParams p = AnnealParams::defaults_for(sq, 5);
    const RunRecord r =
        anchored_optimize(sq, anchor, Configuration{{{0.3, 0.7}}}, Schedule::geometric(0.1, 0.98, 300), p);
    CHECK(distance(r.final_config.points[0], best) < 1e-3);
    CHECK(r.final_hamiltonian > r.final_energy.total_electrostatic);
    CHECK_THROWS_AS(anchored_optimize(sq, anchor, Configuration{}, Schedule::geometric(0.1, 0.98, 10), p), Error);
}

TEST_CASE("sweep_rates") {
    const Domain sq = Domain::unit_square();
    const std::vector<Schedule> one = {Schedule::geometric(1.0, 0.95, 200)};
    SweepSettings s;
    s.base_seed = 10;
    const auto rs = sweep_rates(sq, 3, one, 3, s);
    REQUIRE(rs.size() == 3);
    CHECK(rs[0].seed == 10);
    CHECK(rs[1].seed == 11);
    CHECK(rs[2].seed == 12);

    s.jobs = 3;
    CHECK(sweep_rates(sq, 3, one, 3, s) == rs);

    const std::vector<Schedule> two = {Schedule::geometric(1.0, 0.9, 100), Schedule::logarithmic(0.5, 150)};
    const auto single = sweep_rates(sq, 1, two, 3, s);
    for (const auto& r : single)
        CHECK(distance(r.final_config.points[0], single[0].final_config.points[0]) < 1e-3 * sq.diameter());
    CHECK(distance(single[0].final_config.points[0], {0.5, 0.5}) < 1e-3);
    CHECK(cluster_minima(single).clusters.size() == 1);

    CHECK_THROWS_AS(sweep_rates(sq, 3, std::vector<Schedule>{}, 3, s), Error);
}

TEST_CASE("slower schedules do no worse and add no fewer minima") {
    const Domain sq = Domain::unit_square();
    SweepSettings s;
    s.base_seed = 50;
    const std::vector<Schedule> fast = {Schedule::geometric_with_ratio(1.0, 1e-6, 100)};
    const std::vector<Schedule> slow = {Schedule::geometric_with_ratio(1.0, 1e-6, 20000)};
    const auto f = sweep_rates(sq, 5, fast, 20, s);
    const auto w = sweep_rates(sq, 5, slow, 20, s);
    double mf = 0.0, mw = 0.0;
    for (const auto& r : f) mf += r.final_hamiltonian / 20;
    for (const auto& r : w) mw += r.final_hamiltonian / 20;
    CHECK(mw <= mf + 1e-12 * std::abs(mf));

    std::vector<RunRecord> both = f;
    both.insert(both.end(), w.begin(), w.end());
    const MinimaAtlas small = cluster_minima(f);
    const MinimaAtlas large = cluster_minima(both);
    CHECK(large.clusters.size() >= small.clusters.size());
    for (const auto& c : small.clusters) CHECK(classify(large, make_signature(c.representative, c.energy_u), {}));
}

TEST_CASE("gap/timescale table") {
    MinimaAtlas a;
    a.clusters.resize(3);
    a.clusters[0].gap = 0;
    a.clusters[1].gap = 1;
    a.clusters[1].trap_timescale = 1000;
    a.clusters[2].gap = 2;
    a.clusters[2].trap_timescale = 400;
    const GapTimescaleTable t = gap_timescale_table(a);
    REQUIRE(t.rows.size() == 3);
    CHECK(t.rows[0].gap == 0);
    REQUIRE(t.spearman.has_value());
    CHECK(*t.spearman == doctest::Approx(1.0));

    MinimaAtlas b;
    b.clusters.resize(2);
    b.clusters[1].gap = 1.5;
    const GapTimescaleTable tb = gap_timescale_table(b);
    CHECK(tb.rows.size() == 2);
    CHECK(tb.rows[0].cluster == 0);

    MinimaAtlas one;
    one.clusters.resize(1);
    CHECK_THROWS_AS(gap_timescale_table(one), Error);

    const std::vector<double> x = {1, 2, 3, 4}, y = {10, 20, 20, 40}, flat = {1, 1, 1, 1};
    CHECK(*spearman_correlation(x, x) == doctest::Approx(1.0));
    CHECK(*spearman_correlation(x, y) == doctest::Approx(0.9486832981));
    CHECK_FALSE(spearman_correlation(x, flat).has_value());
}

TEST_CASE("perturb keeps generators inside at the requested distance") {
    const Domain sq = Domain::unit_square();
    CounterRng rng(3, 0);
    const Configuration c{{{0.02, 0.5}, {0.5, 0.5}, {0.97, 0.97}}};
    for (int k = 0; k < 50; ++k) {
        const Configuration p = perturb(sq, c, 0.05, rng);
        for (std::size_t i = 0; i < c.size(); ++i) {
            CHECK(sq.contains(p.points[i]));
            CHECK(distance(p.points[i], c.points[i]) == doctest::Approx(0.05).epsilon(1e-12));
        }
    }
}

TEST_CASE("minimal anchor recovers an N=4 minimum") {
    const Domain sq = Domain::unit_square();
    SweepSettings s;
    s.base_seed = 2;
    const auto rs = sweep_rates(sq, 4, std::vector<Schedule>{Schedule::geometric(1.0, 0.97, 400)}, 2, s);
    const MinimaAtlas atlas = cluster_minima(rs);
    REQUIRE(atlas.clusters.size() == 1);
    const RecoveryResult r = minimal_anchor(sq, atlas, 0, RecoverySettings{});
    CHECK(r.passed);
    CHECK(r.layers <= 3);
    CHECK(r.successes >= 8);
    CHECK(r.distances.size() == r.trials);
    CHECK_THROWS_AS(minimal_anchor(sq, atlas, 1, RecoverySettings{}), Error);
}
