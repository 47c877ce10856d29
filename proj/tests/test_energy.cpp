#include <doctest.h>

#include <cmath>
#include <numeric>

#include "cvt/energy.hpp"
#include "cvt/optimize.hpp"
#include "cvt/rng.hpp"
#include "oracles.hpp"

using namespace cvt;

namespace {

const double kCenterPotential = 2.0 * std::log(1.0 + std::sqrt(2.0));

Domain scaled(const Domain& d, double s) {
    std::vector<Vec2> v;
    for (const Vec2 p : d.vertices()) v.push_back(s * p);
    return Domain::from_vertices(v);
}

}  // namespace

TEST_CASE("Gauss-Legendre rule") {
    CHECK_THROWS_AS(Quadrature(1), Error);
    const Quadrature two(2);
    CHECK(two.nodes()[0] == doctest::Approx(-1.0 / std::sqrt(3.0)).epsilon(1e-15));
    CHECK(two.weights()[1] == doctest::Approx(1.0).epsilon(1e-15));
    for (const std::size_t n : {3u, 8u, 32u, 64u}) {
        const Quadrature q(n);
        CHECK(std::accumulate(q.weights().begin(), q.weights().end(), 0.0) == doctest::Approx(2.0).epsilon(1e-14));
        // Exact for x^(2n-2): ∫_{-1}^{1} x^(2n-2) = 2/(2n-1).
        double s = 0.0;
        for (std::size_t k = 0; k < n; ++k) s += q.weights()[k] * std::pow(q.nodes()[k], 2.0 * n - 2);
        CHECK(s == doctest::Approx(2.0 / (2.0 * n - 1)).epsilon(1e-12));
        for (std::size_t k = 1; k < n; ++k) CHECK(q.nodes()[k] > q.nodes()[k - 1]);
    }
}

TEST_CASE("boundary_potential oracles") {
    const Domain sq = Domain::unit_square();
    const Quadrature q;
    CHECK(std::abs(boundary_potential({0.5, 0.5}, sq, 1, q).value() - kCenterPotential) < 1e-8);
    CHECK(std::abs(oracle::boundary_potential_exact({0.5, 0.5}, sq.vertices(), 0.25) - kCenterPotential) < 1e-14);
    CHECK(std::abs(oracle::boundary_potential_trapezoid({0.5, 0.5}, sq.vertices(), 0.25, 1'000'000) -
                   kCenterPotential) < 1e-9);
    CHECK(boundary_potential({0.5, 0.5}, sq, 4, q).value() == doctest::Approx(4 * kCenterPotential).epsilon(1e-14));

    CHECK(boundary_potential({1.2, 0.5}, sq, 1, q).is_infinite());
    CHECK(boundary_potential({1.0, 0.5}, sq, 1, q).is_infinite());
    CHECK_THROWS_AS(boundary_potential({-0.1, 0.5}, sq, 1, q).value(), Error);

    // Grows toward the boundary.
    double prev = 0.0;
    for (const double x : {0.5, 0.4, 0.3, 0.2, 0.1, 0.05}) {
        const double v = boundary_potential({x, 0.5}, sq, 1, q).value();
        CHECK(v > prev);
        prev = v;
    }
}

TEST_CASE("boundary quadrature converges with order") {
    const Domain sq = Domain::unit_square();
    const Domain hex = Domain::regular_polygon(6);
    CounterRng rng(41, 0);
    for (const Domain* d : {&sq, &hex}) {
        const double margin = 0.1 * d->diameter();
        for (int trial = 0; trial < 20; ++trial) {
            Vec2 p;
            do p = random_configuration(*d, 1, rng).points[0];
            while (d->signed_distance(p) < margin);
            const double exact = oracle::boundary_potential_exact(p, d->vertices(), d->sigma(1));
            double prev = std::numeric_limits<double>::infinity();
            for (const std::size_t k : {4u, 8u, 16u, 32u}) {
                const double err = std::abs(boundary_potential(p, *d, 1, Quadrature(k)).value() - exact);
                CHECK((err < prev || err < 1e-13));
                prev = err;
            }
            CHECK(prev < 1e-6);
        }
    }
}

TEST_CASE("centroid and edge energies") {
    const Domain sq = Domain::unit_square();
    const Configuration two{{{0.25, 0.5}, {0.75, 0.5}}};
    const Tessellation t2 = tessellate(sq, two);
    CHECK(std::abs(centroid_energy(t2, two) - 5.0 / 48.0) < 1e-15);
    CHECK(std::abs(edge_energy(t2, two) - 0.25) < 1e-15);

    const Configuration c1{{{0.5, 0.5}}};
    CHECK(std::abs(centroid_energy(tessellate(sq, c1), c1) - 1.0 / 6.0) < 1e-15);
    const Configuration off{{{0.3, 0.5}}};
    CHECK(centroid_energy(tessellate(sq, off), off) == doctest::Approx(1.0 / 6.0 + 0.04).epsilon(1e-14));
    CHECK(edge_energy(tessellate(sq, off), off) == 0.0);

    const Configuration four{{{0.25, 0.25}, {0.75, 0.25}, {0.75, 0.75}, {0.25, 0.75}}};
    CHECK(edge_energy(tessellate(sq, four), four) == doctest::Approx(0.5).epsilon(1e-13));

    CHECK_THROWS_AS(centroid_energy(t2, c1), Error);
    CHECK_THROWS_AS(edge_energy(t2, c1), Error);
}

TEST_CASE("electrostatic_energy report") {
    const Domain sq = Domain::unit_square();
    const Quadrature q;
    const EnergyReport r1 = electrostatic_energy(Configuration{{{0.5, 0.5}}}, sq, q);
    CHECK(r1.pair_energy == 0.0);
    CHECK(std::abs(r1.boundary_energy - kCenterPotential) < 1e-8);
    CHECK(r1.total_electrostatic == r1.pair_energy + r1.boundary_energy);

    const Configuration two{{{0.25, 0.5}, {0.75, 0.5}}};
    const EnergyReport r2 = electrostatic_energy(two, sq, q);
    CHECK(r2.pair_energy == doctest::Approx(4.0).epsilon(1e-15));
    const double oracle_boundary = oracle::boundary_potential_exact({0.25, 0.5}, sq.vertices(), 0.5) +
                                   oracle::boundary_potential_exact({0.75, 0.5}, sq.vertices(), 0.5);
    CHECK(std::abs(r2.boundary_energy - oracle_boundary) < 1e-8);
    CHECK(r2.centroid_energy == doctest::Approx(5.0 / 48.0));
    CHECK(r2.edge_energy == doctest::Approx(0.25));
    CHECK(r2.total().value() == r2.total_electrostatic);

    const EnergyReport out = electrostatic_energy(Configuration{{{0.5, 0.5}, {1.5, 0.5}}}, sq, q);
    CHECK_FALSE(out.confined);
    CHECK(out.total().is_infinite());
    CHECK(electrostatic_potential(Configuration{{{0.5, 0.5}, {0.5, 1.0}}}, sq, q).is_infinite());
    CHECK_THROWS_AS(electrostatic_energy(Configuration{{{0.5, 0.5}, {0.5, 0.5}}}, sq, q), Error);
}

TEST_CASE("energy scale law") {
    CounterRng rng(5, 0);
    const Domain hex = Domain::regular_polygon(6);
    const Quadrature q;
    for (const double s : {0.5, 3.0}) {
        const Domain big = scaled(hex, s);
        const Configuration c = random_configuration(hex, 6, rng);
        Configuration cs = c;
        for (Vec2& p : cs.points) p = s * p;
        const EnergyReport a = electrostatic_energy(c, hex, q);
        const EnergyReport b = electrostatic_energy(cs, big, q);
        CHECK(std::abs(b.pair_energy - a.pair_energy / s) <= 1e-9 * a.pair_energy / s);
        CHECK(std::abs(b.boundary_energy - a.boundary_energy / s) <= 1e-9 * a.boundary_energy / s);
        const double s4 = s * s * s * s;
        CHECK(std::abs(b.centroid_energy - a.centroid_energy * s4) <= 1e-9 * a.centroid_energy * s4);
    }
}

TEST_CASE("numeric_gradient") {
    const Domain sq = Domain::unit_square();
    const double h = default_fd_step(sq);
    const Configuration two{{{0.3, 0.4}, {0.6, 0.55}}};
    const auto g = numeric_gradient(pair_functional(), sq, two, h);
    for (int k = 0; k < 2; ++k) CHECK(std::abs(g[k] + g[2 + k]) < 1e-8);
    const double d = distance(two.points[0], two.points[1]);
    CHECK(std::hypot(g[0], g[1]) == doctest::Approx(2.0 / (d * d)).epsilon(1e-6));

    CounterRng rng(13, 0);
    for (int trial = 0; trial < 20; ++trial) {
        const Configuration c = random_configuration(sq, 2 + rng.below(7), rng);
        const auto num = numeric_gradient(pair_functional(), sq, c, h);
        const auto an = pair_energy_gradient(c);
        double diff = 0.0, ref = 0.0;
        for (std::size_t i = 0; i < c.size(); ++i) {
            diff += std::pow(num[2 * i] - an[i].x, 2) + std::pow(num[2 * i + 1] - an[i].y, 2);
            ref += norm2(an[i]);
        }
        CHECK(std::sqrt(diff / ref) < 1e-6);
    }

    CounterRng lr(42, 6);
    const LloydResult cvt = lloyd_run(sq, random_configuration(sq, 6, lr), 1e-10, 10000);
    REQUIRE(cvt.converged);
    for (const double v : numeric_gradient(centroid_functional(sq), sq, cvt.config, h)) CHECK(std::abs(v) < 1e-6);

    CHECK_THROWS_AS(numeric_gradient(pair_functional(), sq, Configuration{{{0.5, 0.5}, {1e-6, 0.5}}}, h), Error);
}

TEST_CASE("numeric_hessian known spectra") {
    const Domain sq = Domain::unit_square();
    const double h = default_fd_step(sq);
    const Quadrature q;

    const SpectrumReport u1 = numeric_hessian(electrostatic_functional(sq, q), sq, Configuration{{{0.5, 0.5}}}, h);
    CHECK(u1.eigenvalues[0] > 0.0);
    CHECK(u1.min_eigenvalue == u1.eigenvalues[0]);

    const SpectrumReport e1 = numeric_hessian(centroid_functional(sq), sq, Configuration{{{0.5, 0.5}}}, h);
    for (const double v : e1.eigenvalues) CHECK(v == doctest::Approx(2.0).epsilon(1e-6));

    const Configuration two{{{0.25, 0.5}, {0.75, 0.5}}};
    const Tessellation t = tessellate(sq, two);
    const auto m = numeric_hessian_matrix(frozen_edge_functional(t), sq, two, h);
    CHECK(m[2 * 4 + 2] == doctest::Approx(2.0).epsilon(1e-6));  // ∂²/∂x₁² of ℓ d², ℓ = 1
    const SpectrumReport fe = analyze_spectrum(m, 4);
    CHECK(fe.num_near_zero == 2);
    CHECK(fe.eigenvalues[3] == doctest::Approx(4.0).epsilon(1e-6));
    CHECK(fe.projected_min_eigenvalue == doctest::Approx(4.0).epsilon(1e-6));
    CHECK(std::is_sorted(fe.eigenvalues.begin(), fe.eigenvalues.end()));
}

TEST_CASE("electrostatic Hessian spectrum is invariant under square symmetries") {
    const Domain sq = Domain::unit_square();
    const double h = default_fd_step(sq);
    const Quadrature q;
    const Configuration c{{{0.3, 0.2}, {0.7, 0.35}, {0.45, 0.8}}};
    const SpectrumReport base = numeric_hessian(electrostatic_functional(sq, q), sq, c, h);
    for (int g = 1; g < 8; ++g) {
        Configuration img = c;
        for (Vec2& p : img.points) p = oracle::square_symmetry(g, p);
        std::swap(img.points[0], img.points[2]);
        const SpectrumReport r = numeric_hessian(electrostatic_functional(sq, q), sq, img, h);
        for (std::size_t k = 0; k < r.eigenvalues.size(); ++k)
            CHECK(std::abs(r.eigenvalues[k] - base.eigenvalues[k]) <= 1e-6 * base.max_abs_eigenvalue);
    }
}

TEST_CASE("centroid and frozen edge Hessians are PSD at Lloyd CVTs") {
    const Domain sq = Domain::unit_square();
    const double h = default_fd_step(sq);
    for (std::size_t n = 2; n <= 7; ++n) {
        CounterRng rng(42, n);
        const LloydResult cvt = lloyd_run(sq, random_configuration(sq, n, rng), 1e-10, 20000);
        REQUIRE(cvt.converged);
        const SpectrumReport e = numeric_hessian(centroid_functional(sq), sq, cvt.config, h);
        const SpectrumReport fe = numeric_hessian(frozen_edge_functional(tessellate(sq, cvt.config)), sq, cvt.config, h);
        CHECK(projected_psd(e));
        CHECK(projected_psd(fe));
        CHECK(fe.num_near_zero == 2);  // translations of a connected difference form
    }
}

TEST_CASE("electrostatic Hessian at its own minimum is positive definite") {
    // Square plus center, the N=5 minimizer of U found by annealing and polish.
    const Domain sq = Domain::unit_square();
    const double a = 0.123945, b = 0.876055;
    const Configuration c{{{a, a}, {b, a}, {b, b}, {a, b}, {0.5, 0.5}}};
    const SpectrumReport u = numeric_hessian(electrostatic_functional(sq, Quadrature()), sq, c, default_fd_step(sq));
    CHECK(u.min_eigenvalue > 0.0);
    CHECK(u.num_near_zero == 0);
}

TEST_CASE("electrostatic Hessian at the two-generator CVT has a negative mode") {
    // Measured, not assumed: rotating the pair about the center toward the
    // diagonal, where U has its two-charge minimum, lowers U.
    const Domain sq = Domain::unit_square();
    const Configuration two{{{0.25, 0.5}, {0.75, 0.5}}};
    const SpectrumReport u = numeric_hessian(electrostatic_functional(sq, Quadrature()), sq, two, default_fd_step(sq));
    CHECK_FALSE(projected_psd(u));
    const auto& v = u.projected_min_eigenvector;
    CHECK(std::abs(std::abs(v[1]) - std::sqrt(0.5)) < 1e-3);
    CHECK(v[1] * v[3] < 0.0);
}

TEST_CASE("analyze_spectrum edge cases") {
    const SpectrumReport zero = analyze_spectrum(std::vector<double>(4, 0.0), 2);
    CHECK(zero.max_abs_eigenvalue == 0.0);
    CHECK(projected_psd(zero));
    const SpectrumReport neg = analyze_spectrum({-1.0, 0.0, 0.0, 2.0}, 2);
    CHECK(neg.min_eigenvalue == doctest::Approx(-1.0));
    CHECK_FALSE(projected_psd(neg));
}
