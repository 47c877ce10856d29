#include "cvt/energy.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace cvt {

Quadrature::Quadrature(std::size_t points_per_edge) {
    if (points_per_edge < 2) throw Error(Errc::InvalidQuadrature, "points_per_edge must be >= 2");
    const std::size_t n = points_per_edge;
    nodes_.resize(n);
    weights_.resize(n);
    // Newton on P_n from Chebyshev-like initial guesses; symmetric pairs.
    for (std::size_t i = 0; i < (n + 1) / 2; ++i) {
        double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (static_cast<double>(n) + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0;
            double p1 = x;
            for (std::size_t k = 2; k <= n; ++k) {
                const double kk = static_cast<double>(k);
                const double p2 = ((2.0 * kk - 1.0) * x * p1 - (kk - 1.0) * p0) / kk;
                p0 = p1;
                p1 = p2;
            }
            dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes_[i] = -x;
        nodes_[n - 1 - i] = x;
        weights_[i] = w;
        weights_[n - 1 - i] = w;
    }
    if (n % 2 == 1) nodes_[n / 2] = 0.0;
}

double Potential::value() const {
    if (!value_) throw Error(Errc::PointOutsideDomain, "potential is infinite outside the domain");
    return *value_;
}

BoundaryField::BoundaryField(const Domain& domain, std::size_t n_charges, const Quadrature& quad)
    : domain_(&domain), sigma_(domain.sigma(n_charges)) {
    const std::size_t m = domain.num_edges();
    nodes_.reserve(m * quad.points_per_edge());
    weights_.reserve(m * quad.points_per_edge());
    for (std::size_t k = 0; k < m; ++k) {
        const Vec2 a = domain.vertex(k);
        const Vec2 b = domain.vertex(k + 1);
        const Vec2 mid = 0.5 * (a + b);
        const Vec2 half = 0.5 * (b - a);
        const double half_len = norm(half);
        for (std::size_t q = 0; q < quad.points_per_edge(); ++q) {
            nodes_.push_back(mid + quad.nodes()[q] * half);
            weights_.push_back(sigma_ * quad.weights()[q] * half_len);
        }
    }
}

double BoundaryField::value_inside(Vec2 p) const {
    double total = 0.0;
    for (std::size_t k = 0; k < nodes_.size(); ++k) total += weights_[k] / distance(p, nodes_[k]);
    return total;
}

Potential BoundaryField::at(Vec2 p) const {
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !domain_->contains(p)) return Potential::infinite();
    return Potential(value_inside(p));
}

Potential boundary_potential(Vec2 p, const Domain& domain, std::size_t n_charges, const Quadrature& quad) {
    return BoundaryField(domain, n_charges, quad).at(p);
}

double pair_energy(const Configuration& config) {
    double total = 0.0;
    const auto& x = config.points;
    for (std::size_t i = 0; i < x.size(); ++i)
        for (std::size_t j = i + 1; j < x.size(); ++j) total += 1.0 / distance(x[i], x[j]);
    return 2.0 * total;
}

std::vector<Vec2> pair_energy_gradient(const Configuration& config) {
    const auto& x = config.points;
    std::vector<Vec2> grad(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        for (std::size_t j = 0; j < x.size(); ++j) {
            if (j == i) continue;
            const Vec2 d = x[i] - x[j];
            const double r = norm(d);
            grad[i] += (-2.0 / (r * r * r)) * d;
        }
    }
    return grad;
}

double centroid_energy(const Tessellation& tess, const Configuration& config) {
    if (tess.size() != config.size())
        throw Error(Errc::MismatchedSizes, "tessellation has " + std::to_string(tess.size()) + " cells, configuration " +
                                               std::to_string(config.size()) + " points");
    double total = 0.0;
    for (std::size_t i = 0; i < tess.size(); ++i) total += second_moment(tess.cells[i], config.points[i]);
    return total;
}

double edge_energy(const Tessellation& tess, const Configuration& config) {
    if (tess.size() != config.size())
        throw Error(Errc::MismatchedSizes, "tessellation has " + std::to_string(tess.size()) + " cells, configuration " +
                                               std::to_string(config.size()) + " points");
    double total = 0.0;
    for (const auto& e : tess.edges) total += e.length * norm2(config.points[e.i] - config.points[e.j]);
    return total;
}

Potential electrostatic_potential(const Configuration& config, const Domain& domain, const Quadrature& quad) {
    const BoundaryField field(domain, config.size(), quad);
    double boundary = 0.0;
    for (const Vec2 p : config.points) {
        const Potential phi = field.at(p);
        if (phi.is_infinite()) return Potential::infinite();
        boundary += phi.value();
    }
    return Potential(pair_energy(config) + boundary);
}

EnergyReport electrostatic_energy(const Configuration& config, const Domain& domain, const Quadrature& quad) {
    EnergyReport report;
    const BoundaryField field(domain, config.size(), quad);
    for (const Vec2 p : config.points) {
        const Potential phi = field.at(p);
        if (phi.is_infinite()) return EnergyReport{.confined = false};
        report.boundary_energy += phi.value();
    }
    for (std::size_t i = 0; i < config.size(); ++i)
        for (std::size_t j = i + 1; j < config.size(); ++j)
            if (distance(config.points[i], config.points[j]) <= kCoincidenceTol)
                throw Error(Errc::CoincidentGenerators,
                            "generators " + std::to_string(i) + " and " + std::to_string(j) + " coincide");
    report.pair_energy = pair_energy(config);
    report.total_electrostatic = report.pair_energy + report.boundary_energy;
    if (config.size() > 0) {
        const Tessellation tess = tessellate(domain, config);
        report.centroid_energy = centroid_energy(tess, config);
        report.edge_energy = edge_energy(tess, config);
    }
    return report;
}

// ---------------------------------------------------------------------------
// Functionals

Functional centroid_functional(const Domain& domain) {
    return [domain](const Configuration& c) { return centroid_energy(tessellate(domain, c), c); };
}

Functional edge_functional(const Domain& domain) {
    return [domain](const Configuration& c) { return edge_energy(tessellate(domain, c), c); };
}

Functional frozen_edge_functional(const Tessellation& tess) {
    return [edges = tess.edges, n = tess.size()](const Configuration& c) {
        if (c.size() != n) throw Error(Errc::MismatchedSizes, "frozen edge functional size mismatch");
        double total = 0.0;
        for (const auto& e : edges) total += e.length * norm2(c.points[e.i] - c.points[e.j]);
        return total;
    };
}

Functional pair_functional() {
    return [](const Configuration& c) { return pair_energy(c); };
}

Functional electrostatic_functional(const Domain& domain, const Quadrature& quad) {
    return [domain, quad](const Configuration& c) { return electrostatic_potential(c, domain, quad).value(); };
}

double default_fd_step(const Domain& domain) { return 1e-5 * domain.diameter(); }

namespace {

double& coord(Configuration& c, std::size_t k) { return k % 2 == 0 ? c.points[k / 2].x : c.points[k / 2].y; }

void check_step(const Domain& domain, const Configuration& config, double reach) {
    for (std::size_t i = 0; i < config.size(); ++i)
        if (domain.signed_distance(config.points[i]) <= reach)
            throw Error(Errc::PerturbationExitsDomain,
                        "generator " + std::to_string(i) + " is within the finite-difference reach of the boundary");
}

}  // namespace

std::vector<double> numeric_gradient(const Functional& f, const Domain& domain, const Configuration& config, double h) {
    if (!(h > 0.0)) throw Error(Errc::InvalidParams, "finite-difference step must be positive");
    check_step(domain, config, h);
    const std::size_t dim = 2 * config.size();
    std::vector<double> grad(dim);
    Configuration work = config;
    for (std::size_t k = 0; k < dim; ++k) {
        const double x0 = coord(work, k);
        coord(work, k) = x0 + h;
        const double fp = f(work);
        coord(work, k) = x0 - h;
        const double fm = f(work);
        coord(work, k) = x0;
        grad[k] = (fp - fm) / (2.0 * h);
    }
    return grad;
}

std::vector<double> numeric_hessian_matrix(const Functional& f, const Domain& domain, const Configuration& config,
                                           double h) {
    if (!(h > 0.0)) throw Error(Errc::InvalidParams, "finite-difference step must be positive");
    // Mixed differences move two coordinates of possibly the same generator.
    check_step(domain, config, std::sqrt(2.0) * h);
    const std::size_t dim = 2 * config.size();
    std::vector<double> hess(dim * dim, 0.0);
    Configuration work = config;
    const double f0 = f(config);
    for (std::size_t k = 0; k < dim; ++k) {
        const double xk = coord(work, k);
        coord(work, k) = xk + h;
        const double fp = f(work);
        coord(work, k) = xk - h;
        const double fm = f(work);
        coord(work, k) = xk;
        hess[k * dim + k] = (fp - 2.0 * f0 + fm) / (h * h);
        for (std::size_t l = k + 1; l < dim; ++l) {
            const double xl = coord(work, l);
            double acc = 0.0;
            for (const auto& [sk, sl] : {std::pair{1.0, 1.0}, {1.0, -1.0}, {-1.0, 1.0}, {-1.0, -1.0}}) {
                coord(work, k) = xk + sk * h;
                coord(work, l) = xl + sl * h;
                acc += sk * sl * f(work);
            }
            coord(work, k) = xk;
            coord(work, l) = xl;
            hess[k * dim + l] = acc / (4.0 * h * h);
            hess[l * dim + k] = hess[k * dim + l];
        }
    }
    return hess;
}

SpectrumReport analyze_spectrum(const std::vector<double>& sym_matrix, std::size_t dim, double near_zero_rel) {
    SpectrumReport report;
    if (dim == 0) return report;
    Eigen::MatrixXd m(dim, dim);
    for (std::size_t r = 0; r < dim; ++r)
        for (std::size_t c = 0; c < dim; ++c)
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                0.5 * (sym_matrix[r * dim + c] + sym_matrix[c * dim + r]);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m);
    const Eigen::VectorXd& values = solver.eigenvalues();
    report.eigenvalues.assign(values.data(), values.data() + values.size());
    report.min_eigenvalue = report.eigenvalues.front();
    for (const double v : report.eigenvalues) report.max_abs_eigenvalue = std::max(report.max_abs_eigenvalue, std::abs(v));
    report.zero_tol = near_zero_rel * report.max_abs_eigenvalue;

    std::size_t chosen = dim - 1;
    bool found = false;
    for (std::size_t k = 0; k < dim; ++k) {
        if (std::abs(report.eigenvalues[k]) < report.zero_tol) {
            ++report.num_near_zero;
        } else if (!found) {
            chosen = k;
            found = true;
        }
    }
    report.projected_min_eigenvalue = report.eigenvalues[chosen];
    const Eigen::VectorXd vec = solver.eigenvectors().col(static_cast<Eigen::Index>(chosen));
    report.projected_min_eigenvector.assign(vec.data(), vec.data() + vec.size());
    return report;
}

SpectrumReport numeric_hessian(const Functional& f, const Domain& domain, const Configuration& config, double h,
                               double near_zero_rel) {
    return analyze_spectrum(numeric_hessian_matrix(f, domain, config, h), 2 * config.size(), near_zero_rel);
}

bool projected_psd(const SpectrumReport& report, double rel_tol) {
    return report.projected_min_eigenvalue >= -rel_tol * report.max_abs_eigenvalue;
}

}  // namespace cvt
