#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

#include "cvt/geometry.hpp"

namespace cvt {

/// Gauss–Legendre rule applied on every boundary edge.
class Quadrature {
public:
    static constexpr std::size_t kDefaultPointsPerEdge = 32;

    /// Throws InvalidQuadrature when points_per_edge < 2.
    explicit Quadrature(std::size_t points_per_edge = kDefaultPointsPerEdge);

    std::size_t points_per_edge() const { return nodes_.size(); }
    /// Nodes and weights on [-1, 1].
    const std::vector<double>& nodes() const { return nodes_; }
    const std::vector<double>& weights() const { return weights_; }

private:
    std::vector<double> nodes_;
    std::vector<double> weights_;
};

/// Energy value on the extended real line: either finite or the hard-wall infinity
/// assigned to configurations with a generator outside the domain.
class Potential {
public:
    static Potential infinite() { return Potential(); }
    explicit Potential(double value) : value_(value) {}

    bool is_infinite() const { return !value_.has_value(); }
    bool is_finite() const { return value_.has_value(); }
    /// Throws PointOutsideDomain when infinite.
    double value() const;

    friend Potential operator+(Potential a, Potential b) {
        if (a.is_infinite() || b.is_infinite()) return infinite();
        return Potential(*a.value_ + *b.value_);
    }
    friend bool operator==(const Potential&, const Potential&) = default;

private:
    Potential() = default;
    std::optional<double> value_;
};

/// Boundary charge σ = n_charges / perimeter discretized at quadrature nodes.
/// `at` is the potential a unit charge at p feels from the whole boundary.
class BoundaryField {
public:
    BoundaryField(const Domain& domain, std::size_t n_charges, const Quadrature& quad);

    Potential at(Vec2 p) const;
    /// No containment check; caller guarantees p is inside.
    double value_inside(Vec2 p) const;

    const Domain& domain() const { return *domain_; }
    double sigma() const { return sigma_; }

private:
    const Domain* domain_;
    double sigma_;
    std::vector<Vec2> nodes_;
    std::vector<double> weights_;  // σ · Gauss weight · half edge length
};

Potential boundary_potential(Vec2 p, const Domain& domain, std::size_t n_charges, const Quadrature& quad);

/// Σ_i Σ_{j≠i} 1/‖x_i − x_j‖ (every unordered pair counted twice).
double pair_energy(const Configuration& config);
/// Analytic gradient of pair_energy, one entry per generator.
std::vector<Vec2> pair_energy_gradient(const Configuration& config);

/// Σ_i ∫_{V_i} ‖x − x_i‖² dx. Throws MismatchedSizes.
double centroid_energy(const Tessellation& tess, const Configuration& config);
/// Σ_{i<j} ℓ_ij ‖x_i − x_j‖² over positive-length shared edges. Throws MismatchedSizes.
double edge_energy(const Tessellation& tess, const Configuration& config);

struct EnergyReport {
    double centroid_energy = 0.0;
    double edge_energy = 0.0;
    double pair_energy = 0.0;
    double boundary_energy = 0.0;
    double total_electrostatic = 0.0;
    /// False when some generator lies on or outside the boundary; the
    /// electrostatic total is then infinite and the other fields are zero.
    bool confined = true;

    Potential total() const { return confined ? Potential(total_electrostatic) : Potential::infinite(); }
    friend bool operator==(const EnergyReport&, const EnergyReport&) = default;
};

/// Full report including centroid and edge energies from a fresh tessellation.
/// Throws CoincidentGenerators.
EnergyReport electrostatic_energy(const Configuration& config, const Domain& domain, const Quadrature& quad);

/// Pair plus boundary terms only.
Potential electrostatic_potential(const Configuration& config, const Domain& domain, const Quadrature& quad);

// ---------------------------------------------------------------------------
// Finite-difference harness

using Functional = std::function<double(const Configuration&)>;

Functional centroid_functional(const Domain& domain);
Functional edge_functional(const Domain& domain);
/// Edge energy with ℓ_ij held at the values of `tess`.
Functional frozen_edge_functional(const Tessellation& tess);
Functional pair_functional();
Functional electrostatic_functional(const Domain& domain, const Quadrature& quad);

/// Default finite-difference step, 1e-5 · diameter.
double default_fd_step(const Domain& domain);

/// Central differences, coordinates ordered x_0, y_0, x_1, y_1, ...
/// Throws PerturbationExitsDomain if a perturbed generator leaves the domain.
std::vector<double> numeric_gradient(const Functional& f, const Domain& domain, const Configuration& config, double h);

/// Row-major symmetric 2N×2N second-difference Hessian, symmetrized.
std::vector<double> numeric_hessian_matrix(const Functional& f, const Domain& domain, const Configuration& config,
                                           double h);

struct SpectrumReport {
    std::vector<double> eigenvalues;  // ascending
    double min_eigenvalue = 0.0;
    double max_abs_eigenvalue = 0.0;
    std::size_t num_near_zero = 0;
    /// Smallest eigenvalue outside the near-zero band, or the largest
    /// eigenvalue when every mode is near zero.
    double projected_min_eigenvalue = 0.0;
    std::vector<double> projected_min_eigenvector;
    double zero_tol = 0.0;
};

inline constexpr double kNearZeroRelTol = 1e-4;

/// Eigen-decomposes a symmetric row-major matrix; modes with
/// |λ| < near_zero_rel · max|λ| are counted as near-zero and projected out.
SpectrumReport analyze_spectrum(const std::vector<double>& sym_matrix, std::size_t dim,
                                double near_zero_rel = kNearZeroRelTol);

SpectrumReport numeric_hessian(const Functional& f, const Domain& domain, const Configuration& config, double h,
                               double near_zero_rel = kNearZeroRelTol);

/// projected_min_eigenvalue >= -rel_tol · max|λ|.
bool projected_psd(const SpectrumReport& report, double rel_tol = 1e-5);

}  // namespace cvt
