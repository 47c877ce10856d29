#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "cvt/geometry.hpp"
#include "cvt/optimize.hpp"

namespace cvt {

/// Isometry- and relabeling-invariant fingerprint of a configuration.
struct Signature {
    std::vector<double> sorted_pair_distances;  // N(N−1)/2 entries, nondecreasing
    double energy_u = 0.0;
};

Signature make_signature(const Configuration& config, double energy_u);

/// L∞ distance between the two sorted pair-distance lists after each is divided
/// by its own mean, so uniform rescaling of a configuration does not register.
/// Zero when both configurations have fewer than two generators.
double signature_distance(const Signature& a, const Signature& b);

struct ClusterTolerances {
    double dist_tol = 1e-2;
    double energy_tol = 1e-3;
};

/// Single-linkage rule: signature distance <= dist_tol and
/// |ΔU| <= energy_tol · max(|U_a|, |U_b|).
bool same_minimum(const Signature& a, const Signature& b, const ClusterTolerances& tol);

struct MinimumCluster {
    Configuration representative;
    std::size_t representative_run = 0;
    double energy_u = 0.0;
    double energy_centroid = 0.0;
    double gap = 0.0;
    std::vector<std::size_t> members;  // run indices, ascending
    /// Smallest sweep count whose runs land here with frequency >= 0.5.
    std::optional<std::size_t> trap_timescale;
};

struct MinimaAtlas {
    /// Sorted by energy; the global cluster comes first.
    std::vector<MinimumCluster> clusters;
    std::size_t global_index = 0;
};

inline constexpr double kTrapFrequency = 0.5;

/// Throws EmptyInput. Partition is independent of record order.
MinimaAtlas cluster_minima(std::span<const RunRecord> records, const ClusterTolerances& tol = {});

/// Index of the cluster whose representative matches `sig` under `tol`
/// (closest signature wins), or nullopt.
std::optional<std::size_t> classify(const MinimaAtlas& atlas, const Signature& sig, const ClusterTolerances& tol);

// ---------------------------------------------------------------------------
// Lattice anchors

enum class TilingKind { translate, mirror };

struct LatticeAnchor {
    std::vector<Vec2> points;  // unit charges, all strictly outside the domain
    std::size_t layers = 0;
    TilingKind construction = TilingKind::translate;
};

/// Images of `config` under the first `layers` rings of the tiling, excluding
/// the domain itself. Translate-tiling needs a parallelogram; mirror-tiling
/// reflects through edges and corners of any convex polygon. Throws
/// InvalidAnchor (layers == 0), UnsupportedDomainForTiling or NoGenerators.
LatticeAnchor build_anchor(const Configuration& config, const Domain& domain, std::size_t layers,
                           TilingKind construction);

/// Anneals U + Σ_i Σ_a 1/‖x_i − a‖ with the anchor held fixed, then polishes.
/// Throws NoGenerators.
RunRecord anchored_optimize(const Domain& domain, const LatticeAnchor& anchor, const Configuration& config0,
                            const Schedule& schedule, const AnnealParams& params);

// ---------------------------------------------------------------------------
// Rate sweep

struct SweepSettings {
    std::uint64_t base_seed = 0;
    double proposal_std_rel = 0.05;  // fraction of the diameter
    std::size_t quadrature = Quadrature::kDefaultPointsPerEdge;
    std::size_t jobs = 1;
    bool polish = true;
    bool adaptive_step = true;
    /// Trajectory stride; 0 picks steps / 100.
    std::size_t record_every = 0;
    /// Shared start for every run instead of per-seed random starts.
    std::optional<Configuration> start;
    PolishOptions polish_options;
};

/// For schedule s and seed slot k the run uses seed base_seed + k; the start
/// configuration and the chain are drawn from independent streams of that seed,
/// so every schedule sees the same seed pool. Records are ordered
/// schedule-major.
std::vector<RunRecord> sweep_rates(const Domain& domain, std::size_t n_points, std::span<const Schedule> schedules,
                                   std::size_t seeds_per_schedule, const SweepSettings& settings = {});

/// Start configuration of seed slot k, shared by every schedule.
Configuration sweep_start(const Domain& domain, std::size_t n_points, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Gap/timescale relation

struct GapTimescaleRow {
    std::size_t cluster = 0;
    double gap = 0.0;
    std::optional<std::size_t> trap_timescale;
};

struct GapTimescaleTable {
    std::vector<GapTimescaleRow> rows;  // ascending gap
    /// Spearman rank correlation of (gap, 1/τ) over non-global rows; a missing
    /// timescale counts as 1/τ = 0. Absent when undefined.
    std::optional<double> spearman;
};

/// Throws TooFewClusters when the atlas has fewer than two clusters.
GapTimescaleTable gap_timescale_table(const MinimaAtlas& atlas);

/// Spearman correlation with average ranks for ties; nullopt when either side
/// is constant or fewer than two samples.
std::optional<double> spearman_correlation(std::span<const double> a, std::span<const double> b);

// ---------------------------------------------------------------------------
// Anchored recovery

struct RecoverySettings {
    std::size_t max_layers = 3;
    std::size_t trials = 10;
    std::size_t required = 8;
    double perturbation_rel = 0.05;  // displacement length, fraction of the diameter
    /// Re-optimization is local: small steps at a near-zero temperature.
    double proposal_std_rel = 0.01;
    TilingKind construction = TilingKind::translate;
    Schedule schedule = Schedule::geometric(1e-6, 0.99, 200);
    std::uint64_t seed = 0;
    std::size_t quadrature = Quadrature::kDefaultPointsPerEdge;
    ClusterTolerances tolerances;
};

struct RecoveryResult {
    std::size_t cluster = 0;
    std::size_t layers = 0;  // smallest passing layer count, or the last one tried
    std::size_t successes = 0;
    std::size_t trials = 0;
    bool passed = false;
    LatticeAnchor anchor;
    /// Signature distance of each trial's end state to the source representative.
    std::vector<double> distances;
};

/// Each generator displaced by `length` in a uniformly random direction,
/// redrawn until it stays strictly inside and distinct.
Configuration perturb(const Domain& domain, const Configuration& config, double length, CounterRng& rng);

/// Searches layers = 1..max_layers for the smallest anchor under which at
/// least `required` of `trials` perturbed restarts return to the cluster.
RecoveryResult minimal_anchor(const Domain& domain, const MinimaAtlas& atlas, std::size_t cluster,
                              const RecoverySettings& settings);

}  // namespace cvt
