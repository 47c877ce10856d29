#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "cvt/energy.hpp"
#include "cvt/geometry.hpp"
#include "cvt/rng.hpp"

namespace cvt {

// ---------------------------------------------------------------------------
// Lloyd

/// Moves every generator to the centroid of its current cell.
Configuration lloyd_step(const Domain& domain, const Configuration& config);

struct LloydResult {
    Configuration config;
    /// max_i ‖x_i − c_i‖ of each visited iterate, including the last.
    std::vector<double> residuals;
    /// Centroid energy of each visited iterate.
    std::vector<double> energies;
    std::size_t iterations = 0;  // lloyd steps taken
    bool converged = false;      // false means max_iter was reached
};

LloydResult lloyd_run(const Domain& domain, const Configuration& config0, double tol, std::size_t max_iter);

/// Uniform sample of n distinct generators strictly inside the domain.
Configuration random_configuration(const Domain& domain, std::size_t n, CounterRng& rng);

// ---------------------------------------------------------------------------
// Schedules

enum class ScheduleKind { geometric, logarithmic };

struct Schedule {
    ScheduleKind kind = ScheduleKind::geometric;
    double t0 = 1.0;
    double alpha = 0.99;  // geometric only
    std::size_t steps = 1000;
    double c = 1.0;  // logarithmic only

    static Schedule geometric(double t0, double alpha, std::size_t steps);
    /// Geometric schedule whose temperature after `steps` sweeps is t0·final_ratio.
    static Schedule geometric_with_ratio(double t0, double final_ratio, std::size_t steps);
    static Schedule logarithmic(double c, std::size_t steps);

    /// Throws InvalidSchedule.
    void validate() const;

    friend bool operator==(const Schedule&, const Schedule&) = default;
};

/// T₀·αᵗ or c / ln(t + 2). Throws IndexOutOfSchedule unless 0 <= t < steps.
double temperature(const Schedule& schedule, std::size_t t);

// ---------------------------------------------------------------------------
// Metropolis dynamics

struct AnnealParams {
    double proposal_std = 0.05;  // length units
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;
    std::size_t record_every = 1;
    std::size_t quadrature = Quadrature::kDefaultPointsPerEdge;
    /// Halve proposal_std whenever the acceptance rate over a window falls below the threshold.
    bool adaptive_step = true;
    std::size_t adapt_window = 50;
    double adapt_threshold = 0.1;

    /// 0.05 · diameter with the remaining defaults.
    static AnnealParams defaults_for(const Domain& domain, std::uint64_t seed, std::uint64_t stream = 0);
    /// Throws InvalidParams.
    void validate(const Domain& domain) const;

    friend bool operator==(const AnnealParams&, const AnnealParams&) = default;
};

/// Interior unit charges in the boundary field, optionally with fixed exterior
/// unit charges. Keeps per-generator boundary potentials so that a single-move
/// energy change costs O(N + boundary nodes + anchors).
class ChargeSystem {
public:
    ChargeSystem(const Domain& domain, Configuration config, const Quadrature& quad,
                 std::span<const Vec2> anchor = {});

    const Configuration& config() const { return config_; }
    const Domain& domain() const { return *domain_; }
    std::size_t size() const { return config_.size(); }

    /// Running energy, updated incrementally by `move`.
    double energy() const { return energy_; }
    /// Energy recomputed from scratch.
    double full_energy() const;

    /// Energy change for moving generator i to p; p must be strictly inside.
    double delta(std::size_t i, Vec2 p) const;
    /// Applies a move whose change was computed by `delta`.
    void move(std::size_t i, Vec2 p, double delta_u);
    /// Boundary potential at p (p inside).
    double boundary_at(Vec2 p) const { return field_.value_inside(p); }
    /// Interaction of a unit charge at p with every anchor charge.
    double anchor_at(Vec2 p) const;

    /// True when p is a legal position for generator i: strictly inside and
    /// not coincident with another generator.
    bool admissible(std::size_t i, Vec2 p) const;

private:
    const Domain* domain_;
    Configuration config_;
    BoundaryField field_;
    std::vector<Vec2> anchor_;
    std::vector<double> boundary_;  // per-generator cached boundary potential
    double energy_ = 0.0;
};

/// Metropolis rule: always accept ΔU <= 0; otherwise accept with probability
/// exp(−ΔU/T). T == 0 rejects every uphill move without drawing.
bool metropolis_accept(double delta_u, double temperature, CounterRng& rng);

struct SweepStats {
    std::size_t proposals = 0;
    std::size_t accepted = 0;
    std::size_t exterior_rejections = 0;
    std::size_t uphill_proposals = 0;
    std::size_t uphill_accepted = 0;
    /// Sum of accepted ΔU.
    double accumulated_delta = 0.0;
};

/// One sweep: every generator visited once in a fresh random order.
SweepStats metropolis_sweep(ChargeSystem& system, double temperature, double proposal_std, CounterRng& rng);

struct SweepResult {
    Configuration config;
    std::size_t accepted = 0;
};

SweepResult metropolis_sweep(const Domain& domain, const Configuration& config, double temperature,
                             const AnnealParams& params, CounterRng& rng);

struct TrajectoryPoint {
    std::size_t sweep = 0;
    double energy = 0.0;
    friend bool operator==(const TrajectoryPoint&, const TrajectoryPoint&) = default;
};

struct RunRecord {
    Configuration final_config;
    EnergyReport final_energy;
    std::vector<TrajectoryPoint> trajectory;
    Schedule schedule;
    double accept_rate = 0.0;
    double uphill_accept_rate = 0.0;
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;
    double proposal_std_initial = 0.0;
    double proposal_std_final = 0.0;
    std::size_t step_halvings = 0;
    /// U including anchor interactions; equals final_energy.total_electrostatic
    /// for unanchored runs.
    double final_hamiltonian = 0.0;
    std::size_t polish_sweeps = 0;

    friend bool operator==(const RunRecord&, const RunRecord&) = default;
};

/// Runs schedule.steps sweeps at T = temperature(schedule, t). Deterministic
/// in (seed, stream). `anchor` adds fixed exterior unit charges.
RunRecord anneal(const Domain& domain, const Configuration& config0, const Schedule& schedule,
                 const AnnealParams& params, std::span<const Vec2> anchor = {});

struct PolishOptions {
    std::size_t patience = 500;     // consecutive rejections that end a stage
    double min_step_rel = 1e-7;     // stop once proposal_std < min_step_rel · diameter
    std::size_t max_sweeps_per_stage = 20000;
};

/// Zero-temperature descent: proposals are accepted only when ΔU <= 0. Each
/// stage ends after `patience` consecutive rejections and halves the step.
/// Returns the number of sweeps performed.
std::size_t polish(ChargeSystem& system, double proposal_std, CounterRng& rng, const PolishOptions& options = {});

/// Copies final config/energy out of `system` into `record` after polishing.
void polish_record(RunRecord& record, const Domain& domain, const AnnealParams& params,
                   std::span<const Vec2> anchor = {}, const PolishOptions& options = {});

}  // namespace cvt
