#include "cvt/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <string>

namespace cvt {

// ---------------------------------------------------------------------------
// Lloyd

Configuration lloyd_step(const Domain& domain, const Configuration& config) {
    return Configuration{tessellate(domain, config).centroids};
}

namespace {

double centroid_residual(const Tessellation& tess, const Configuration& config) {
    double r = 0.0;
    for (std::size_t i = 0; i < config.size(); ++i) r = std::max(r, distance(config.points[i], tess.centroids[i]));
    return r;
}

}  // namespace

LloydResult lloyd_run(const Domain& domain, const Configuration& config0, double tol, std::size_t max_iter) {
    if (!(tol > 0.0)) throw Error(Errc::InvalidParams, "Lloyd tolerance must be positive");
    validate(domain, config0);
    LloydResult result;
    result.config = config0;
    if (max_iter == 0) return result;
    for (;;) {
        const Tessellation tess = tessellate(domain, result.config);
        const double residual = centroid_residual(tess, result.config);
        result.residuals.push_back(residual);
        result.energies.push_back(centroid_energy(tess, result.config));
        if (residual < tol) {
            result.converged = true;
            break;
        }
        if (result.iterations == max_iter) break;
        result.config.points = tess.centroids;
        ++result.iterations;
    }
    return result;
}

Configuration random_configuration(const Domain& domain, std::size_t n, CounterRng& rng) {
    double lo_x = std::numeric_limits<double>::infinity(), lo_y = lo_x;
    double hi_x = -lo_x, hi_y = -lo_x;
    for (const Vec2 v : domain.vertices()) {
        lo_x = std::min(lo_x, v.x);
        lo_y = std::min(lo_y, v.y);
        hi_x = std::max(hi_x, v.x);
        hi_y = std::max(hi_y, v.y);
    }
    Configuration config;
    config.points.reserve(n);
    while (config.size() < n) {
        const Vec2 p{lo_x + (hi_x - lo_x) * rng.uniform(), lo_y + (hi_y - lo_y) * rng.uniform()};
        if (!domain.contains(p)) continue;
        const bool clash = std::any_of(config.points.begin(), config.points.end(),
                                       [p](Vec2 q) { return distance(p, q) <= kCoincidenceTol; });
        if (!clash) config.points.push_back(p);
    }
    return config;
}

// ---------------------------------------------------------------------------
// Schedules

Schedule Schedule::geometric(double t0, double alpha, std::size_t steps) {
    Schedule s;
    s.kind = ScheduleKind::geometric;
    s.t0 = t0;
    s.alpha = alpha;
    s.steps = steps;
    return s;
}

Schedule Schedule::geometric_with_ratio(double t0, double final_ratio, std::size_t steps) {
    if (steps == 0) throw Error(Errc::InvalidSchedule, "steps must be >= 1");
    return geometric(t0, std::pow(final_ratio, 1.0 / static_cast<double>(steps)), steps);
}

Schedule Schedule::logarithmic(double c, std::size_t steps) {
    Schedule s;
    s.kind = ScheduleKind::logarithmic;
    s.c = c;
    s.t0 = c / std::log(2.0);
    s.steps = steps;
    return s;
}

void Schedule::validate() const {
    if (steps < 1) throw Error(Errc::InvalidSchedule, "steps must be >= 1");
    if (kind == ScheduleKind::geometric) {
        if (!(t0 > 0.0) || !std::isfinite(t0)) throw Error(Errc::InvalidSchedule, "t0 must be positive");
        if (!(alpha > 0.0 && alpha < 1.0)) throw Error(Errc::InvalidSchedule, "alpha must lie in (0, 1)");
        if (!(temperature(*this, steps - 1) > 0.0))
            throw Error(Errc::InvalidSchedule, "temperature underflows to zero before the last sweep");
    } else {
        if (!(c > 0.0) || !std::isfinite(c)) throw Error(Errc::InvalidSchedule, "c must be positive");
    }
}

double temperature(const Schedule& schedule, std::size_t t) {
    if (t >= schedule.steps)
        throw Error(Errc::IndexOutOfSchedule,
                    "sweep " + std::to_string(t) + " outside schedule of " + std::to_string(schedule.steps) + " steps");
    if (schedule.kind == ScheduleKind::geometric) return schedule.t0 * std::pow(schedule.alpha, static_cast<double>(t));
    return schedule.c / std::log(static_cast<double>(t) + 2.0);
}

// ---------------------------------------------------------------------------
// Parameters

AnnealParams AnnealParams::defaults_for(const Domain& domain, std::uint64_t seed, std::uint64_t stream) {
    AnnealParams p;
    p.proposal_std = 0.05 * domain.diameter();
    p.seed = seed;
    p.stream = stream;
    return p;
}

void AnnealParams::validate(const Domain& domain) const {
    if (!(proposal_std > 0.0) || !(proposal_std < domain.diameter()))
        throw Error(Errc::InvalidParams, "proposal_std must lie in (0, diameter)");
    if (record_every < 1) throw Error(Errc::InvalidParams, "record_every must be >= 1");
    if (quadrature < 2) throw Error(Errc::InvalidQuadrature, "quadrature must be >= 2");
    if (adaptive_step && adapt_window < 1) throw Error(Errc::InvalidParams, "adapt_window must be >= 1");
}

// ---------------------------------------------------------------------------
// ChargeSystem

ChargeSystem::ChargeSystem(const Domain& domain, Configuration config, const Quadrature& quad,
                           std::span<const Vec2> anchor)
    : domain_(&domain),
      config_(std::move(config)),
      field_(domain, config_.size(), quad),
      anchor_(anchor.begin(), anchor.end()) {
    validate(domain, config_);
    boundary_.reserve(config_.size());
    for (const Vec2 p : config_.points) boundary_.push_back(field_.value_inside(p));
    energy_ = full_energy();
}

double ChargeSystem::anchor_at(Vec2 p) const {
    double total = 0.0;
    for (const Vec2 a : anchor_) total += 1.0 / distance(p, a);
    return total;
}

double ChargeSystem::full_energy() const {
    double total = pair_energy(config_);
    for (const Vec2 p : config_.points) total += field_.value_inside(p) + anchor_at(p);
    return total;
}

bool ChargeSystem::admissible(std::size_t i, Vec2 p) const {
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !domain_->contains(p)) return false;
    for (std::size_t j = 0; j < config_.size(); ++j)
        if (j != i && distance(p, config_.points[j]) <= kCoincidenceTol) return false;
    return true;
}

double ChargeSystem::delta(std::size_t i, Vec2 p) const {
    const Vec2 old = config_.points[i];
    double pair = 0.0;
    for (std::size_t j = 0; j < config_.size(); ++j) {
        if (j == i) continue;
        const Vec2 q = config_.points[j];
        pair += 1.0 / distance(p, q) - 1.0 / distance(old, q);
    }
    double d = 2.0 * pair + (field_.value_inside(p) - boundary_[i]);
    if (!anchor_.empty()) d += anchor_at(p) - anchor_at(old);
    return d;
}

void ChargeSystem::move(std::size_t i, Vec2 p, double delta_u) {
    config_.points[i] = p;
    boundary_[i] = field_.value_inside(p);
    energy_ += delta_u;
}

// ---------------------------------------------------------------------------
// Metropolis

bool metropolis_accept(double delta_u, double temperature, CounterRng& rng) {
    if (delta_u <= 0.0) return true;
    if (!(temperature > 0.0)) return false;
    return rng.uniform() < std::exp(-delta_u / temperature);
}

SweepStats metropolis_sweep(ChargeSystem& system, double temperature, double proposal_std, CounterRng& rng) {
    SweepStats stats;
    std::vector<std::size_t> order(system.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(std::span<std::size_t>(order));
    for (const std::size_t i : order) {
        const Vec2 old = system.config().points[i];
        const double dx = rng.normal();
        const double dy = rng.normal();
        const Vec2 p{old.x + proposal_std * dx, old.y + proposal_std * dy};
        ++stats.proposals;
        // Outside the wall the potential is infinite: reject without evaluating U.
        if (!system.admissible(i, p)) {
            ++stats.exterior_rejections;
            continue;
        }
        const double d = system.delta(i, p);
        if (d > 0.0) ++stats.uphill_proposals;
        if (metropolis_accept(d, temperature, rng)) {
            system.move(i, p, d);
            ++stats.accepted;
            stats.accumulated_delta += d;
            if (d > 0.0) ++stats.uphill_accepted;
        }
    }
    return stats;
}

SweepResult metropolis_sweep(const Domain& domain, const Configuration& config, double temperature,
                             const AnnealParams& params, CounterRng& rng) {
    if (!(temperature > 0.0)) throw Error(Errc::InvalidParams, "temperature must be positive");
    params.validate(domain);
    ChargeSystem system(domain, config, Quadrature(params.quadrature));
    const SweepStats stats = metropolis_sweep(system, temperature, params.proposal_std, rng);
    return {system.config(), stats.accepted};
}

namespace {

void assert_confined(const Domain& domain, const Configuration& config) {
    for (const Vec2 p : config.points)
        if (!domain.contains(p)) throw std::logic_error("annealer produced an exterior generator");
}

}  // namespace

RunRecord anneal(const Domain& domain, const Configuration& config0, const Schedule& schedule,
                 const AnnealParams& params, std::span<const Vec2> anchor) {
    schedule.validate();
    params.validate(domain);
    if (config0.size() == 0) throw Error(Errc::NoGenerators, "annealing needs at least one generator");
    validate(domain, config0);

    const Quadrature quad(params.quadrature);
    ChargeSystem system(domain, config0, quad, anchor);
    CounterRng rng(params.seed, params.stream);

    RunRecord record;
    record.schedule = schedule;
    record.seed = params.seed;
    record.stream = params.stream;
    record.proposal_std_initial = params.proposal_std;

    double step = params.proposal_std;
    std::size_t proposals = 0, accepted = 0, uphill = 0, uphill_accepted = 0;
    std::size_t window_accepted = 0;
    for (std::size_t t = 0; t < schedule.steps; ++t) {
        const SweepStats stats = metropolis_sweep(system, temperature(schedule, t), step, rng);
        proposals += stats.proposals;
        accepted += stats.accepted;
        uphill += stats.uphill_proposals;
        uphill_accepted += stats.uphill_accepted;
        window_accepted += stats.accepted;
        if (params.adaptive_step && (t + 1) % params.adapt_window == 0) {
            const double rate =
                static_cast<double>(window_accepted) / static_cast<double>(params.adapt_window * system.size());
            if (rate < params.adapt_threshold) {
                step *= 0.5;
                ++record.step_halvings;
            }
            window_accepted = 0;
        }
        if (t % params.record_every == 0 || t + 1 == schedule.steps) {
            assert_confined(domain, system.config());
            record.trajectory.push_back({t, system.full_energy()});
        }
    }

    record.final_config = system.config();
    record.final_energy = electrostatic_energy(record.final_config, domain, quad);
    record.final_hamiltonian = system.full_energy();
    record.accept_rate = proposals ? static_cast<double>(accepted) / static_cast<double>(proposals) : 0.0;
    record.uphill_accept_rate = uphill ? static_cast<double>(uphill_accepted) / static_cast<double>(uphill) : 0.0;
    record.proposal_std_final = step;
    return record;
}

std::size_t polish(ChargeSystem& system, double proposal_std, CounterRng& rng, const PolishOptions& options) {
    const double min_step = options.min_step_rel * system.domain().diameter();
    double step = proposal_std;
    std::size_t sweeps = 0;
    std::vector<std::size_t> order(system.size());
    while (step >= min_step) {
        std::size_t streak = 0;
        std::size_t stage_sweeps = 0;
        while (streak < options.patience && stage_sweeps < options.max_sweeps_per_stage) {
            std::iota(order.begin(), order.end(), std::size_t{0});
            rng.shuffle(std::span<std::size_t>(order));
            for (const std::size_t i : order) {
                const Vec2 old = system.config().points[i];
                const double dx = rng.normal();
                const double dy = rng.normal();
                const Vec2 p{old.x + step * dx, old.y + step * dy};
                double d = 0.0;
                if (system.admissible(i, p) && (d = system.delta(i, p)) <= 0.0) {
                    system.move(i, p, d);
                    streak = 0;
                } else {
                    ++streak;
                }
            }
            ++stage_sweeps;
        }
        sweeps += stage_sweeps;
        step *= 0.5;
    }
    return sweeps;
}

void polish_record(RunRecord& record, const Domain& domain, const AnnealParams& params, std::span<const Vec2> anchor,
                   const PolishOptions& options) {
    const Quadrature quad(params.quadrature);
    ChargeSystem system(domain, record.final_config, quad, anchor);
    // Separate stream so polishing never perturbs the annealing sequence.
    CounterRng rng(params.seed, params.stream ^ 0x9E3779B97F4A7C15ULL);
    record.polish_sweeps = polish(system, record.proposal_std_final, rng, options);
    assert_confined(domain, system.config());
    record.final_config = system.config();
    record.final_energy = electrostatic_energy(record.final_config, domain, quad);
    record.final_hamiltonian = system.full_energy();
}

}  // namespace cvt
