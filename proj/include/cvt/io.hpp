#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "cvt/energy.hpp"
#include "cvt/geometry.hpp"
#include "cvt/laam.hpp"
#include "cvt/optimize.hpp"

namespace cvt::io {

using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

/// Invalid experiment configuration; `field()` names the offending JSON path.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string field, const std::string& what)
        : std::runtime_error("config field '" + field + "': " + what), field_(std::move(field)) {}
    const std::string& field() const { return field_; }

private:
    std::string field_;
};

// Value <-> JSON. Doubles go through nlohmann's shortest round-trip printer, so
// parse(dump(x)) reproduces every binary64 exactly.
json to_json(Vec2 p);
Vec2 vec2_from_json(const json& j);
json to_json(const Configuration& c);
Configuration configuration_from_json(const json& j);
json to_json(const Domain& d);
json to_json(const EnergyReport& r);
EnergyReport energy_report_from_json(const json& j);
json to_json(const Schedule& s);
Schedule schedule_from_json(const json& j);
json to_json(const RunRecord& r);
RunRecord run_record_from_json(const json& j);
json to_json(const SpectrumReport& s);
SpectrumReport spectrum_from_json(const json& j);
json to_json(const MinimaAtlas& a);
MinimaAtlas atlas_from_json(const json& j);
json to_json(const LatticeAnchor& a);
LatticeAnchor anchor_from_json(const json& j);
std::string to_string(TilingKind k);

/// Cells as <polygon>, generators as <circle>, domain outline as <path>.
std::string tessellation_svg(const Domain& domain, const Tessellation& tess, const Configuration& config);

/// Writes through a sibling temporary file and renames it into place.
void write_atomic(const std::filesystem::path& path, const std::string& contents);
std::string read_file(const std::filesystem::path& path);

/// Canonical JSON text for artifacts (2-space indent, trailing newline).
std::string dump(const json& j);

struct ExperimentConfig {
    int schema_version = kSchemaVersion;
    json domain_spec;
    Domain domain = Domain::unit_square();
    std::size_t n_points = 0;
    std::optional<Configuration> initial;
    std::vector<Schedule> schedules;
    std::uint64_t seed = 0;
    std::size_t seeds_per_schedule = 1;
    std::size_t quadrature = Quadrature::kDefaultPointsPerEdge;
    double proposal_std_rel = 0.05;
    bool adaptive_step = true;
    std::size_t record_every = 0;
    double lloyd_tol = 1e-10;
    std::size_t max_iter = 10000;
    ClusterTolerances cluster;
    RecoverySettings recovery;
    double spectrum_rel_tol = 1e-5;
    std::string output_dir = "out";
    std::size_t jobs = 1;
};

/// Validates every field against the module preconditions; throws ConfigError.
ExperimentConfig parse_config(const json& j);
ExperimentConfig load_config(const std::filesystem::path& path);

}  // namespace cvt::io
