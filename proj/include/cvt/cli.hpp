#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include "cvt/io.hpp"

namespace cvt::cli {

enum ExitCode : int {
    kOk = 0,
    kConfigError = 1,
    kNotConverged = 2,
    kRecoveryFailure = 3,
    kSpectrumViolation = 4,
};

/// Command-line values that take precedence over the config file.
struct Overrides {
    std::optional<std::string> out;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> jobs;
    std::optional<std::size_t> quadrature;
};

/// Loads the config and applies overrides; throws io::ConfigError.
io::ExperimentConfig prepare(const std::filesystem::path& config_path, const Overrides& overrides);

// Each command returns an ExitCode. Diagnostics go to `err`, progress to `log`.
int cmd_lloyd(const io::ExperimentConfig& cfg, std::ostream& log, std::ostream& err);
int cmd_anneal(const io::ExperimentConfig& cfg, std::ostream& log, std::ostream& err);
int cmd_laam(const io::ExperimentConfig& cfg, std::ostream& log, std::ostream& err);
int cmd_verify(const io::ExperimentConfig& cfg, std::ostream& log, std::ostream& err);
int cmd_energy(const io::ExperimentConfig& cfg, std::ostream& log, std::ostream& err);

/// Full front end: parses argv, loads the config, dispatches.
int run(int argc, const char* const* argv, std::ostream& log, std::ostream& err);

}  // namespace cvt::cli
