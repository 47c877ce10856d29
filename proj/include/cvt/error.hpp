#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cvt {

enum class Errc {
    TooFewVertices,
    NonConvex,
    Degenerate,
    InvalidConfiguration,
    CoincidentGenerators,
    EmptyCell,
    DegenerateCell,
    MismatchedSizes,
    PointOutsideDomain,
    PerturbationExitsDomain,
    InvalidQuadrature,
    InvalidSchedule,
    InvalidParams,
    IndexOutOfSchedule,
    EmptyInput,
    UnsupportedDomainForTiling,
    InvalidAnchor,
    NoGenerators,
    TooFewClusters,
};

std::string_view to_string(Errc code);

/// Single exception type for the library; `code()` distinguishes the failure.
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

}  // namespace cvt
