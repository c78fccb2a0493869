#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace afdc {

enum class ErrorCode {
    // geometry / parsing
    EmptyFile,
    MalformedLine,
    TooFewPoints,
    CountMismatch,
    DegenerateChord,
    NonPositiveClearance,
    SurfaceSplitFailure,
    // raster
    PolygonOutOfWindow,
    // aero
    GroundContact,
    SingularSystem,
    // nn / model
    ShapeMismatch,
    OddSpatialDim,
    BatchTooSmall,
    IndivisibleSpatialDims,
    NonFiniteValue,
    // dataset / io
    CorruptFile,
    VersionMismatch,
    ChecksumMismatch,
    NonPositiveStep,
    AllSamplesFailed,
    TooFewAirfoils,
    DegenerateLabels,
    EmptySplit,
    // generic precondition violation
    InvalidArgument,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(std::string(error_code_name(code)) + ": " + message), code_(code) {}

    Error(ErrorCode code, std::size_t line, const std::string& message)
        : std::runtime_error(std::string(error_code_name(code)) + " at line " +
                             std::to_string(line) + ": " + message),
          code_(code), line_(line) {}

    ErrorCode code() const noexcept { return code_; }

    // 1-based source line for MalformedLine-style errors, 0 otherwise.
    std::size_t line() const noexcept { return line_; }

private:
    ErrorCode code_;
    std::size_t line_ = 0;
};

} // namespace afdc
