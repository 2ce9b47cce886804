#pragma once

#include <stdexcept>
#include <string>

namespace dselab {

struct Divergence : std::runtime_error {
    explicit Divergence(const std::string& what) : std::runtime_error(what) {}
};

struct NotPSD : std::runtime_error {
    explicit NotPSD(const std::string& what) : std::runtime_error(what) {}
};

struct SingularInnovation : std::runtime_error {
    explicit SingularInnovation(const std::string& what) : std::runtime_error(what) {}
};

struct DegenerateScale : std::runtime_error {
    explicit DegenerateScale(const std::string& what) : std::runtime_error(what) {}
};

struct DegenerateMeasurement : std::runtime_error {
    explicit DegenerateMeasurement(const std::string& what) : std::runtime_error(what) {}
};

struct DegenerateDenominator : std::runtime_error {
    explicit DegenerateDenominator(const std::string& what) : std::runtime_error(what) {}
};

struct ParseError : std::runtime_error {
    explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

struct GridError : std::runtime_error {
    explicit GridError(const std::string& what) : std::runtime_error(what) {}
};

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

struct CalibrationError : std::runtime_error {
    explicit CalibrationError(const std::string& what) : std::runtime_error(what) {}
};

struct MissingArtifact : std::runtime_error {
    explicit MissingArtifact(const std::string& what) : std::runtime_error(what) {}
};

} // namespace dselab
