#pragma once

#include <stdexcept>
#include <string>

namespace rotator {

struct SimError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Euler chart coordinate singularity (|sin alpha| below margin).
struct PoleSingularity : SimError {
    using SimError::SimError;
};

// Wavefunction amplitude below the node threshold where a guidance or
// source quantity divides by rho or psi*.
struct NodeSingularity : SimError {
    using SimError::SimError;
};

struct InvalidOrder : SimError {
    using SimError::SimError;
};

struct CurlMismatch : SimError {
    using SimError::SimError;
};

struct PacketTooWide : SimError {
    using SimError::SimError;
};

struct UnstableStep : SimError {
    using SimError::SimError;
};

struct UnsupportedField : SimError {
    using SimError::SimError;
};

struct ResampleOutOfBand : SimError {
    using SimError::SimError;
};

struct SamplingFailure : SimError {
    using SimError::SimError;
};

struct SchemaError : SimError {
    explicit SchemaError(const std::string& field, const std::string& what)
        : SimError("schema error at " + field + ": " + what), field_path(field) {}
    std::string field_path;
};

struct IOError : SimError {
    using SimError::SimError;
};

}  // namespace rotator
