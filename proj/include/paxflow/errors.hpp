#pragma once

#include <stdexcept>

namespace paxflow {

// Input file violates the expected schema (bad/missing header, wrong columns).
class SchemaError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid run configuration: missing files, empty tables, bad parameters.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Joined input data is unusable (e.g. nothing matches across sources).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Model fitting failed: degenerate data, infeasible family, too few points.
class CalibrationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Simulation precondition broken (event scheduled in the past, staffing gap).
class SimulationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Analysis precondition broken (empty bin intersection, too few points).
class AnalysisError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace paxflow
