#pragma once

#include <stdexcept>
#include <string>

namespace zonempc {

// Configuration-side problems (bad files, bad schemas, inconsistent setups)
// are kept separate from runtime stage failures so callers can map them to
// distinct process exit codes.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SchemaError : ConfigError {
    using ConfigError::ConfigError;
};

struct ParseError : ConfigError {
    ParseError(const std::string& msg, long line_no)
        : ConfigError(msg + " (line " + std::to_string(line_no) + ")"),
          line(line_no) {}
    long line;
};

struct StageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct IoError : StageError {
    IoError(const std::string& msg, const std::string& file_path)
        : StageError(msg + ": " + file_path), path(file_path) {}
    std::string path;
};

struct DivergenceError : StageError {
    using StageError::StageError;
};

struct TrainingError : StageError {
    using StageError::StageError;
};

struct NumericalError : StageError {
    using StageError::StageError;
};

struct AlignmentError : StageError {
    using StageError::StageError;
};

// Carries the raw estimate so a failed identification can be inspected.
struct IdentificationError : StageError {
    IdentificationError(const std::string& msg, double t1, double t2)
        : StageError(msg + " (theta = [" + std::to_string(t1) + ", " +
                     std::to_string(t2) + "])"),
          theta1(t1), theta2(t2) {}
    double theta1;
    double theta2;
};

} // namespace zonempc
