#pragma once

#include <stdexcept>
#include <string>

namespace xferlab {

struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad argument values: wrong shapes, non-finite entries, empty data.
struct InvalidInput : Error {
    explicit InvalidInput(const std::string& msg) : Error(msg) {}
};

// Matrix handed to from_psd has an eigenvalue below -1e-6 * ||H||_F.
struct NotPsd : Error {
    explicit NotPsd(const std::string& msg) : Error(msg) {}
};

// Training produced a non-finite loss.
struct TrainingDiverged : Error {
    explicit TrainingDiverged(const std::string& msg) : Error(msg) {}
};

// A quantity that must be nonnegative came out below the accepted
// roundoff band, i.e. the two evaluation routes disagree materially.
struct NumericalInconsistency : Error {
    explicit NumericalInconsistency(const std::string& msg) : Error(msg) {}
};

// Malformed or contradictory run configuration (CLI exit code 2).
struct ConfigError : Error {
    explicit ConfigError(const std::string& msg) : Error(msg) {}
};

// Filesystem trouble: missing inputs, unwritable outputs (CLI exit code 3).
struct IoError : Error {
    explicit IoError(const std::string& msg) : Error(msg) {}
};

}  // namespace xferlab
