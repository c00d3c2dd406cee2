#pragma once

#include <stdexcept>
#include <string>

namespace resokit {

// Each module raises errors of its own kind so the CLI can map them onto
// distinct exit codes.
enum class ErrorKind {
    Domain = 1,       // precondition/invariant violation on numeric inputs
    Io,               // missing file, unwritable output
    Parse,            // malformed Touchstone/CSV/config content
    Solver,           // mesh generation or linear solve failure
    Fit,              // resonance fit non-convergence or unphysical result
    Tls,              // TLS model fit failures
    DynamicRange,     // TLS sweep too narrow to constrain the model
    Calibration,      // attenuation chain problems
    Stats,            // fluctuation statistics input problems
    Usage,            // bad command line / run configuration
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

    ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

class DomainError : public Error {
public:
    explicit DomainError(const std::string& what) : Error(ErrorKind::Domain, what) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error(ErrorKind::Io, what) {}
};

class ParseError : public Error {
public:
    ParseError(const std::string& what, int line = 0)
        : Error(ErrorKind::Parse, line > 0 ? "line " + std::to_string(line) + ": " + what : what),
          line_(line) {}

    int line() const noexcept { return line_; }

private:
    int line_;
};

class SolverError : public Error {
public:
    explicit SolverError(const std::string& what) : Error(ErrorKind::Solver, what) {}
};

class FitError : public Error {
public:
    explicit FitError(const std::string& what) : Error(ErrorKind::Fit, what) {}
};

class TlsFitError : public Error {
public:
    explicit TlsFitError(const std::string& what) : Error(ErrorKind::Tls, what) {}
};

class DynamicRangeError : public Error {
public:
    explicit DynamicRangeError(const std::string& what) : Error(ErrorKind::DynamicRange, what) {}
};

class CalibrationError : public Error {
public:
    explicit CalibrationError(const std::string& what) : Error(ErrorKind::Calibration, what) {}
};

class StatsError : public Error {
public:
    explicit StatsError(const std::string& what) : Error(ErrorKind::Stats, what) {}
};

class UsageError : public Error {
public:
    explicit UsageError(const std::string& what) : Error(ErrorKind::Usage, what) {}
};

/// Process exit status for an error of the given kind (0 is reserved for success).
inline int exit_code(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::Usage: return 2;
    case ErrorKind::Io: return 3;
    case ErrorKind::Parse: return 4;
    case ErrorKind::Domain: return 5;
    case ErrorKind::Solver: return 6;
    case ErrorKind::Fit: return 7;
    case ErrorKind::Tls: return 8;
    case ErrorKind::DynamicRange: return 9;
    case ErrorKind::Calibration: return 10;
    case ErrorKind::Stats: return 11;
    }
    return 1;
}

} // namespace resokit
