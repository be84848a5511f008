#pragma once

#include <stdexcept>
#include <string>

namespace flexstage {

/// Process exit codes used by the command line tool.
enum class ExitCode : int {
    success = 0,
    config_error = 2,
    infeasible_design = 3,
    numerical_failure = 4,
};

/// Base class for all errors raised by the library.
class Error : public std::runtime_error {
public:
    Error(const std::string& what, ExitCode code)
        : std::runtime_error(what), code_(code) {}
    ExitCode code() const noexcept { return code_; }

private:
    ExitCode code_;
};

/// Invalid input: bad geometry, malformed configuration, bad arguments.
class InputError : public Error {
public:
    explicit InputError(const std::string& what) : Error(what, ExitCode::config_error) {}
};

/// A design problem that has no acceptable solution (constraints, robustness, placement).
class InfeasibleError : public Error {
public:
    explicit InfeasibleError(const std::string& what)
        : Error(what, ExitCode::infeasible_design) {}
};

/// Solver breakdown: factorization failure, non-convergence, singular matrices.
class NumericalError : public Error {
public:
    explicit NumericalError(const std::string& what)
        : Error(what, ExitCode::numerical_failure) {}
};

}  // namespace flexstage
