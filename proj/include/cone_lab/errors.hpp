#pragma once

#include <stdexcept>
#include <string>

namespace cone_lab {

enum class ErrorKind {
    InvalidModel,
    InvalidArgument,
    SolverNonconvergence,
    Divergent,
    Unsupported,
    Config,
    Verification
};

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    ErrorKind kind() const { return kind_; }

private:
    ErrorKind kind_;
};

// Carries the best residual reached before the solver gave up.
class SolverError : public Error {
public:
    SolverError(const std::string& what, double best_residual)
        : Error(ErrorKind::SolverNonconvergence, what), best_residual_(best_residual) {}
    double best_residual() const { return best_residual_; }

private:
    double best_residual_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace cone_lab
