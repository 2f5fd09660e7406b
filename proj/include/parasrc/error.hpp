#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace parasrc {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

/// A point or time outside the closure of the domain it was evaluated on.
class DomainError : public Error {
public:
    using Error::Error;
};

/// The observation region does not coincide with mesh lines.
class MisalignmentError : public Error {
public:
    using Error::Error;
};

class SingularGeometryError : public Error {
public:
    using Error::Error;
};

/// Factorization broke down; `pivot` is the first column that failed.
class SingularSystemError : public Error {
public:
    SingularSystemError(const std::string& what, std::ptrdiff_t pivot)
        : Error(what), pivot_(pivot) {}
    std::ptrdiff_t pivot() const noexcept { return pivot_; }

private:
    std::ptrdiff_t pivot_;
};

/// Iterative refinement did not reach the residual target.
class IllConditionedError : public Error {
public:
    IllConditionedError(const std::string& what, double condition, double residual)
        : Error(what), condition_(condition), residual_(residual) {}
    double condition() const noexcept { return condition_; }
    double residual() const noexcept { return residual_; }

private:
    double condition_;
    double residual_;
};

class ForwardSolveError : public Error {
public:
    using Error::Error;
};

class InternalError : public Error {
public:
    using Error::Error;
};

#define PARASRC_REQUIRE(cond, Exc, msg)                                        \
    do {                                                                       \
        if (!(cond)) throw Exc(msg);                                           \
    } while (0)

} // namespace parasrc
