#pragma once

#include <complex>
#include <stdexcept>
#include <string>

namespace qsphere {

struct Error : std::runtime_error {
    explicit Error(const std::string &what) : std::runtime_error(what) {}
};

struct DomainError : Error {
    using Error::Error;
};

// Infinite-product truncation ran past the configured term cap.
struct TruncationFailure : Error {
    using Error::Error;
};

// Basic hypergeometric series with |z| >= 1 and no terminating parameter.
struct Nonconvergent : Error {
    using Error::Error;
};

// A connection-formula prefactor hit a zero denominator; carries the
// parameter relation that degenerated.
struct ContinuationSingular : Error {
    std::string relation;
    ContinuationSingular(const std::string &what, std::string rel)
        : Error(what), relation(std::move(rel)) {}
};

struct DivergentRatio : Error {
    using Error::Error;
};

struct GridMismatch : Error {
    using Error::Error;
};

struct IllConditioned : Error {
    double condition = 0.0;
    IllConditioned(const std::string &what, double cond) : Error(what), condition(cond) {}
};

struct ResidualTooLarge : Error {
    double residual = 0.0;
    ResidualTooLarge(const std::string &what, double res) : Error(what), residual(res) {}
};

struct MissingProvider : Error {
    using Error::Error;
};

struct SchemaError : Error {
    using Error::Error;
};

} // namespace qsphere
