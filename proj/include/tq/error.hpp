#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace tq {

// Base for all library errors. The CLI maps UsageError to exit code 2 and
// everything else to exit code 1.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class DimensionError : public Error {
public:
    using Error::Error;
};

class DomainError : public Error {
public:
    using Error::Error;
};

class ShapeError : public Error {
public:
    using Error::Error;
};

class RangeError : public Error {
public:
    using Error::Error;
};

class FormatError : public Error {
public:
    using Error::Error;
};

class DataError : public Error {
public:
    using Error::Error;
};

class UsageError : public Error {
public:
    using Error::Error;
};

// Thrown when the codebook solver runs out of iterations; carries the last
// iterate so callers can inspect how close it got.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& msg, std::vector<double> last)
        : Error(msg), last_centroids(std::move(last)) {}

    std::vector<double> last_centroids;
};

} // namespace tq
