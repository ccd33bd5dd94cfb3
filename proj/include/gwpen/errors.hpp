#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace gwpen {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// An argument lies outside the domain of the operation.
class DomainError : public Error {
public:
    using Error::Error;
};

/// A configured size cap (height, node count, bit length, ...) would be exceeded.
class ResourceError : public Error {
public:
    ResourceError(const std::string& what, std::vector<double> partial = {})
        : Error(what), partial_(std::move(partial))
    {
    }

    /// Statistics gathered before the cap was hit (may be empty).
    const std::vector<double>& partial() const noexcept { return partial_; }

private:
    std::vector<double> partial_;
};

/// An iterative limit failed to stabilise within its iteration budget.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, double previous, double last)
        : Error(what), previous_(previous), last_(last)
    {
    }

    double previous() const noexcept { return previous_; }
    double last() const noexcept { return last_; }

private:
    double previous_;
    double last_;
};

} // namespace gwpen
