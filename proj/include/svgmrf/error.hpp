#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace svgmrf {

/// Bad input to a library call (shape mismatch, negative penalty, ...).
class InvalidArgument : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// The soft-thresholded covariance of one cluster could not be inverted.
/// Usually the threshold is too small for the number of samples.
class SingularBackwardMapping : public std::runtime_error {
public:
    SingularBackwardMapping(std::size_t cluster, double nu, double condition);

    std::size_t cluster() const noexcept { return cluster_; }
    double nu() const noexcept { return nu_; }
    double condition() const noexcept { return condition_; }

private:
    std::size_t cluster_;
    double nu_;
    double condition_;
};

class NotPositiveDefinite : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A coordinate subproblem did not reach the requested KKT tolerance.
class SolverFailure : public std::runtime_error {
public:
    SolverFailure(std::size_t i, std::size_t j, const std::string& what);

    std::size_t row() const noexcept { return i_; }
    std::size_t col() const noexcept { return j_; }

private:
    std::size_t i_;
    std::size_t j_;
};

/// Every grid point of a tuning run was invalid.
class NoValidModel : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace svgmrf
