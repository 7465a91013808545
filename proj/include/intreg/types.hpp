#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>
#include <vector>

namespace intreg {

using Index = Eigen::Index;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using BoolMatrix = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

using MatrixList = std::vector<Matrix>;
using VectorList = std::vector<Vector>;

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
    virtual const char* kind() const noexcept { return "error"; }
};

class ValidationError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "validation_error"; }
};

/// Raised when the solver produces non-finite iterates.
class DivergedError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "diverged"; }
};

class UnsupportedScenarioError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "unsupported_scenario"; }
};

/// A rate whose denominator is zero for the given truth.
class UndefinedMetricError : public Error {
public:
    using Error::Error;
    const char* kind() const noexcept override { return "undefined_metric"; }
};

}  // namespace intreg
