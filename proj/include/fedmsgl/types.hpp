#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

namespace fedmsgl {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using IntVector = Eigen::VectorXi;

/// Base class for all library errors.
struct Error : std::runtime_error {
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// File missing, unreadable, or malformed on disk.
struct IoError : Error {
    using Error::Error;
};

/// Matrix/vector dimensions inconsistent with the operation's contract.
struct ShapeError : Error {
    using Error::Error;
};

/// Numerically invalid input (zero denominator, singular degree matrix, ...).
struct NumericError : Error {
    using Error::Error;
};

/// A node asked for data it does not own.
struct AccessError : Error {
    using Error::Error;
};

/// Bad experiment configuration.
struct ConfigError : Error {
    using Error::Error;
};

}  // namespace fedmsgl
