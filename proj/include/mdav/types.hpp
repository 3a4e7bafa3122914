#pragma once

#include <Eigen/Dense>

#include <complex>
#include <stdexcept>
#include <string>

namespace mdav {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;
using RealMatrix = Eigen::MatrixXd;

constexpr Complex IMAG_UNIT{0.0, 1.0};

// Input validation failures (dimensions, parameter ranges, schema).
class ConfigurationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Dimension mismatch between operands.
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Non-finite result from a model evaluation, tagged with the offending pair.
class EvaluationError : public std::runtime_error {
public:
    EvaluationError(const std::string& what, int l, int k)
        : std::runtime_error(what), l_index(l), k_index(k) {}
    int l_index;
    int k_index;
};

// The saddle-point matrix was (numerically) singular. Carries the condition
// estimate and the closest pair of coherent states as a diagnostic for a
// missed merge.
class SingularSystemError : public std::runtime_error {
public:
    SingularSystemError(const std::string& what, double rcond_est,
                        int pair_l, int pair_k, double pair_distance)
        : std::runtime_error(what),
          rcond(rcond_est),
          closest_l(pair_l),
          closest_k(pair_k),
          closest_distance(pair_distance) {}
    double rcond;
    int closest_l;
    int closest_k;
    double closest_distance;
};

// A stated contract of an operation was violated by its input.
class ContractViolationError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

}  // namespace mdav
