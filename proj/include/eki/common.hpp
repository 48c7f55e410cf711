#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>

namespace eki {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Rng = std::mt19937_64;

// Invalid input, bad configuration, broken invariants on user data.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Factorisation failures, non-convergence, unreachable search conditions.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& what) {
    if (!cond) throw ConfigError(what);
}

} // namespace eki
