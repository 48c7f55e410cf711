#pragma once

#include "eki/common.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>

namespace eki {

// J particles of dimension d stored as the columns of a d x J matrix.
struct Ensemble {
    Matrix particles;
    std::uint64_t iteration = 0;

    Ensemble() = default;
    Ensemble(Matrix p, std::uint64_t n = 0);

    Eigen::Index size() const { return particles.cols(); }
    Eigen::Index dim() const { return particles.rows(); }
    void validate() const;
};

struct Observation {
    Vector y;
    Vector gamma;  // diagonal of the noise covariance

    Observation() = default;
    Observation(Vector y_, Vector gamma_);

    Eigen::Index size() const { return y.size(); }
    void validate() const;
    Vector inv_gamma() const { return gamma.cwiseInverse(); }
};

// Row j holds G(u_j).
struct EvaluationBatch {
    Matrix values;
    Vector mean;

    EvaluationBatch() = default;
    explicit EvaluationBatch(Matrix v);
};

enum class PerturbMode { per_particle, shared, none };

PerturbMode parse_perturb_mode(const std::string& s);
std::string to_string(PerturbMode m);

Vector ensemble_mean(const Ensemble& e);

struct Covariances {
    Matrix cug;  // d x M
    Matrix cgg;  // M x M
};

Covariances empirical_covariances(const Ensemble& e, const EvaluationBatch& ev);

// One perturbed-observation step with regularisation alpha. Throws
// NumericalError when Cgg + alpha*Gamma fails to factorise.
Ensemble eki_update(const Ensemble& e, const EvaluationBatch& ev, const Observation& obs,
                    double alpha, Rng& rng, PerturbMode mode = PerturbMode::per_particle);

// Relative residual of projecting each particle of `e` onto the affine span of
// `initial`. Returns the worst particle.
double affine_span_residual(const Ensemble& initial, const Ensemble& e);

// Binary layout: "EKI1", J, d, n as little-endian uint64, then J*d doubles
// with each particle contiguous.
void write_ensemble_binary(const Ensemble& e, const std::filesystem::path& p);
Ensemble read_ensemble_binary(const std::filesystem::path& p);
void write_ensemble_csv(const Ensemble& e, const std::filesystem::path& p);

} // namespace eki
