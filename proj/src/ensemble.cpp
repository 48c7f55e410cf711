#include "eki/ensemble.hpp"

#include "eki/detail/binary_io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace eki {

Ensemble::Ensemble(Matrix p, std::uint64_t n) : particles(std::move(p)), iteration(n) { validate(); }

void Ensemble::validate() const {
    require(particles.cols() >= 2, "ensemble needs at least two particles");
    require(particles.rows() >= 1, "particle dimension must be positive");
    require(particles.allFinite(), "ensemble contains non-finite entries");
}

Observation::Observation(Vector y_, Vector gamma_) : y(std::move(y_)), gamma(std::move(gamma_)) {
    validate();
}

void Observation::validate() const {
    require(y.size() >= 1, "observation must have at least one entry");
    require(gamma.size() == y.size(), "noise variance length differs from data length");
    require((gamma.array() > 0.0).all(), "noise variances must be strictly positive");
}

EvaluationBatch::EvaluationBatch(Matrix v) : values(std::move(v)) {
    mean = values.colwise().sum().transpose() / static_cast<double>(values.rows());
}

PerturbMode parse_perturb_mode(const std::string& s) {
    if (s == "per_particle") return PerturbMode::per_particle;
    if (s == "shared") return PerturbMode::shared;
    if (s == "none") return PerturbMode::none;
    throw ConfigError("unknown perturb mode: " + s);
}

std::string to_string(PerturbMode m) {
    switch (m) {
    case PerturbMode::per_particle: return "per_particle";
    case PerturbMode::shared: return "shared";
    case PerturbMode::none: return "none";
    }
    return "?";
}

Vector ensemble_mean(const Ensemble& e) {
    e.validate();
    Vector m = Vector::Zero(e.dim());
    for (Eigen::Index j = 0; j < e.size(); ++j) m += e.particles.col(j);
    return m / static_cast<double>(e.size());
}

namespace {

struct Deviations {
    Matrix du;  // d x J
    Matrix dg;  // M x J
};

Deviations deviations(const Ensemble& e, const EvaluationBatch& ev) {
    require(ev.values.rows() == e.size(), "evaluation batch has wrong number of rows");
    require(ev.mean.size() == ev.values.cols(), "evaluation batch mean has wrong length");
    const Vector ubar = ensemble_mean(e);
    Deviations d;
    d.du = e.particles.colwise() - ubar;
    d.dg = ev.values.transpose().colwise() - ev.mean;
    return d;
}

} // namespace

Covariances empirical_covariances(const Ensemble& e, const EvaluationBatch& ev) {
    const Deviations d = deviations(e, ev);
    const double s = 1.0 / static_cast<double>(e.size() - 1);
    Covariances c;
    c.cug = s * d.du * d.dg.transpose();
    c.cgg = s * d.dg * d.dg.transpose();
    return c;
}

Ensemble eki_update(const Ensemble& e, const EvaluationBatch& ev, const Observation& obs,
                    double alpha, Rng& rng, PerturbMode mode) {
    require(alpha > 0.0 && std::isfinite(alpha), "alpha must be positive and finite");
    obs.validate();
    require(ev.values.cols() == obs.size(), "evaluation batch width differs from data length");
    const Deviations d = deviations(e, ev);
    const Eigen::Index J = e.size();
    const Eigen::Index M = obs.size();
    const double s = 1.0 / static_cast<double>(J - 1);

    Matrix K = s * d.dg * d.dg.transpose();
    K.diagonal() += alpha * obs.gamma;
    Eigen::LLT<Matrix> llt(K);
    if (llt.info() != Eigen::Success)
        throw NumericalError("Cgg + alpha*Gamma is not positive definite (alpha=" +
                             std::to_string(alpha) + ")");

    // Residuals y + sqrt(alpha) xi_j - G(u_j), one column per particle.
    Matrix R = (-ev.values.transpose()).colwise() + obs.y;
    if (mode != PerturbMode::none) {
        std::normal_distribution<double> normal(0.0, 1.0);
        const Vector sd = (alpha * obs.gamma).cwiseSqrt();
        if (mode == PerturbMode::shared) {
            Vector xi(M);
            for (Eigen::Index m = 0; m < M; ++m) xi[m] = sd[m] * normal(rng);
            R.colwise() += xi;
        } else {
            for (Eigen::Index j = 0; j < J; ++j)
                for (Eigen::Index m = 0; m < M; ++m) R(m, j) += sd[m] * normal(rng);
        }
    }

    const Matrix W = llt.solve(R);
    // Cug * W written as Du * (Dg^T W) / (J-1): cheaper when J << M, and the
    // increment is visibly a combination of the deviation columns.
    const Matrix coeff = s * (d.dg.transpose() * W);
    Ensemble out;
    out.particles = e.particles + d.du * coeff;
    out.iteration = e.iteration + 1;
    if (!out.particles.allFinite()) throw NumericalError("EKI update produced non-finite values");
    return out;
}

double affine_span_residual(const Ensemble& initial, const Ensemble& e) {
    require(initial.dim() == e.dim(), "dimension mismatch");
    const Vector m0 = ensemble_mean(initial);
    const Matrix basis = initial.particles.colwise() - m0;
    Eigen::ColPivHouseholderQR<Matrix> qr(basis);
    double worst = 0.0;
    for (Eigen::Index j = 0; j < e.size(); ++j) {
        const Vector rhs = e.particles.col(j) - m0;
        const Vector coef = qr.solve(rhs);
        const double res = (basis * coef - rhs).norm();
        const double scale = std::max(e.particles.col(j).norm(), 1e-300);
        worst = std::max(worst, res / scale);
    }
    return worst;
}

void write_ensemble_binary(const Ensemble& e, const std::filesystem::path& p) {
    auto os = detail::open_out(p, true);
    detail::write_magic(os, "EKI1");
    detail::write_pod<std::uint64_t>(os, static_cast<std::uint64_t>(e.size()));
    detail::write_pod<std::uint64_t>(os, static_cast<std::uint64_t>(e.dim()));
    detail::write_pod<std::uint64_t>(os, e.iteration);
    detail::write_doubles(os, e.particles.data(), static_cast<std::size_t>(e.particles.size()));
}

Ensemble read_ensemble_binary(const std::filesystem::path& p) {
    auto is = detail::open_in(p, true);
    detail::check_magic(is, "EKI1");
    const auto J = detail::read_pod<std::uint64_t>(is);
    const auto d = detail::read_pod<std::uint64_t>(is);
    const auto n = detail::read_pod<std::uint64_t>(is);
    Matrix P(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(J));
    detail::read_doubles(is, P.data(), static_cast<std::size_t>(J * d));
    return Ensemble(std::move(P), n);
}

void write_ensemble_csv(const Ensemble& e, const std::filesystem::path& p) {
    auto os = detail::open_out(p);
    char buf[32];
    for (Eigen::Index j = 0; j < e.size(); ++j) {
        for (Eigen::Index i = 0; i < e.dim(); ++i) {
            std::snprintf(buf, sizeof buf, "%.17g", e.particles(i, j));
            if (i) os << ',';
            os << buf;
        }
        os << '\n';
    }
}

} // namespace eki
