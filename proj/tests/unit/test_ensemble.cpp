#include "eki/ensemble.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <filesystem>
#include <random>

using namespace eki;

namespace {

Matrix gaussian_matrix(Eigen::Index r, Eigen::Index c, Rng& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    Matrix m(r, c);
    for (Eigen::Index j = 0; j < c; ++j)
        for (Eigen::Index i = 0; i < r; ++i) m(i, j) = n(rng);
    return m;
}

} // namespace

TEST_CASE("ensemble mean") {
    Matrix p(1, 2);
    p << 0.0, 2.0;
    CHECK(ensemble_mean(Ensemble(p))[0] == doctest::Approx(1.0));

    CHECK_THROWS_AS(Ensemble(Matrix::Zero(3, 1)).validate(), ConfigError);

    Rng rng(3);
    const Matrix draws = gaussian_matrix(3, 100, rng);
    const Vector m = ensemble_mean(Ensemble(draws));
    for (Eigen::Index i = 0; i < 3; ++i) {
        double s = 0.0;
        for (Eigen::Index j = 0; j < 100; ++j) s += draws(i, j);
        CHECK(m[i] == doctest::Approx(s / 100.0).epsilon(1e-14));
        CHECK(std::abs(m[i]) <= 0.3);
    }
}

TEST_CASE("empirical covariances") {
    SUBCASE("zero spread") {
        const Ensemble e(Matrix::Constant(2, 4, 1.5));
        const EvaluationBatch ev(Matrix::Constant(4, 3, -0.5));
        const Covariances c = empirical_covariances(e, ev);
        CHECK(c.cug.norm() == 0.0);
        CHECK(c.cgg.norm() == 0.0);
    }
    SUBCASE("hand computation") {
        Matrix u(1, 3);
        u << 0.0, 1.0, 2.0;
        const Covariances c = empirical_covariances(Ensemble(u), EvaluationBatch(u.transpose()));
        CHECK(c.cug(0, 0) == doctest::Approx(1.0));
        CHECK(c.cgg(0, 0) == doctest::Approx(1.0));
    }
    SUBCASE("positive semidefinite") {
        Rng rng(11);
        const Ensemble e(gaussian_matrix(5, 50, rng));
        const EvaluationBatch ev(gaussian_matrix(50, 4, rng));
        const Covariances c = empirical_covariances(e, ev);
        Eigen::SelfAdjointEigenSolver<Matrix> es(c.cgg);
        CHECK(es.eigenvalues().minCoeff() >= -1e-10);
        // Direct double loop as an oracle.
        Matrix ref = Matrix::Zero(4, 4);
        for (Eigen::Index j = 0; j < 50; ++j) {
            const Vector d = ev.values.row(j).transpose() - ev.mean;
            ref += d * d.transpose();
        }
        ref /= 49.0;
        CHECK((ref - c.cgg).norm() <= 1e-12 * ref.norm());
    }
}

TEST_CASE("eki update against the Kalman mean") {
    Rng rng(5);
    Matrix u(1, 8);
    for (Eigen::Index j = 0; j < 8; ++j) u(0, j) = 0.3 * static_cast<double>(j) - 0.7;
    const Ensemble e(u);
    const double m0 = ensemble_mean(e)[0];
    const double c0 = (u.array() - m0).square().sum() / 7.0;
    const double gamma = 0.5, y = 2.0;
    const Observation obs(Vector::Constant(1, y), Vector::Constant(1, gamma));
    const Ensemble out =
        eki_update(e, EvaluationBatch(u.transpose()), obs, 1.0, rng, PerturbMode::none);
    const double kalman = m0 + c0 / (c0 + gamma) * (y - m0);
    CHECK(ensemble_mean(out)[0] == doctest::Approx(kalman).epsilon(1e-12));
}

TEST_CASE("eki update identity for zero spread") {
    Rng rng(1);
    const Ensemble e(Matrix::Constant(3, 5, 0.25));
    const EvaluationBatch ev(Matrix::Constant(5, 2, 1.0));
    const Observation obs(Vector::Constant(2, 3.0), Vector::Ones(2));
    const Ensemble out = eki_update(e, ev, obs, 2.0, rng, PerturbMode::per_particle);
    CHECK((out.particles - e.particles).norm() == 0.0);
}

TEST_CASE("eki update matches a dense oracle") {
    Rng rng(17);
    const Ensemble e(gaussian_matrix(6, 9, rng));
    const Matrix H = gaussian_matrix(3, 6, rng);
    const EvaluationBatch ev((H * e.particles).transpose());
    Vector g(3);
    g << 0.2, 0.5, 1.0;
    const Observation obs(Vector::Ones(3), g);
    const double alpha = 3.0;
    Rng r1(99);
    const Ensemble out = eki_update(e, ev, obs, alpha, r1, PerturbMode::none);
    const Covariances c = empirical_covariances(e, ev);
    const Matrix K = c.cug * (c.cgg + alpha * Matrix(g.asDiagonal())).inverse();
    for (Eigen::Index j = 0; j < 9; ++j) {
        const Vector ref = e.particles.col(j) +
                           K * (obs.y - ev.values.row(j).transpose());
        CHECK((out.particles.col(j) - ref).norm() <= 1e-10 * (1.0 + ref.norm()));
    }
}

TEST_CASE("perturbation modes") {
    Rng rng(2);
    const Ensemble e(gaussian_matrix(4, 6, rng));
    const EvaluationBatch ev(gaussian_matrix(6, 3, rng));
    const Observation obs(Vector::Zero(3), Vector::Ones(3));
    Rng a(42), b(42), c(43);
    const Ensemble x = eki_update(e, ev, obs, 1.0, a);
    const Ensemble y = eki_update(e, ev, obs, 1.0, b);
    const Ensemble z = eki_update(e, ev, obs, 1.0, c);
    CHECK((x.particles - y.particles).norm() == 0.0);
    CHECK((x.particles - z.particles).norm() > 0.0);
    CHECK(x.iteration == e.iteration + 1);
    CHECK(parse_perturb_mode("shared") == PerturbMode::shared);
    CHECK(to_string(PerturbMode::none) == "none");
    CHECK_THROWS_AS(parse_perturb_mode("both"), ConfigError);
    CHECK_THROWS_AS(eki_update(e, ev, obs, -1.0, a), ConfigError);
}

TEST_CASE("subspace property over several updates") {
    Rng rng(8);
    const Ensemble init(gaussian_matrix(40, 10, rng));
    const Matrix H = gaussian_matrix(5, 40, rng);
    const Observation obs(gaussian_matrix(5, 1, rng).col(0), Vector::Constant(5, 0.1));
    Ensemble e = init;
    for (PerturbMode m : {PerturbMode::per_particle, PerturbMode::shared}) {
        for (int n = 0; n < 4; ++n) {
            // Nonlinear map: the span argument does not need linearity.
            Matrix G = (H * e.particles).transpose();
            G = G.array().sin() + G.array();
            e = eki_update(e, EvaluationBatch(G), obs, 2.0, rng, m);
            CHECK(affine_span_residual(init, e) <= 1e-8);
        }
    }
}

TEST_CASE("ensemble binary round trip") {
    Rng rng(4);
    const Ensemble e(gaussian_matrix(7, 3, rng), 5);
    const auto p = std::filesystem::temp_directory_path() / "eki_test_ensemble.bin";
    write_ensemble_binary(e, p);
    const Ensemble r = read_ensemble_binary(p);
    CHECK(r.iteration == 5);
    CHECK((r.particles - e.particles).norm() == 0.0);
    std::filesystem::remove(p);
}
