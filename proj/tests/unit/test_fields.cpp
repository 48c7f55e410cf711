#include "eki/gaussian_fields.hpp"
#include "eki/simd/kernels.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>
#include <boost/math/special_functions/bessel.hpp>

#include <cmath>
#include <random>

using namespace eki;

namespace {

GridField noise(std::size_t n, std::uint64_t seed) {
    GridField g = GridField::square(n);
    Rng rng(seed);
    std::normal_distribution<double> d(0.0, 1.0);
    for (Eigen::Index i = 0; i < g.values.size(); ++i) g.values[i] = d(rng);
    return g;
}

// Finite-volume assembly cell by cell, faces visited explicitly.
Matrix brute_force_operator(const WMHyper& h, const GridField& g) {
    const std::size_t n1 = g.n1, n2 = g.n2;
    Matrix A = Matrix::Identity(static_cast<Eigen::Index>(n1 * n2), static_cast<Eigen::Index>(n1 * n2));
    auto id = [&](std::size_t i, std::size_t j) { return static_cast<Eigen::Index>(i + n1 * j); };
    for (std::size_t j = 0; j < n2; ++j)
        for (std::size_t i = 0; i < n1; ++i) {
            const Eigen::Index p = id(i, j);
            for (int dir = 0; dir < 4; ++dir) {
                const bool xdir = dir < 2;
                const double l = xdir ? h.l1 : h.l2, hh = xdir ? g.h1 : g.h2;
                const long ni = static_cast<long>(i) + (dir == 0 ? 1 : dir == 1 ? -1 : 0);
                const long nj = static_cast<long>(j) + (dir == 2 ? 1 : dir == 3 ? -1 : 0);
                const bool inside = ni >= 0 && nj >= 0 && ni < static_cast<long>(n1) &&
                                    nj < static_cast<long>(n2);
                if (inside) {
                    A(p, p) += l * l / (hh * hh);
                    A(p, id(static_cast<std::size_t>(ni), static_cast<std::size_t>(nj))) -= l * l / (hh * hh);
                } else {
                    // psi_face + zeta L^2 (psi_face - psi_c)/(h/2) = 0
                    const double beta = 2.0 * h.zeta_r * l * l / hh;
                    const double face = beta / (1.0 + beta);
                    A(p, p) += l * l * (1.0 - face) / (0.5 * hh) / hh;
                }
            }
        }
    return A;
}

} // namespace

TEST_CASE("operator matches brute-force assembly") {
    WMHyper h;
    h.l1 = h.l2 = 1.0;
    h.zeta_r = 0.7;
    const GridField g = GridField::square(5);
    const Matrix A = Matrix(assemble_wm_operator(h, g));
    const Matrix B = brute_force_operator(h, g);
    CHECK((A - B).cwiseAbs().maxCoeff() <= 1e-12 * B.cwiseAbs().maxCoeff());

    h.l1 = 0.3;
    h.l2 = 0.8;
    const GridField r(GridField::square(7));
    CHECK((Matrix(assemble_wm_operator(h, r)) - brute_force_operator(h, r)).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("Neumann limit preserves constants") {
    WMHyper h;
    h.l1 = 0.4;
    h.l2 = 0.2;
    h.zeta_r = 1e14;
    const GridField g = GridField::square(12);
    const Vector r = assemble_wm_operator(h, g) * Vector::Ones(static_cast<Eigen::Index>(g.size()));
    CHECK((r.array() - 1.0).abs().maxCoeff() <= 1e-9);
}

TEST_CASE("stencil kernel applies the assembled operator") {
    WMHyper h;
    h.l1 = 0.25;
    h.l2 = 0.45;
    const GridField g = GridField::square(23);
    const WMStencil s = wm_stencil(h, g);
    const GridField x = noise(23, 4);
    std::vector<double> y(g.size());
    simd::stencil5_apply({s.n1, s.n2, s.diag, s.east, s.north}, {x.values.data(), g.size()}, y);
    const Vector ref = assemble_wm_operator(h, g) * x.values;
    for (std::size_t i = 0; i < g.size(); ++i)
        CHECK(std::abs(y[i] - ref[static_cast<Eigen::Index>(i)]) <= 1e-10 * (1.0 + std::abs(ref[static_cast<Eigen::Index>(i)])));
}

TEST_CASE("transform basics") {
    WMHyper h;
    h.l1 = 0.3;
    h.l2 = 0.2;
    const GridField zero = GridField::square(20);
    CHECK(wm_transform(zero, h).values.cwiseAbs().maxCoeff() == 0.0);

    const GridField a = noise(20, 1), b = noise(20, 2);
    GridField c = a;
    c.values = 2.5 * a.values - 0.75 * b.values;
    const Vector lhs = wm_transform(c, h).values;
    const Vector rhs = 2.5 * wm_transform(a, h).values - 0.75 * wm_transform(b, h).values;
    CHECK((lhs - rhs).cwiseAbs().maxCoeff() <= 1e-10 * rhs.cwiseAbs().maxCoeff());

    // Tiny length scales leave only the identity.
    WMHyper t = h;
    t.l1 = t.l2 = 1e-7;
    const WMTransform w(t, a);
    const Vector psi = w.apply(a).values;
    CHECK((psi - w.scale() * a.values).cwiseAbs().maxCoeff() <= 1e-8 * w.scale());
}

TEST_CASE("spectral and sparse routes agree") {
    for (double nu : {3.0, 2.0}) {
        WMHyper h;
        h.nu = nu;
        h.l1 = 0.35;
        h.l2 = 0.2;
        h.zeta_r = 5.0;
        const GridField om = noise(24, 9);
        WMOptions sp;
        sp.solver = WMSolver::sparse;
        sp.lanczos_tol = 1e-12;
        const Vector a = wm_transform(om, h).values;
        const Vector b = wm_transform(om, h, sp).values;
        CHECK((a - b).norm() <= 1e-7 * a.norm());
    }
}

TEST_CASE("exact variance equals the covariance diagonal") {
    WMHyper h;
    h.l1 = 0.3;
    h.l2 = 0.5;
    const GridField g = GridField::square(16);
    const WMTransform w(h, g);
    const GridField v = w.variance();
    for (std::size_t p : {0u, 7u, 135u, 255u}) {
        GridField e = g;
        e.values.setZero();
        e.values[static_cast<Eigen::Index>(p)] = 1.0;
        const GridField col = w.apply(w.apply(e));
        CHECK(v.values[static_cast<Eigen::Index>(p)] ==
              doctest::Approx(col.values[static_cast<Eigen::Index>(p)]).epsilon(1e-10));
    }
}

TEST_CASE("Lanczos inverse square root") {
    Rng rng(3);
    std::normal_distribution<double> d(0.0, 1.0);
    const int n = 30;
    Matrix X(n, n);
    for (Eigen::Index i = 0; i < X.size(); ++i) X.data()[i] = d(rng);
    const Matrix A = X * X.transpose() / n + Matrix::Identity(n, n);
    Vector b(n);
    for (int i = 0; i < n; ++i) b[i] = d(rng);
    Eigen::SelfAdjointEigenSolver<Matrix> es(A);
    const Vector ref = es.eigenvectors() *
                       (es.eigenvalues().array().rsqrt() * (es.eigenvectors().transpose() * b).array()).matrix();
    Vector x(n);
    const auto rep = lanczos_inverse_sqrt(
        [&](const double* in, double* out) {
            Eigen::Map<Vector>(out, n) = A * Eigen::Map<const Vector>(in, n);
        },
        n, b.data(), x.data(), 1e-12, 200);
    CHECK(rep.iterations <= n + 10);
    CHECK((x - ref).norm() <= 1e-9 * ref.norm());
}

TEST_CASE("constants") {
    WMHyper h;
    h.nu = 3.0;
    h.sigma = 1.5;
    h.l1 = 0.2;
    h.l2 = 0.5;
    const double pi = std::acos(-1.0);
    CHECK(wm_constant(h, WMConstant::printed) == doctest::Approx(4 * pi * 2.25 * 3.0 * std::sqrt(0.1)));
    CHECK(wm_constant(h, WMConstant::sqrt) == doctest::Approx(std::sqrt(4 * pi * 2.25 * 3.0 * 0.1)));
    CHECK(parse_wm_constant("printed") == WMConstant::printed);
    CHECK_THROWS_AS(parse_wm_solver("fft"), ConfigError);
}

TEST_CASE("sqrt constant gives roughly unit-scaled interior variance") {
    WMHyper h;
    h.sigma = 1.5;
    h.l1 = h.l2 = 0.2;
    h.zeta_r = 16.0;
    const GridField v = WMTransform(h, GridField::square(100)).variance();
    // Discretisation leaves a modest global factor; the printed constant would be off by ~80x.
    CHECK(v.at(50, 50) / (h.sigma * h.sigma) == doctest::Approx(1.0).epsilon(0.25));
}

TEST_CASE("P1 map") {
    const GridField g = GridField::square(100);
    const P1Fixed fx;
    Vector u = Vector::Zero(static_cast<Eigen::Index>(kP1Scalars + g.size()));
    u.head(3) << 0.42, 0.3, 0.25;
    CHECK(u.size() == 10003);
    CHECK((p1(u, fx, g).values.array() - 0.42).abs().maxCoeff() == 0.0);

    Rng rng(6);
    std::normal_distribution<double> d(0.0, 1.0);
    for (Eigen::Index i = 3; i < u.size(); ++i) u[i] = d(rng);
    u[0] = 1.0;
    const GridField k = p1(u, fx, g);
    GridField om = g;
    om.values = u.tail(static_cast<Eigen::Index>(g.size()));
    const Vector psi = wm_transform(om, p1_hyper(u, fx)).values;
    CHECK((k.values - psi.array().exp().matrix()).cwiseAbs().maxCoeff() <= 1e-12 * k.values.maxCoeff());

    // Positivity survives absurd noise.
    u.tail(static_cast<Eigen::Index>(g.size())) *= 1e6;
    const GridField big = p1(u, fx, g);
    CHECK(big.values.allFinite());
    CHECK(big.values.minCoeff() > 0.0);
}

TEST_CASE("P1 prior") {
    const P1Bounds b;
    Rng r1(10), r2(10);
    const Ensemble e = sample_p1_prior(200, r1, b, 400);
    const Ensemble f = sample_p1_prior(200, r2, b, 400);
    CHECK((e.particles - f.particles).norm() == 0.0);
    CHECK(e.particles.row(0).minCoeff() >= 0.005);
    CHECK(e.particles.row(0).maxCoeff() <= 1.0);
    const double mean_l1 = e.particles.row(1).mean();
    CHECK(std::abs(mean_l1 - 0.375) <= 3.0 * (0.45 / std::sqrt(12.0)) / std::sqrt(200.0));

    Vector u = e.particles.col(0);
    u[0] = -1.0;
    u[1] = 5.0;
    p1_clamp(u, b);
    CHECK(u[0] == 0.005);
    CHECK(u[1] == 0.6);
}

TEST_CASE("Matern correlation") {
    WMHyper h;
    h.sigma = 1.5;
    h.l1 = h.l2 = 0.3;
    CHECK(matern_acf(0.0, 0.0, h) == doctest::Approx(2.25));
    CHECK(matern_acf(1e-6, 0.0, h) == doctest::Approx(2.25).epsilon(1e-8));
    WMHyper half = h;
    half.nu = 0.5;
    for (double r : {0.1, 0.7, 2.0})
        CHECK(matern_acf(r * 0.3, 0.0, half) == doctest::Approx(2.25 * std::exp(-r)).epsilon(1e-12));
    // nu = 3, r = 1 through an independent Bessel implementation.
    const double ref = 2.25 * std::pow(2.0, -2.0) / 2.0 * boost::math::cyl_bessel_k(3.0, 1.0);
    CHECK(matern_acf(0.3, 0.0, h) == doctest::Approx(ref).epsilon(1e-12));
    WMHyper an = h;
    an.l2 = 0.6;
    CHECK(matern_acf(0.0, 0.6, an) == doctest::Approx(matern_acf(0.3, 0.0, an)).epsilon(1e-12));
}

TEST_CASE("frozen Robin parameters keep boundary variance near the centre value") {
    const GridField g = GridField::square(100);
    for (auto [nu, zeta] : {std::pair{3.0, P1Fixed{}.zeta_r}, std::pair{2.0, 11.5}}) {
        for (double l : {0.15, 0.3, 0.45, 0.6}) {
            WMHyper h;
            h.nu = nu;
            h.l1 = h.l2 = l;
            h.zeta_r = zeta;
            const double r = boundary_variance_ratio(h, g);
            CHECK(r > 1.0 / 1.4);
            CHECK(r < 1.4);
        }
    }
    WMHyper h;
    h.l1 = h.l2 = 0.3;
    h.zeta_r = calibrate_zeta(h, g);
    CHECK(boundary_variance_ratio(h, g) == doctest::Approx(1.0).epsilon(1e-3));
}
