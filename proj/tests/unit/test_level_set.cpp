#include "eki/level_set.hpp"

#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

using namespace eki;

namespace {

Vector particle(const GridField& g, double seed_scale, std::uint64_t seed) {
    Vector u = Vector::Zero(static_cast<Eigen::Index>(kP2Scalars + g.size()));
    u.head(5) << 0.03, 0.2, 0.9, 0.3, 0.25;
    Rng rng(seed);
    std::normal_distribution<double> d(0.0, 1.0);
    for (Eigen::Index i = 5; i < u.size(); ++i) u[i] = seed_scale * d(rng);
    return u;
}

} // namespace

TEST_CASE("level-set function") {
    const GridField g = GridField::square(30);
    P2Fixed fx;
    const Vector u0 = particle(g, 0.0, 1);
    CHECK(level_set_function(u0, fx, g).values.cwiseAbs().maxCoeff() == 0.0);

    const Vector u = particle(g, 1.0, 2);
    const GridField f1 = level_set_function(u, fx, g);
    fx.lambda_f = std::exp(1.0);
    const GridField fe = level_set_function(u, fx, g);
    CHECK(((fe.values - f1.values).array() - 1.0).abs().maxCoeff() <= 1e-12);
}

TEST_CASE("thresholding") {
    const GridField g = GridField::square(30);
    const P2Fixed fx;
    const GridField k0 = p2(particle(g, 0.0, 1), fx, g);
    CHECK((k0.values.array() - 0.2).abs().maxCoeff() == 0.0);

    // A ramp in x crossing both levels gives three vertical bands.
    GridField ramp = g;
    for (std::size_t j = 0; j < g.n2; ++j)
        for (std::size_t i = 0; i < g.n1; ++i) ramp.at(i, j) = g.x(i);
    const GridField k = threshold_phases(ramp, 1.0, 2.0, 3.0, -0.5, 0.5);
    for (std::size_t j = 0; j < g.n2; ++j)
        for (std::size_t i = 0; i < g.n1; ++i) {
            const double x = g.x(i);
            const double want = x <= -0.5 ? 1.0 : x <= 0.5 ? 2.0 : 3.0;
            CHECK(k.at(i, j) == want);
        }

    const GridField r = p2(particle(g, 3.0, 5), fx, g);
    std::set<double> distinct(r.values.data(), r.values.data() + r.values.size());
    CHECK(distinct.size() <= 3);
    for (double v : distinct) CHECK((v == 0.03 || v == 0.2 || v == 0.9));
}

TEST_CASE("P2 dimensions and prior") {
    const GridField g = GridField::square(100);
    CHECK(kP2Scalars + g.size() == 10005);
    const P2Bounds b;
    CHECK(b.kappa_l.hi < b.kappa_b.lo);
    CHECK(b.kappa_b.hi < b.kappa_h.lo);
    CHECK((b.kappa_l.lo < 0.025 && 0.025 < b.kappa_l.hi));
    CHECK((b.kappa_b.lo < 0.125 && 0.125 < b.kappa_b.hi));
    CHECK((b.kappa_h.lo < 1.0 && 1.0 < b.kappa_h.hi));

    Rng r1(3), r2(3);
    const Ensemble e = sample_p2_prior(50, r1, b, 100);
    const Ensemble f = sample_p2_prior(50, r2, b, 100);
    CHECK((e.particles - f.particles).norm() == 0.0);
    CHECK(e.particles.row(0).minCoeff() >= b.kappa_l.lo);
    CHECK(e.particles.row(2).maxCoeff() <= b.kappa_h.hi);
    CHECK(e.particles.row(4).maxCoeff() <= b.l.hi);

    Vector u = e.particles.col(0);
    u[1] = 10.0;
    p2_clamp(u, b);
    CHECK(u[1] == b.kappa_b.hi);
}
