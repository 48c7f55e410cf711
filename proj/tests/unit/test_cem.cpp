#include "eki/cem.hpp"
#include "eki/mesh.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace eki;

namespace {

Vector smooth_kappa(const DiscMesh& m) {
    Vector k(static_cast<Eigen::Index>(m.num_triangles()));
    for (Eigen::Index t = 0; t < k.size(); ++t) {
        const auto c = m.centroid(static_cast<std::size_t>(t));
        k[t] = 0.5 + 0.4 * std::sin(2.0 * c[0]) * std::cos(3.0 * c[1]);
    }
    return k;
}

} // namespace

TEST_CASE("disc meshes") {
    const DiscMesh d = build_disc_mesh(9216);
    const DiscMesh i = build_disc_mesh(7744);
    CHECK(d.num_triangles() == 9126);  // 39 rings
    CHECK(i.num_triangles() == 7776);  // 36 rings
    CHECK(d.rings != i.rings);
    for (const DiscMesh* m : {&d, &i}) {
        double area = 0.0;
        for (std::size_t t = 0; t < m->num_triangles(); ++t) {
            CHECK(m->signed_area(t) > 0.0);
            area += m->signed_area(t);
        }
        CHECK(std::abs(area - std::numbers::pi) <= 0.01 * std::numbers::pi);
        CHECK(m->boundary.size() == static_cast<std::size_t>(6 * m->rings));
        for (int b : m->boundary)
            CHECK(std::hypot(m->nodes[static_cast<std::size_t>(b)][0],
                             m->nodes[static_cast<std::size_t>(b)][1]) == doctest::Approx(1.0));
        m->validate();
    }
    CHECK_THROWS_AS(build_disc_mesh(10), ConfigError);
}

TEST_CASE("electrode layout and patterns") {
    const ElectrodeLayout l = ElectrodeLayout::uniform(16, 0.5, 0.01);
    CHECK(l.half_width() == doctest::Approx(0.5 * std::numbers::pi / 16.0));
    CHECK(l.centre(4) == doctest::Approx(std::numbers::pi / 2.0));
    const Matrix p = adjacent_patterns(16, 0.1);
    CHECK(p.rows() == 16);
    CHECK(p.cols() == 16);
    CHECK(p(0, 0) == 0.1);
    CHECK(p(1, 0) == -0.1);
    CHECK(p(15, 15) == 0.1);
    CHECK(p(0, 15) == -0.1);
    CHECK(p.colwise().sum().cwiseAbs().maxCoeff() == 0.0);
    CHECK_THROWS_AS(ElectrodeLayout::uniform(16, 1.2, 0.01).validate(), ConfigError);
}

TEST_CASE("system symmetry and physics") {
    const CEMModel model(build_disc_mesh_rings(12), ElectrodeLayout::uniform(16, 0.5, 0.01));
    const Vector k = smooth_kappa(model.mesh());
    const Eigen::SparseMatrix<double> A = model.assemble_full(k);
    const Matrix Ad(A);
    CHECK((Ad - Ad.transpose()).norm() <= 1e-12 * Ad.norm());
    // The full system annihilates constants: only differences matter.
    CHECK((Ad * Vector::Ones(Ad.rows())).cwiseAbs().maxCoeff() <= 1e-12 * Ad.cwiseAbs().maxCoeff());

    const Matrix P = adjacent_patterns(16, 0.1);
    const CEMSolution s = model.solve(k, P, *model.make_workspace(), true);
    const Matrix I = model.electrode_currents(s);
    CHECK((I - P).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK(I.colwise().sum().cwiseAbs().maxCoeff() <= 1e-10);

    const Matrix R = P.transpose() * s.electrode_voltages;
    CHECK((R - R.transpose()).cwiseAbs().maxCoeff() <= 1e-8 * R.cwiseAbs().maxCoeff());

    // Linearity in the injected current.
    const CEMSolution s2 = model.solve(k, 2.0 * P);
    CHECK((s2.electrode_voltages - 2.0 * s.electrode_voltages).norm() <= 1e-12 * s.electrode_voltages.norm());

    // kappa -> c kappa with z -> z / c scales voltages by 1/c.
    const double c = 3.5;
    const CEMModel scaled(model.mesh(), ElectrodeLayout::uniform(16, 0.5, 0.01 / c));
    const CEMSolution s3 = scaled.solve(c * k, P);
    CHECK((s3.electrode_voltages - s.electrode_voltages / c).norm() <= 1e-10 * s.electrode_voltages.norm());

    // Repeated solves with a warm workspace agree.
    auto ws = model.make_workspace();
    const Vector a = measurement_vector(model.solve(k, P, *ws));
    const Vector b = measurement_vector(model.solve(k, P, *ws));
    const Vector fresh = measurement_vector(model.solve(k, P));
    CHECK((a - b).norm() == 0.0);
    CHECK((a - fresh).norm() <= 1e-12 * a.norm());
    CHECK(a.size() == 256);
    CHECK(a[17] == s.electrode_voltages(1, 1));
}

TEST_CASE("refinement converges for unit conductivity") {
    const ElectrodeLayout l = ElectrodeLayout::uniform(16, 0.5, 0.01);
    const Matrix P = adjacent_patterns(16, 0.1);
    std::vector<Vector> v;
    for (int r : {9, 18, 36}) {
        const CEMModel m(build_disc_mesh_rings(r), l);
        v.push_back(measurement_vector(m.solve(Vector::Ones(static_cast<Eigen::Index>(m.mesh().num_triangles())), P)));
    }
    const double d1 = (v[1] - v[0]).norm(), d2 = (v[2] - v[1]).norm();
    CHECK(d2 < d1);
    CHECK(d2 / v[2].norm() < 0.05);
}
