#include "eki/mesh.hpp"

#include "eki/detail/binary_io.hpp"

#include <json.hpp>

#include <cmath>
#include <numbers>

namespace eki {

double DiscMesh::signed_area(std::size_t t) const {
    const auto& [a, b, c] = triangles[t];
    const auto& pa = nodes[static_cast<std::size_t>(a)];
    const auto& pb = nodes[static_cast<std::size_t>(b)];
    const auto& pc = nodes[static_cast<std::size_t>(c)];
    return 0.5 * ((pb[0] - pa[0]) * (pc[1] - pa[1]) - (pc[0] - pa[0]) * (pb[1] - pa[1]));
}

std::array<double, 2> DiscMesh::centroid(std::size_t t) const {
    std::array<double, 2> c{0.0, 0.0};
    for (int v : triangles[t]) {
        c[0] += nodes[static_cast<std::size_t>(v)][0] / 3.0;
        c[1] += nodes[static_cast<std::size_t>(v)][1] / 3.0;
    }
    return c;
}

std::vector<double> DiscMesh::areas() const {
    std::vector<double> a(triangles.size());
    for (std::size_t t = 0; t < triangles.size(); ++t) a[t] = signed_area(t);
    return a;
}

double DiscMesh::boundary_angle(std::size_t k) const {
    const auto& p = nodes[static_cast<std::size_t>(boundary[k])];
    const double th = std::atan2(p[1], p[0]);
    return th < 0.0 ? th + 2.0 * std::numbers::pi : th;
}

void DiscMesh::validate() const {
    require(!triangles.empty() && boundary.size() >= 3, "empty mesh");
    for (std::size_t t = 0; t < triangles.size(); ++t)
        if (signed_area(t) <= 1e-12) throw NumericalError("degenerate or inverted triangle");
    for (int b : boundary) {
        const auto& p = nodes[static_cast<std::size_t>(b)];
        if (std::abs(std::hypot(p[0], p[1]) - 1.0) > 1e-12)
            throw NumericalError("boundary node off the unit circle");
    }
}

namespace {

int ring_start(int i) { return i == 0 ? 0 : 1 + 3 * i * (i - 1); }

} // namespace

DiscMesh build_disc_mesh_rings(int rings) {
    require(rings >= 2, "disc mesh needs at least two rings");
    const double two_pi = 2.0 * std::numbers::pi;
    DiscMesh m;
    m.rings = rings;
    m.nodes.push_back({0.0, 0.0});
    for (int i = 1; i <= rings; ++i) {
        const double r = static_cast<double>(i) / rings;
        const int cnt = 6 * i;
        for (int k = 0; k < cnt; ++k) {
            const double th = two_pi * k / cnt;
            m.nodes.push_back({r * std::cos(th), r * std::sin(th)});
        }
    }

    auto add = [&](int a, int b, int c) {
        m.triangles.push_back({a, b, c});
        if (m.signed_area(m.triangles.size() - 1) < 0.0) std::swap(m.triangles.back()[1], m.triangles.back()[2]);
    };

    for (int k = 0; k < 6; ++k) add(0, 1 + k, 1 + (k + 1) % 6);

    for (int i = 2; i <= rings; ++i) {
        const int a = 6 * (i - 1), b = 6 * i;
        const int s_in = ring_start(i - 1), s_out = ring_start(i);
        int p = 0, q = 0;
        // Merge the two rings by angle; on ties advance the outer ring.
        while (p < a || q < b) {
            const double next_in = p < a ? static_cast<double>(p + 1) / a : 2.0;
            const double next_out = q < b ? static_cast<double>(q + 1) / b : 2.0;
            const int ip = s_in + p % a, oq = s_out + q % b;
            if (next_out <= next_in) {
                add(ip, oq, s_out + (q + 1) % b);
                ++q;
            } else {
                add(ip, oq, s_in + (p + 1) % a);
                ++p;
            }
        }
    }

    const int so = ring_start(rings);
    for (int k = 0; k < 6 * rings; ++k) m.boundary.push_back(so + k);
    m.validate();
    return m;
}

DiscMesh build_disc_mesh(int target_elements) {
    require(target_elements >= 64, "mesh target must be at least 64 elements");
    const int rings = static_cast<int>(std::lround(std::sqrt(target_elements / 6.0)));
    return build_disc_mesh_rings(rings);
}

void write_mesh_json(const DiscMesh& m, const std::filesystem::path& p) {
    nlohmann::json j;
    j["nodes"] = m.nodes;
    j["triangles"] = m.triangles;
    nlohmann::json arcs = nlohmann::json::array();
    for (std::size_t k = 0; k < m.boundary.size(); ++k) {
        const std::size_t k2 = (k + 1) % m.boundary.size();
        double t1 = m.boundary_angle(k2);
        if (k2 == 0) t1 += 2.0 * std::numbers::pi;
        arcs.push_back({{"nodes", {m.boundary[k], m.boundary[k2]}},
                        {"theta", {m.boundary_angle(k), t1}}});
    }
    j["boundary"] = arcs;
    auto os = detail::open_out(p);
    os << j.dump(1) << '\n';
}

} // namespace eki
