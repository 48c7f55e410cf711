#include "eki/grid_field.hpp"

#include "eki/detail/binary_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace eki {

GridField GridField::square(std::size_t n, double fill) {
    require(n >= 2, "grid needs at least 2 cells per side");
    GridField g;
    g.n1 = g.n2 = n;
    g.h1 = g.h2 = 2.0 / static_cast<double>(n);
    g.values = Vector::Constant(static_cast<Eigen::Index>(n * n), fill);
    return g;
}

bool GridField::same_geometry(const GridField& o) const {
    return n1 == o.n1 && n2 == o.n2 && h1 == o.h1 && h2 == o.h2 && x0 == o.x0 && y0 == o.y0;
}

void GridField::validate() const {
    require(n1 >= 2 && n2 >= 2, "grid needs at least 2 cells per side");
    require(h1 > 0.0 && h2 > 0.0, "grid spacing must be positive");
    require(values.size() == static_cast<Eigen::Index>(n1 * n2), "grid value count mismatch");
    require(values.allFinite(), "grid contains non-finite values");
}

namespace {

// Locate px between cell centres: returns lower index and weight of upper.
std::pair<std::size_t, double> bracket(double p, double origin, double h, std::size_t n) {
    const double s = (p - origin) / h - 0.5;
    if (s <= 0.0) return {0, 0.0};
    const double top = static_cast<double>(n - 1);
    if (s >= top) return {n - 2, 1.0};
    const auto i = static_cast<std::size_t>(std::floor(s));
    const std::size_t lo = std::min(i, n - 2);
    return {lo, s - static_cast<double>(lo)};
}

} // namespace

double GridField::interpolate(double px, double py) const {
    const auto [i, wx] = bracket(px, x0, h1, n1);
    const auto [j, wy] = bracket(py, y0, h2, n2);
    const double v00 = at(i, j), v10 = at(i + 1, j);
    const double v01 = at(i, j + 1), v11 = at(i + 1, j + 1);
    return (1 - wy) * ((1 - wx) * v00 + wx * v10) + wy * ((1 - wx) * v01 + wx * v11);
}

void write_grid_binary(const GridField& g, const std::filesystem::path& p) {
    g.validate();
    auto os = detail::open_out(p, true);
    detail::write_magic(os, "GRD1");
    detail::write_pod<std::uint64_t>(os, g.n1);
    detail::write_pod<std::uint64_t>(os, g.n2);
    detail::write_pod<double>(os, g.h1);
    detail::write_pod<double>(os, g.h2);
    detail::write_doubles(os, g.values.data(), g.size());
}

GridField read_grid_binary(const std::filesystem::path& p) {
    auto is = detail::open_in(p, true);
    detail::check_magic(is, "GRD1");
    GridField g;
    g.n1 = detail::read_pod<std::uint64_t>(is);
    g.n2 = detail::read_pod<std::uint64_t>(is);
    g.h1 = detail::read_pod<double>(is);
    g.h2 = detail::read_pod<double>(is);
    g.x0 = -0.5 * g.h1 * static_cast<double>(g.n1);
    g.y0 = -0.5 * g.h2 * static_cast<double>(g.n2);
    g.values.resize(static_cast<Eigen::Index>(g.n1 * g.n2));
    detail::read_doubles(is, g.values.data(), g.size());
    g.validate();
    return g;
}

void write_grid_csv(const GridField& g, const std::filesystem::path& p) {
    auto os = detail::open_out(p);
    char buf[32];
    for (std::size_t j = 0; j < g.n2; ++j) {
        for (std::size_t i = 0; i < g.n1; ++i) {
            std::snprintf(buf, sizeof buf, "%.17g", g.at(i, j));
            if (i) os << ',';
            os << buf;
        }
        os << '\n';
    }
}

} // namespace eki
