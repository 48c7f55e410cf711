#pragma once

#include "eki/common.hpp"

#include <filesystem>

namespace eki {

// Cell-centred values on the square [-1,1]^2, x index fastest:
// values[i + n1*j] sits at (x0 + (i+0.5)h1, y0 + (j+0.5)h2).
struct GridField {
    std::size_t n1 = 0;
    std::size_t n2 = 0;
    double h1 = 0.0;
    double h2 = 0.0;
    double x0 = -1.0;
    double y0 = -1.0;
    Vector values;

    GridField() = default;
    // Square grid of n x n cells on [-1,1]^2.
    static GridField square(std::size_t n, double fill = 0.0);

    std::size_t size() const { return n1 * n2; }
    double x(std::size_t i) const { return x0 + (static_cast<double>(i) + 0.5) * h1; }
    double y(std::size_t j) const { return y0 + (static_cast<double>(j) + 0.5) * h2; }
    double& at(std::size_t i, std::size_t j) { return values[static_cast<Eigen::Index>(i + n1 * j)]; }
    double at(std::size_t i, std::size_t j) const {
        return values[static_cast<Eigen::Index>(i + n1 * j)];
    }
    bool same_geometry(const GridField& o) const;
    void validate() const;

    // Bilinear interpolation between cell centres, constant extension past
    // the outermost centres.
    double interpolate(double px, double py) const;
};

// "GRD1", n1, n2 (uint64), h1, h2 (double), values.
void write_grid_binary(const GridField& g, const std::filesystem::path& p);
GridField read_grid_binary(const std::filesystem::path& p);
// One grid row (fixed j) per line, bottom row first.
void write_grid_csv(const GridField& g, const std::filesystem::path& p);

} // namespace eki
