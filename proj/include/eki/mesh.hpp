#pragma once

#include "eki/common.hpp"

#include <array>
#include <filesystem>
#include <vector>

namespace eki {

// Polar ring mesh of the unit disc: ring i (i = 1..rings) carries 6i nodes
// on the circle of radius i/rings, giving 6 rings^2 triangles.
struct DiscMesh {
    std::vector<std::array<double, 2>> nodes;
    std::vector<std::array<int, 3>> triangles;
    std::vector<int> boundary;  // outer ring, counter-clockwise
    int rings = 0;

    std::size_t num_nodes() const { return nodes.size(); }
    std::size_t num_triangles() const { return triangles.size(); }
    double signed_area(std::size_t t) const;
    std::array<double, 2> centroid(std::size_t t) const;
    std::vector<double> areas() const;
    double boundary_angle(std::size_t k) const;
    void validate() const;
};

DiscMesh build_disc_mesh_rings(int rings);
// Ring count chosen so 6 rings^2 is nearest to the target.
DiscMesh build_disc_mesh(int target_elements);

void write_mesh_json(const DiscMesh& m, const std::filesystem::path& p);

} // namespace eki
