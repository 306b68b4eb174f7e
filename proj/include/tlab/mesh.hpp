#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "tlab/fields.hpp"
#include "tlab/types.hpp"

namespace tlab {

enum BoundarySide : unsigned {
    side_bottom = 1u,
    side_right = 2u,
    side_top = 4u,
    side_left = 8u,
    all_sides = 15u,
};

enum class Subdomain : std::uint8_t { minus = 0, plus = 1, inclusion = 2 };

struct Mesh {
    Box domain;
    double h_target = 0.0;
    bool interface_fitted = true;
    std::vector<Vec2> vertices;
    std::vector<std::array<int, 3>> triangles;  // counter-clockwise
    std::vector<unsigned> boundary;              // BoundarySide mask per vertex
    std::vector<Subdomain> tags;                 // per triangle

    std::size_t num_vertices() const { return vertices.size(); }
    std::size_t num_triangles() const { return triangles.size(); }
    double area(std::size_t t) const;
    Vec2 centroid(std::size_t t) const;
};

struct MeshSpec {
    Box domain;
    std::optional<InterfaceCurve> interface;
    std::optional<Shape> inclusion;
    double h = 0.05;
};

/// Interface- and inclusion-fitted conforming triangulation of the domain.
/// Throws Error(geometry) when a feature sits closer than 2h to another.
Mesh build_mesh(const MeshSpec& spec);

struct MeshEdge {
    int a = -1, b = -1;
    int left = -1, right = -1;  // adjacent triangles; right == -1 on the outer boundary
};

std::vector<MeshEdge> mesh_edges(const Mesh& mesh);

struct MeshQuality {
    double min_angle_deg = 0.0;
    double max_diameter = 0.0;
    double min_area = 0.0;
};

MeshQuality mesh_quality(const Mesh& mesh);

/// Plain-text mesh format, see docs/formats.md.
void write_mesh(const Mesh& mesh, std::ostream& os);
Mesh read_mesh(std::istream& is);

}  // namespace tlab
