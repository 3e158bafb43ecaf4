#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "morph/boundary.hpp"
#include "morph/power_diagram.hpp"

namespace morph {

// Triangle mesh built from a power diagram: welded cell-boundary vertices
// plus the cell sites. Every triangle belongs to exactly one cell.
struct FeMesh {
  std::vector<Point2> vertices;
  std::vector<std::array<int, 3>> triangles;  // counter-clockwise
  std::vector<int> tri_cell;
  // Boundary loops (vertex indices) of every piece of every cell.
  std::vector<std::vector<std::vector<int>>> cell_loops;
  std::vector<int> cell_site_vertex;  // -1 when the site is not a mesh vertex

  std::vector<std::uint8_t> fixed;     // on a fixed segment
  std::vector<std::uint8_t> actuated;  // on an actuated segment
  // target_nodes[j][t]: vertex carrying target t of state j.
  std::vector<std::vector<int>> target_nodes;
  std::vector<std::vector<double>> target_snap_distance;

  std::size_t num_cells() const { return cell_loops.size(); }
  double triangle_area(std::size_t t) const;
  double total_area() const;
};

/// Tolerance for matching mesh vertices against boundary segments.
double tag_tolerance(const Polygon &domain);

/// Triangulate every cell (fan through the site for convex cells,
/// constrained Delaunay otherwise), weld shared vertices across cells and tag
/// boundary vertices. Throws InvalidGeometry for empty cells and
/// MeshTaggingError when a fixed or actuated segment catches no vertex.
FeMesh extract_fe_mesh(const PowerDiagram &diagram, const BoundarySpec *boundary);
inline FeMesh extract_fe_mesh(const PowerDiagram &diagram,
                              const BoundarySpec &boundary) {
  return extract_fe_mesh(diagram, &boundary);
}

/// Re-tag an existing mesh against another boundary specification.
void tag_boundaries(FeMesh &mesh, const Polygon &domain, const BoundarySpec &boundary);

}  // namespace morph
