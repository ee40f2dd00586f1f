// Triangulations of the unit square.
//
// The mesh family M1..M6 starts from a 56-triangle base mesh (rows of 5, 9,
// 9, 9, 5 vertices at y = 0, 1/4, 1/2, 3/4, 1) and applies uniform red
// refinement, so level l has 56 * 4^(l-1) triangles. Refinement keeps the
// coarse vertices as the leading entries of the vertex list, which makes
// nested meshes vertex-compatible.

#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <vector>

namespace stefan {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

using Triangle = std::array<int, 3>;

class Mesh {
 public:
  /// Triangles must be counterclockwise with positive area. `boundary` flags
  /// one entry per vertex; when empty they are derived from the coordinates.
  Mesh(std::vector<Point2> vertices, std::vector<Triangle> triangles, std::vector<char> boundary = {},
       double size_h = 0.0, int level = 0);

  const std::vector<Point2>& vertices() const { return vertices_; }
  const std::vector<Triangle>& triangles() const { return triangles_; }
  const Point2& vertex(std::size_t i) const { return vertices_[i]; }

  std::size_t num_vertices() const { return vertices_.size(); }
  std::size_t num_cells() const { return triangles_.size(); }
  std::size_t num_edges() const { return num_edges_; }

  bool is_boundary(std::size_t i) const { return boundary_[i] != 0; }
  std::vector<int> boundary_vertices() const;

  /// Nominal mesh size of the family (longest boundary edge).
  double size_h() const { return size_h_; }
  /// Largest triangle diameter.
  double max_diameter() const;
  double signed_area(std::size_t t) const;
  double total_area() const;
  int level() const { return level_; }

 private:
  std::vector<Point2> vertices_;
  std::vector<Triangle> triangles_;
  std::vector<char> boundary_;
  std::size_t num_edges_ = 0;
  double size_h_ = 0.0;
  int level_ = 0;
};

/// Counts published for the M1..M6 family.
struct MeshCounts {
  std::size_t cells;
  std::size_t edges;
  std::size_t vertices;
  double size;
};
const std::array<MeshCounts, 6>& reference_mesh_counts();

/// Mesh M<level>, level in 1..6. Throws std::out_of_range otherwise.
Mesh generate_mesh(int level);

/// Uniform red refinement: every triangle split into four via edge midpoints.
Mesh refine_uniform(const Mesh& coarse);

/// Text format: "NV NT", NV lines "x y b", NT lines "i j k" (0-based, ccw).
void write_mesh(std::ostream& os, const Mesh& mesh);
Mesh read_mesh(std::istream& is);

}  // namespace stefan
