#include "stefan/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <iomanip>
#include <map>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>

namespace stefan {

namespace {

bool on_unit_square_boundary(const Point2& p) {
  return p.x == 0.0 || p.x == 1.0 || p.y == 0.0 || p.y == 1.0;
}

double dist(const Point2& a, const Point2& b) { return std::hypot(a.x - b.x, a.y - b.y); }

std::vector<std::pair<int, int>> unique_edges(const std::vector<Triangle>& tris) {
  std::vector<std::pair<int, int>> edges;
  edges.reserve(3 * tris.size());
  for (const auto& t : tris)
    for (int k = 0; k < 3; ++k) {
      const int a = t[k], b = t[(k + 1) % 3];
      edges.emplace_back(std::min(a, b), std::max(a, b));
    }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  return edges;
}

}  // namespace

Mesh::Mesh(std::vector<Point2> vertices, std::vector<Triangle> triangles, std::vector<char> boundary,
           double size_h, int level)
    : vertices_(std::move(vertices)), triangles_(std::move(triangles)), boundary_(std::move(boundary)),
      level_(level) {
  const int nv = static_cast<int>(vertices_.size());
  for (const auto& t : triangles_)
    for (int v : t)
      if (v < 0 || v >= nv) throw std::invalid_argument("Mesh: triangle references a missing vertex");
  if (boundary_.empty()) {
    boundary_.resize(vertices_.size());
    for (std::size_t i = 0; i < vertices_.size(); ++i) boundary_[i] = on_unit_square_boundary(vertices_[i]);
  }
  if (boundary_.size() != vertices_.size()) throw std::invalid_argument("Mesh: one boundary flag per vertex");

  const auto edges = unique_edges(triangles_);
  num_edges_ = edges.size();

  if (size_h > 0.0) {
    size_h_ = size_h;
  } else {
    for (const auto& [a, b] : edges)
      if (is_boundary(a) && is_boundary(b)) size_h_ = std::max(size_h_, dist(vertices_[a], vertices_[b]));
  }
}

std::vector<int> Mesh::boundary_vertices() const {
  std::vector<int> out;
  for (std::size_t i = 0; i < boundary_.size(); ++i)
    if (boundary_[i]) out.push_back(static_cast<int>(i));
  return out;
}

double Mesh::signed_area(std::size_t t) const {
  const auto& [a, b, c] = triangles_[t];
  const Point2 &p = vertices_[a], &q = vertices_[b], &r = vertices_[c];
  return 0.5 * ((q.x - p.x) * (r.y - p.y) - (r.x - p.x) * (q.y - p.y));
}

double Mesh::total_area() const {
  double s = 0.0;
  for (std::size_t t = 0; t < triangles_.size(); ++t) s += signed_area(t);
  return s;
}

double Mesh::max_diameter() const {
  double h = 0.0;
  for (const auto& [a, b, c] : triangles_) {
    h = std::max({h, dist(vertices_[a], vertices_[b]), dist(vertices_[b], vertices_[c]),
                  dist(vertices_[c], vertices_[a])});
  }
  return h;
}

const std::array<MeshCounts, 6>& reference_mesh_counts() {
  static const std::array<MeshCounts, 6> counts{{
      {56, 92, 37, 0.250},
      {224, 352, 129, 0.125},
      {896, 1376, 481, 0.0625},
      {3584, 5440, 1857, 0.0313},
      {14336, 21632, 7297, 0.0156},
      {57344, 86272, 28929, 0.0078},
  }};
  return counts;
}

namespace {

// Base mesh: vertex rows at y = j/4. Rows 0 and 4 carry 5 vertices (spacing
// 1/4), rows 1..3 carry 9 (spacing 1/8). Strips between a 5-row and a 9-row
// use three triangles per coarse segment; 9-9 strips use two per segment.
Mesh base_mesh() {
  std::vector<Point2> verts;
  std::vector<std::vector<int>> rows(5);
  for (int j = 0; j <= 4; ++j) {
    const int n = (j == 0 || j == 4) ? 4 : 8;
    for (int i = 0; i <= n; ++i) {
      rows[j].push_back(static_cast<int>(verts.size()));
      verts.push_back({static_cast<double>(i) / n, static_cast<double>(j) / 4.0});
    }
  }
  std::vector<Triangle> tris;
  auto coarse_fine = [&](const std::vector<int>& coarse, const std::vector<int>& fine, bool coarse_below) {
    for (std::size_t i = 0; i + 1 < coarse.size(); ++i) {
      const int c0 = coarse[i], c1 = coarse[i + 1];
      const int f0 = fine[2 * i], f1 = fine[2 * i + 1], f2 = fine[2 * i + 2];
      if (coarse_below) {
        tris.push_back({c0, c1, f1});
        tris.push_back({c0, f1, f0});
        tris.push_back({c1, f2, f1});
      } else {
        tris.push_back({f0, f1, c0});
        tris.push_back({f1, c1, c0});
        tris.push_back({f1, f2, c1});
      }
    }
  };
  auto fine_fine = [&](const std::vector<int>& lo, const std::vector<int>& hi) {
    for (std::size_t i = 0; i + 1 < lo.size(); ++i) {
      tris.push_back({lo[i], lo[i + 1], hi[i + 1]});
      tris.push_back({lo[i], hi[i + 1], hi[i]});
    }
  };
  coarse_fine(rows[0], rows[1], true);
  fine_fine(rows[1], rows[2]);
  fine_fine(rows[2], rows[3]);
  coarse_fine(rows[4], rows[3], false);
  return Mesh(std::move(verts), std::move(tris), {}, 0.25, 1);
}

}  // namespace

Mesh refine_uniform(const Mesh& coarse) {
  std::vector<Point2> verts = coarse.vertices();
  std::vector<char> boundary(verts.size());
  for (std::size_t i = 0; i < verts.size(); ++i) boundary[i] = coarse.is_boundary(i);

  std::map<std::pair<int, int>, int> midpoint;
  auto mid = [&](int a, int b) {
    const auto key = std::make_pair(std::min(a, b), std::max(a, b));
    auto it = midpoint.find(key);
    if (it != midpoint.end()) return it->second;
    const Point2 &p = verts[a], &q = verts[b];
    const int idx = static_cast<int>(verts.size());
    verts.push_back({0.5 * (p.x + q.x), 0.5 * (p.y + q.y)});
    boundary.push_back(static_cast<char>(coarse.is_boundary(a) && coarse.is_boundary(b) &&
                                         on_unit_square_boundary(verts.back())));
    midpoint.emplace(key, idx);
    return idx;
  };

  std::vector<Triangle> tris;
  tris.reserve(4 * coarse.num_cells());
  for (const auto& [a, b, c] : coarse.triangles()) {
    const int ab = mid(a, b), bc = mid(b, c), ca = mid(c, a);
    tris.push_back({a, ab, ca});
    tris.push_back({ab, b, bc});
    tris.push_back({ca, bc, c});
    tris.push_back({ab, bc, ca});
  }
  return Mesh(std::move(verts), std::move(tris), std::move(boundary), 0.5 * coarse.size_h(),
              coarse.level() > 0 ? coarse.level() + 1 : 0);
}

Mesh generate_mesh(int level) {
  if (level < 1 || level > 6) throw std::out_of_range("generate_mesh: level must be in 1..6");
  Mesh m = base_mesh();
  for (int l = 1; l < level; ++l) m = refine_uniform(m);
  return m;
}

void write_mesh(std::ostream& os, const Mesh& mesh) {
  os << mesh.num_vertices() << ' ' << mesh.num_cells() << '\n';
  os << std::setprecision(17);
  for (std::size_t i = 0; i < mesh.num_vertices(); ++i) {
    const auto& p = mesh.vertex(i);
    os << p.x << ' ' << p.y << ' ' << (mesh.is_boundary(i) ? 1 : 0) << '\n';
  }
  for (const auto& [a, b, c] : mesh.triangles()) os << a << ' ' << b << ' ' << c << '\n';
}

Mesh read_mesh(std::istream& is) {
  std::size_t nv = 0, nt = 0;
  if (!(is >> nv >> nt)) throw std::runtime_error("read_mesh: malformed header");
  std::vector<Point2> verts(nv);
  std::vector<char> boundary(nv);
  for (std::size_t i = 0; i < nv; ++i) {
    int b = 0;
    if (!(is >> verts[i].x >> verts[i].y >> b)) throw std::runtime_error("read_mesh: malformed vertex line");
    boundary[i] = static_cast<char>(b != 0);
  }
  std::vector<Triangle> tris(nt);
  for (auto& t : tris)
    if (!(is >> t[0] >> t[1] >> t[2])) throw std::runtime_error("read_mesh: malformed triangle line");
  return Mesh(std::move(verts), std::move(tris), std::move(boundary));
}

}  // namespace stefan
