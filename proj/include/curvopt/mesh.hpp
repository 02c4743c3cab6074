#ifndef CURVOPT_MESH_HPP
#define CURVOPT_MESH_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace curvopt {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2() = default;
  Vec2(double x_, double y_) : x(x_), y(y_) {}

  Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  double dot(const Vec2& o) const { return x * o.x + y * o.y; }
  double cross(const Vec2& o) const { return x * o.y - y * o.x; }
  double norm() const { return std::hypot(x, y); }
  double norm2() const { return x * x + y * y; }
};

inline Vec2 operator*(double s, const Vec2& v) { return v * s; }

using Tri = std::array<int, 3>;

/// Conforming triangulation with boundary markers. Triangles are
/// counterclockwise; a vertex is boundary iff it touches an edge shared by
/// exactly one triangle. finalize() derives the flags and h_max and
/// validates the edge-manifold invariants.
struct Mesh {
  std::vector<Vec2> vertices;
  std::vector<Tri> triangles;
  std::vector<std::uint8_t> boundary_vertex;
  double h_max = 0.0;

  int num_vertices() const { return (int)vertices.size(); }
  int num_triangles() const { return (int)triangles.size(); }
  bool is_boundary(int v) const { return boundary_vertex[v] != 0; }

  void finalize();
};

/// Undirected edge (a < b) with the number of incident triangles.
struct Edge {
  int a;
  int b;
  int tri_count;
};

/// All edges of the mesh, sorted lexicographically by (a, b).
inline std::vector<Edge> edge_table(const Mesh& mesh) {
  std::map<std::pair<int, int>, int> count;
  for (const Tri& t : mesh.triangles) {
    for (int e = 0; e < 3; ++e) {
      int a = t[e];
      int b = t[(e + 1) % 3];
      if (a > b) std::swap(a, b);
      ++count[{a, b}];
    }
  }
  std::vector<Edge> edges;
  edges.reserve(count.size());
  for (const auto& [key, c] : count) edges.push_back({key.first, key.second, c});
  return edges;
}

inline double triangle_area(const Mesh& mesh, int k) {
  const Tri& t = mesh.triangles[k];
  return 0.5 * (mesh.vertices[t[1]] - mesh.vertices[t[0]])
                   .cross(mesh.vertices[t[2]] - mesh.vertices[t[0]]);
}

inline double mesh_area(const Mesh& mesh) {
  double a = 0.0;
  for (int k = 0; k < mesh.num_triangles(); ++k) a += triangle_area(mesh, k);
  return a;
}

/// Total length of the boundary (edges incident to exactly one triangle).
inline double boundary_perimeter(const Mesh& mesh) {
  double per = 0.0;
  for (const Edge& e : edge_table(mesh))
    if (e.tri_count == 1) per += (mesh.vertices[e.b] - mesh.vertices[e.a]).norm();
  return per;
}

inline void Mesh::finalize() {
  const int nv = num_vertices();
  for (int k = 0; k < num_triangles(); ++k) {
    for (int v : triangles[k])
      if (v < 0 || v >= nv) throw std::invalid_argument("mesh: triangle vertex index out of range");
    if (triangle_area(*this, k) <= 0.0)
      throw std::invalid_argument("mesh: triangle " + std::to_string(k) + " not counterclockwise");
  }
  boundary_vertex.assign(nv, 0);
  h_max = 0.0;
  for (const Edge& e : edge_table(*this)) {
    if (e.tri_count != 1 && e.tri_count != 2)
      throw std::invalid_argument("mesh: edge shared by " + std::to_string(e.tri_count) +
                                  " triangles");
    h_max = std::max(h_max, (vertices[e.b] - vertices[e.a]).norm());
    if (e.tri_count == 1) {
      boundary_vertex[e.a] = 1;
      boundary_vertex[e.b] = 1;
    }
  }
}

/// Uniform n-by-n triangulation of [0,1]^2. Each cell is split along the
/// diagonal from its lower-left to its upper-right corner, which fixes a
/// canonical mesh for regression-stable output.
inline Mesh unit_square_mesh(int n) {
  if (n < 1) throw std::invalid_argument("unit_square_mesh: n must be >= 1");
  Mesh mesh;
  const int m = n + 1;
  mesh.vertices.reserve(m * m);
  for (int iy = 0; iy <= n; ++iy)
    for (int ix = 0; ix <= n; ++ix)
      mesh.vertices.emplace_back((double)ix / n, (double)iy / n);
  mesh.triangles.reserve(2 * n * n);
  for (int iy = 0; iy < n; ++iy) {
    for (int ix = 0; ix < n; ++ix) {
      const int v0 = iy * m + ix;  // lower left
      const int v1 = v0 + 1;       // lower right
      const int v2 = v0 + m;       // upper left
      const int v3 = v2 + 1;       // upper right
      mesh.triangles.push_back({v0, v1, v3});
      mesh.triangles.push_back({v0, v3, v2});
    }
  }
  mesh.finalize();
  return mesh;
}

/// Boundary curve of the clover domain: radius as a function of angle,
/// centered at (cx, cy). The parametrization is configurable; the default
/// is a mild four-lobed star that keeps the radius positive everywhere.
struct CloverShape {
  double r0 = 0.35;
  double amplitude = 0.3;
  int lobes = 4;
  double cx = 0.5;
  double cy = 0.5;

  double radius(double t) const { return r0 * (1.0 + amplitude * std::cos(lobes * t)); }
};

/// Polar-structured mesh of the star-shaped clover domain: a central fan
/// plus ring-by-ring quad splits. Ring k sits at radius (k/rings)*r(t), so
/// the outermost ring lies exactly on the boundary curve.
inline Mesh clover_mesh(int rings, int sectors, const CloverShape& shape = {}) {
  if (rings < 1) throw std::invalid_argument("clover_mesh: rings must be >= 1");
  if (sectors < 8 || sectors % 4 != 0)
    throw std::invalid_argument("clover_mesh: sectors must be >= 8 and divisible by 4");
  Mesh mesh;
  mesh.vertices.reserve(1 + rings * sectors);
  mesh.vertices.emplace_back(shape.cx, shape.cy);
  for (int k = 1; k <= rings; ++k) {
    const double rho = (double)k / rings;
    for (int j = 0; j < sectors; ++j) {
      const double t = 2.0 * std::numbers::pi * j / sectors;
      const double r = rho * shape.radius(t);
      mesh.vertices.emplace_back(shape.cx + r * std::cos(t), shape.cy + r * std::sin(t));
    }
  }
  auto vid = [sectors](int ring, int j) { return 1 + (ring - 1) * sectors + (j % sectors); };
  // Central fan.
  for (int j = 0; j < sectors; ++j) mesh.triangles.push_back({0, vid(1, j), vid(1, j + 1)});
  // Annular quads (a, A, B, b) traversed counterclockwise, split along a-B.
  for (int k = 1; k < rings; ++k) {
    for (int j = 0; j < sectors; ++j) {
      const int a = vid(k, j);
      const int b = vid(k, j + 1);
      const int A = vid(k + 1, j);
      const int B = vid(k + 1, j + 1);
      mesh.triangles.push_back({a, A, B});
      mesh.triangles.push_back({a, B, b});
    }
  }
  mesh.finalize();
  return mesh;
}

/// Split every triangle into four via edge midpoints. Boundary midpoints
/// inherit the boundary flag; there is no reprojection onto curved
/// boundaries, so refinement is purely topological.
inline Mesh refine_uniform(const Mesh& mesh) {
  Mesh fine;
  fine.vertices = mesh.vertices;
  std::map<std::pair<int, int>, int> midpoint;
  for (const Edge& e : edge_table(mesh)) {
    midpoint[{e.a, e.b}] = fine.num_vertices();
    fine.vertices.emplace_back(0.5 * (mesh.vertices[e.a].x + mesh.vertices[e.b].x),
                               0.5 * (mesh.vertices[e.a].y + mesh.vertices[e.b].y));
  }
  auto mid = [&midpoint](int a, int b) {
    if (a > b) std::swap(a, b);
    return midpoint.at({a, b});
  };
  fine.triangles.reserve(4 * mesh.triangles.size());
  for (const Tri& t : mesh.triangles) {
    const int m01 = mid(t[0], t[1]);
    const int m12 = mid(t[1], t[2]);
    const int m20 = mid(t[2], t[0]);
    fine.triangles.push_back({t[0], m01, m20});
    fine.triangles.push_back({t[1], m12, m01});
    fine.triangles.push_back({t[2], m20, m12});
    fine.triangles.push_back({m01, m12, m20});
  }
  fine.finalize();
  return fine;
}

/// Writes the minimal ASCII mesh format:
///   ntri-mesh 1
///   V T
///   x y b        (V lines, b = boundary flag)
///   i j k        (T lines, 0-based)
inline void write_mesh(const Mesh& mesh, std::ostream& out) {
  out << "ntri-mesh 1\n";
  out << mesh.num_vertices() << ' ' << mesh.num_triangles() << '\n';
  char buf[128];
  for (int v = 0; v < mesh.num_vertices(); ++v) {
    std::snprintf(buf, sizeof(buf), "%.17g %.17g %d\n", mesh.vertices[v].x, mesh.vertices[v].y,
                  mesh.is_boundary(v) ? 1 : 0);
    out << buf;
  }
  for (const Tri& t : mesh.triangles) out << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
}

inline Mesh read_mesh(std::istream& in) {
  std::string tag;
  int version = 0;
  in >> tag >> version;
  if (!in || tag != "ntri-mesh" || version != 1) throw std::invalid_argument("read_mesh: bad header");
  int nv = 0, nt = 0;
  in >> nv >> nt;
  if (!in || nv <= 0 || nt <= 0) throw std::invalid_argument("read_mesh: bad counts");
  Mesh mesh;
  mesh.vertices.resize(nv);
  std::vector<std::uint8_t> flags(nv);
  for (int v = 0; v < nv; ++v) {
    int b = 0;
    in >> mesh.vertices[v].x >> mesh.vertices[v].y >> b;
    flags[v] = (std::uint8_t)(b != 0);
  }
  mesh.triangles.resize(nt);
  for (Tri& t : mesh.triangles) in >> t[0] >> t[1] >> t[2];
  if (!in) throw std::invalid_argument("read_mesh: truncated file");
  mesh.finalize();
  if (mesh.boundary_vertex != flags)
    throw std::invalid_argument("read_mesh: stored boundary flags inconsistent with topology");
  return mesh;
}

inline void write_mesh_file(const Mesh& mesh, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_mesh_file: cannot open " + path);
  write_mesh(mesh, out);
  if (!out) throw std::runtime_error("write_mesh_file: write failed for " + path);
}

inline Mesh read_mesh_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_mesh_file: cannot open " + path);
  return read_mesh(in);
}

}  // namespace curvopt

#endif  // CURVOPT_MESH_HPP
