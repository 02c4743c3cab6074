#ifndef CURVOPT_P1_HPP
#define CURVOPT_P1_HPP

#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "curvopt/mesh.hpp"

namespace curvopt {

/// Geometry of one triangle needed by every assembly kernel: vertex ids,
/// area, and the (constant) gradients of the three barycentric basis
/// functions.
struct ElementGeometry {
  Tri verts;
  double area;
  std::array<Vec2, 3> grad_basis;
};

inline ElementGeometry element_geometry(const Mesh& mesh, int k) {
  const Tri& t = mesh.triangles[k];
  const Vec2& p0 = mesh.vertices[t[0]];
  const Vec2& p1 = mesh.vertices[t[1]];
  const Vec2& p2 = mesh.vertices[t[2]];
  const double two_a = (p1 - p0).cross(p2 - p0);
  ElementGeometry g;
  g.verts = t;
  g.area = 0.5 * two_a;
  g.grad_basis[0] = Vec2{p1.y - p2.y, p2.x - p1.x} * (1.0 / two_a);
  g.grad_basis[1] = Vec2{p2.y - p0.y, p0.x - p2.x} * (1.0 / two_a);
  g.grad_basis[2] = Vec2{p0.y - p1.y, p1.x - p0.x} * (1.0 / two_a);
  return g;
}

/// Continuous piecewise-linear function given by one coefficient per mesh
/// vertex. The gradient is constant on each triangle.
struct P1Function {
  const Mesh* mesh = nullptr;
  std::vector<double> coeffs;

  P1Function() = default;
  explicit P1Function(const Mesh& m, double fill = 0.0) : mesh(&m), coeffs(m.num_vertices(), fill) {}
  P1Function(const Mesh& m, std::vector<double> c) : mesh(&m), coeffs(std::move(c)) {
    if ((int)coeffs.size() != m.num_vertices())
      throw std::invalid_argument("P1Function: coefficient count != vertex count");
  }

  double operator[](int v) const { return coeffs[v]; }
  double& operator[](int v) { return coeffs[v]; }
  int size() const { return (int)coeffs.size(); }

  /// Gradient on triangle k.
  Vec2 gradient(int k) const {
    const ElementGeometry g = element_geometry(*mesh, k);
    Vec2 grad{0.0, 0.0};
    for (int i = 0; i < 3; ++i) {
      grad.x += coeffs[g.verts[i]] * g.grad_basis[i].x;
      grad.y += coeffs[g.verts[i]] * g.grad_basis[i].y;
    }
    return grad;
  }

  /// Value at a barycentric point of triangle k.
  double value_in(int k, const std::array<double, 3>& bary) const {
    const Tri& t = mesh->triangles[k];
    return bary[0] * coeffs[t[0]] + bary[1] * coeffs[t[1]] + bary[2] * coeffs[t[2]];
  }
};

/// Nodal interpolant of an analytic function.
template <typename F>
P1Function interpolate(const Mesh& mesh, F&& f) {
  P1Function p(mesh);
  for (int v = 0; v < mesh.num_vertices(); ++v)
    p[v] = f(mesh.vertices[v].x, mesh.vertices[v].y);
  return p;
}

/// Point locator over a uniform bin grid; used to evaluate a P1 function at
/// arbitrary points (e.g. on a finer mesh of the same domain).
class PointLocator {
 public:
  explicit PointLocator(const Mesh& mesh, int bins_per_side = 0) : mesh_(&mesh) {
    lo_ = hi_ = mesh.vertices.at(0);
    for (const Vec2& p : mesh.vertices) {
      lo_.x = std::min(lo_.x, p.x);
      lo_.y = std::min(lo_.y, p.y);
      hi_.x = std::max(hi_.x, p.x);
      hi_.y = std::max(hi_.y, p.y);
    }
    bins_ = bins_per_side > 0 ? bins_per_side
                              : std::max(1, (int)std::sqrt(mesh.num_triangles() / 2.0));
    cells_.resize((std::size_t)bins_ * bins_);
    for (int k = 0; k < mesh.num_triangles(); ++k) {
      const Tri& t = mesh.triangles[k];
      Vec2 tlo = mesh.vertices[t[0]];
      Vec2 thi = tlo;
      for (int i = 1; i < 3; ++i) {
        tlo.x = std::min(tlo.x, mesh.vertices[t[i]].x);
        tlo.y = std::min(tlo.y, mesh.vertices[t[i]].y);
        thi.x = std::max(thi.x, mesh.vertices[t[i]].x);
        thi.y = std::max(thi.y, mesh.vertices[t[i]].y);
      }
      for (int bx = bin(tlo.x, lo_.x, hi_.x); bx <= bin(thi.x, lo_.x, hi_.x); ++bx)
        for (int by = bin(tlo.y, lo_.y, hi_.y); by <= bin(thi.y, lo_.y, hi_.y); ++by)
          cells_[by * bins_ + bx].push_back(k);
    }
  }

  /// Triangle containing (x, y) with its barycentric coordinates, or -1.
  /// Points within tol of an edge resolve to the nearest candidate.
  int locate(double x, double y, std::array<double, 3>& bary, double tol = 1e-10) const {
    const int bx = bin(x, lo_.x, hi_.x);
    const int by = bin(y, lo_.y, hi_.y);
    int best = -1;
    double best_miss = tol;
    for (int k : cells_[by * bins_ + bx]) {
      const std::array<double, 3> b = barycentric(k, x, y);
      const double miss = -std::min({b[0], b[1], b[2]});
      if (miss <= 0.0) {
        bary = b;
        return k;
      }
      if (miss < best_miss) {
        best_miss = miss;
        best = k;
        bary = b;
      }
    }
    return best;
  }

  double eval(const P1Function& f, double x, double y) const {
    std::array<double, 3> bary;
    const int k = locate(x, y, bary);
    if (k < 0) throw std::invalid_argument("PointLocator::eval: point outside mesh");
    return f.value_in(k, bary);
  }

 private:
  int bin(double v, double lo, double hi) const {
    if (hi <= lo) return 0;
    return std::clamp((int)((v - lo) / (hi - lo) * bins_), 0, bins_ - 1);
  }

  std::array<double, 3> barycentric(int k, double x, double y) const {
    const Tri& t = mesh_->triangles[k];
    const Vec2& p0 = mesh_->vertices[t[0]];
    const Vec2& p1 = mesh_->vertices[t[1]];
    const Vec2& p2 = mesh_->vertices[t[2]];
    const double two_a = (p1 - p0).cross(p2 - p0);
    const Vec2 p{x, y};
    const double b0 = (p1 - p).cross(p2 - p) / two_a;
    const double b1 = (p2 - p).cross(p0 - p) / two_a;
    return {b0, b1, 1.0 - b0 - b1};
  }

  const Mesh* mesh_;
  Vec2 lo_, hi_;
  int bins_ = 1;
  std::vector<std::vector<int>> cells_;
};

}  // namespace curvopt

#endif  // CURVOPT_P1_HPP
