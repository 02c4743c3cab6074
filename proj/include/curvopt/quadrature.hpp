#ifndef CURVOPT_QUADRATURE_HPP
#define CURVOPT_QUADRATURE_HPP

#include <array>
#include <stdexcept>
#include <vector>

#include "curvopt/mesh.hpp"

namespace curvopt {

/// Quadrature rule on the reference triangle in barycentric coordinates.
/// Weights are relative to the triangle area and sum to 1.
struct QuadratureRule {
  std::vector<std::array<double, 3>> points;
  std::vector<double> weights;
  int degree = 0;

  int size() const { return static_cast<int>(points.size()); }
};

/// Rules of polynomial exactness degree 1 (centroid), 2 (edge midpoints)
/// and 4 (6-point Strang rule).
inline QuadratureRule quadrature(int degree) {
  QuadratureRule rule;
  rule.degree = degree;
  switch (degree) {
    case 1:
      rule.points = {{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0}};
      rule.weights = {1.0};
      break;
    case 2:
      rule.points = {{0.5, 0.5, 0.0}, {0.0, 0.5, 0.5}, {0.5, 0.0, 0.5}};
      rule.weights = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
      break;
    case 4: {
      const double a = 0.445948490915965;
      const double b = 0.091576213509771;
      const double wa = 0.223381589678011;
      const double wb = 0.109951743655322;
      rule.points = {{a, a, 1.0 - 2.0 * a}, {a, 1.0 - 2.0 * a, a}, {1.0 - 2.0 * a, a, a},
                     {b, b, 1.0 - 2.0 * b}, {b, 1.0 - 2.0 * b, b}, {1.0 - 2.0 * b, b, b}};
      rule.weights = {wa, wa, wa, wb, wb, wb};
      break;
    }
    default:
      throw std::invalid_argument("quadrature: unsupported degree (use 1, 2 or 4)");
  }
  return rule;
}

/// Cartesian location of a barycentric quadrature point in triangle k.
inline Vec2 quad_point(const Mesh& mesh, int k, const std::array<double, 3>& bary) {
  const Tri& t = mesh.triangles[static_cast<std::size_t>(k)];
  const Vec2& p0 = mesh.vertices[static_cast<std::size_t>(t[0])];
  const Vec2& p1 = mesh.vertices[static_cast<std::size_t>(t[1])];
  const Vec2& p2 = mesh.vertices[static_cast<std::size_t>(t[2])];
  return {bary[0] * p0.x + bary[1] * p1.x + bary[2] * p2.x,
          bary[0] * p0.y + bary[1] * p1.y + bary[2] * p2.y};
}

/// Integrates f(x, y) over the whole mesh with the given rule.
template <typename F>
double integrate(const Mesh& mesh, const QuadratureRule& rule, F&& f) {
  double total = 0.0;
  for (int k = 0; k < mesh.num_triangles(); ++k) {
    const double area = triangle_area(mesh, k);
    double local = 0.0;
    for (int q = 0; q < rule.size(); ++q) {
      const Vec2 p = quad_point(mesh, k, rule.points[static_cast<std::size_t>(q)]);
      local += rule.weights[static_cast<std::size_t>(q)] * f(p.x, p.y);
    }
    total += area * local;
  }
  return total;
}

}  // namespace curvopt

#endif  // CURVOPT_QUADRATURE_HPP
