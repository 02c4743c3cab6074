#ifndef CURVOPT_ASSEMBLY_HPP
#define CURVOPT_ASSEMBLY_HPP

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "curvopt/fields.hpp"
#include "curvopt/mesh.hpp"
#include "curvopt/p1.hpp"
#include "curvopt/quadrature.hpp"
#include "curvopt/sparse.hpp"

namespace curvopt {

/// Symmetric 2x2 matrix.
struct Sym2 {
  double a11 = 0.0;
  double a12 = 0.0;
  double a22 = 0.0;

  Vec2 apply(const Vec2& v) const { return {a11 * v.x + a12 * v.y, a12 * v.x + a22 * v.y}; }

  /// Eigenvalues in ascending order (closed form).
  std::array<double, 2> eigenvalues() const {
    const double mean = 0.5 * (a11 + a22);
    const double rad = std::hypot(0.5 * (a11 - a22), a12);
    return {mean - rad, mean + rad};
  }
};

/// Surface measure Q = sqrt(1 + |grad y|^2) >= 1.
inline double eval_Q(const Vec2& grad_y) { return std::sqrt(1.0 + grad_y.norm2()); }

/// Linearized/adjoint coefficient A = (1/Q)(I - g g^T / Q^2); its
/// eigenvalues are 1/Q^3 (along g) and 1/Q.
inline Sym2 eval_A(const Vec2& grad_y) {
  const double q2 = 1.0 + grad_y.norm2();
  const double q = std::sqrt(q2);
  const double scale = 1.0 / (q * q2);
  return {(q2 - grad_y.x * grad_y.x) * scale, -grad_y.x * grad_y.y * scale,
          (q2 - grad_y.y * grad_y.y) * scale};
}

/// Per-triangle coefficient data of the linearized operator.
struct ElementCoeff {
  Vec2 grad_y;
  double Q;
  Sym2 A;
};

inline ElementCoeff element_coeff(const Vec2& grad_y) {
  return {grad_y, eval_Q(grad_y), eval_A(grad_y)};
}

/// True where the state/adjoint value is prescribed (Dirichlet rows).
inline std::vector<std::uint8_t> dirichlet_mask(const Mesh& mesh) { return mesh.boundary_vertex; }

namespace detail {

inline void check_same_mesh(const Mesh& mesh, const P1Function& f, const char* what) {
  if (f.mesh != &mesh || f.size() != mesh.num_vertices())
    throw std::invalid_argument(std::string(what) + ": function not defined on this mesh");
}

}  // namespace detail

/// Sparse pattern of vertex-vertex couplings (one row per vertex).
inline SparseSymMatrix make_fe_matrix(const Mesh& mesh) {
  std::vector<std::vector<int>> adj(mesh.num_vertices());
  for (const Tri& t : mesh.triangles)
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        if (i != j) adj[t[i]].push_back(t[j]);
  return SparseSymMatrix::from_adjacency(std::move(adj));
}

/// Principal part of the state residual, sum_K |K| grad y . grad zeta_i / Q,
/// on rows not in the mask. Exact: grad y is constant per triangle.
inline std::vector<double> assemble_flux_residual(const P1Function& y,
                                                  const std::vector<std::uint8_t>& mask) {
  const Mesh& mesh = *y.mesh;
  std::vector<double> F(mesh.num_vertices(), 0.0);
  for (int k = 0; k < mesh.num_triangles(); ++k) {
    const ElementGeometry g = element_geometry(mesh, k);
    Vec2 grad{0.0, 0.0};
    for (int i = 0; i < 3; ++i) {
      grad.x += y.coeffs[g.verts[i]] * g.grad_basis[i].x;
      grad.y += y.coeffs[g.verts[i]] * g.grad_basis[i].y;
    }
    const double q = eval_Q(grad);
    for (int i = 0; i < 3; ++i)
      if (!mask[g.verts[i]]) F[g.verts[i]] += g.area * grad.dot(g.grad_basis[i]) / q;
  }
  return F;
}

/// Control load int u zeta_i with the degree-2 rule (exact for P1 u),
/// masked rows zero.
inline std::vector<double> control_load(const P1Function& u, const std::vector<std::uint8_t>& mask) {
  const Mesh& mesh = *u.mesh;
  const QuadratureRule rule = quadrature(2);
  std::vector<double> L(mesh.num_vertices(), 0.0);
  for (int k = 0; k < mesh.num_triangles(); ++k) {
    const ElementGeometry g = element_geometry(mesh, k);
    for (int qp = 0; qp < rule.size(); ++qp) {
      const double w = rule.weights[qp] * g.area * u.value_in(k, rule.points[qp]);
      for (int i = 0; i < 3; ++i)
        if (!mask[g.verts[i]]) L[g.verts[i]] += w * rule.points[qp][i];
    }
  }
  return L;
}

/// Residual of the discrete state equation,
///   F_i = sum_K |K| grad y . grad zeta_i / Q(grad y) - int u zeta_i,
/// on rows not in the mask (masked rows stay zero).
inline std::vector<double> assemble_state_residual(const P1Function& y, const P1Function& u,
                                                   const std::vector<std::uint8_t>& mask) {
  const Mesh& mesh = *y.mesh;
  detail::check_same_mesh(mesh, y, "assemble_state_residual(y)");
  detail::check_same_mesh(mesh, u, "assemble_state_residual(u)");
  if ((int)mask.size() != mesh.num_vertices())
    throw std::invalid_argument("assemble_state_residual: mask size mismatch");
  std::vector<double> F = assemble_flux_residual(y, mask);
  const std::vector<double> L = control_load(u, mask);
  for (std::size_t i = 0; i < F.size(); ++i) F[i] -= L[i];
  return F;
}

/// Stiffness with coefficient A[y],
///   K_ij = sum_K |K| grad zeta_j^T A(grad y|_K) grad zeta_i.
/// Masked rows and columns are eliminated with a unit diagonal, keeping the
/// matrix symmetric positive definite. This is both the Newton Jacobian of
/// the state residual and the adjoint system matrix.
inline SparseSymMatrix assemble_jacobian(const P1Function& y, const std::vector<std::uint8_t>& mask) {
  const Mesh& mesh = *y.mesh;
  detail::check_same_mesh(mesh, y, "assemble_jacobian");
  if ((int)mask.size() != mesh.num_vertices())
    throw std::invalid_argument("assemble_jacobian: mask size mismatch");
  SparseSymMatrix K = make_fe_matrix(mesh);
  for (int k = 0; k < mesh.num_triangles(); ++k) {
    const ElementGeometry g = element_geometry(mesh, k);
    const Sym2 A = eval_A(y.gradient(k));
    std::array<Vec2, 3> flux;
    for (int i = 0; i < 3; ++i) flux[i] = A.apply(g.grad_basis[i]);
    for (int i = 0; i < 3; ++i) {
      if (mask[g.verts[i]]) continue;
      for (int j = 0; j < 3; ++j) {
        if (mask[g.verts[j]]) continue;
        K.add(g.verts[i], g.verts[j], g.area * g.grad_basis[i].dot(flux[j]));
      }
    }
  }
  for (int v = 0; v < mesh.num_vertices(); ++v)
    if (mask[v]) K.at(v, v) = 1.0;
  return K;
}

/// Mass matrix M_ij = int zeta_i zeta_j (exact for degree >= 2).
inline SparseSymMatrix assemble_mass(const Mesh& mesh, int degree = 2) {
  if (degree < 2) throw std::invalid_argument("assemble_mass: degree must be >= 2");
  const QuadratureRule rule = quadrature(degree);
  SparseSymMatrix M = make_fe_matrix(mesh);
  for (int k = 0; k < mesh.num_triangles(); ++k) {
    const ElementGeometry g = element_geometry(mesh, k);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        double s = 0.0;
        for (int qp = 0; qp < rule.size(); ++qp)
          s += rule.weights[qp] * rule.points[qp][i] * rule.points[qp][j];
        M.add(g.verts[i], g.verts[j], g.area * s);
      }
  }
  return M;
}

/// L^p norm of a P1 function via the degree-4 rule per triangle. Exact for
/// p = 2; for other p the quadrature error is O(h^4) locally.
inline double lp_norm(const P1Function& f, double p) {
  if (!(p >= 1.0) || !std::isfinite(p)) throw std::invalid_argument("lp_norm: p must be >= 1");
  const Mesh& mesh = *f.mesh;
  const QuadratureRule rule = quadrature(4);
  double total = 0.0;
  for (int k = 0; k < mesh.num_triangles(); ++k) {
    double local = 0.0;
    for (int qp = 0; qp < rule.size(); ++qp)
      local += rule.weights[qp] * std::pow(std::abs(f.value_in(k, rule.points[qp])), p);
    total += triangle_area(mesh, k) * local;
  }
  return std::pow(total, 1.0 / p);
}

/// L^2 norm through the mass matrix, sqrt(f^T M f).
inline double l2_norm(const SparseSymMatrix& mass, const std::vector<double>& f) {
  return std::sqrt(vec_dot(f, mass.apply(f)));
}

/// Integral of a P1 function (exact).
inline double integral(const P1Function& f) {
  double s = 0.0;
  for (int k = 0; k < f.mesh->num_triangles(); ++k) {
    const Tri& t = f.mesh->triangles[k];
    s += triangle_area(*f.mesh, k) / 3.0 * (f[t[0]] + f[t[1]] + f[t[2]]);
  }
  return s;
}

/// Load vector L_i = int g zeta_i with g evaluated at quadrature points of
/// the given degree.
template <typename G>
std::vector<double> assemble_load(const Mesh& mesh, int degree, G&& g) {
  const QuadratureRule rule = quadrature(degree);
  std::vector<double> L(mesh.num_vertices(), 0.0);
  for (int k = 0; k < mesh.num_triangles(); ++k) {
    const ElementGeometry geo = element_geometry(mesh, k);
    for (int qp = 0; qp < rule.size(); ++qp) {
      const Vec2 p = quad_point(mesh, k, rule.points[qp]);
      const double w = rule.weights[qp] * geo.area * g(p.x, p.y);
      for (int i = 0; i < 3; ++i) L[geo.verts[i]] += w * rule.points[qp][i];
    }
  }
  return L;
}

}  // namespace curvopt

#endif  // CURVOPT_ASSEMBLY_HPP
