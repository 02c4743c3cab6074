#ifndef CURVOPT_SOLVER_HPP
#define CURVOPT_SOLVER_HPP

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "curvopt/assembly.hpp"
#include "curvopt/mesh.hpp"
#include "curvopt/p1.hpp"
#include "curvopt/sparse.hpp"

namespace curvopt {

/// Convergence record of one Newton solve. max_grad_inf monitors the size
/// of the discrete gradient (the underlying operator is only locally
/// coercive; large gradients signal data outside the solvable regime).
struct NewtonReport {
  int iterations = 0;
  std::vector<double> residual_history;
  bool converged = false;
  double max_grad_inf = 0.0;
};

class NewtonFailure : public std::runtime_error {
 public:
  NewtonFailure(const std::string& what, NewtonReport report)
      : std::runtime_error(what), report_(std::move(report)) {}

  const NewtonReport& report() const { return report_; }

 private:
  NewtonReport report_;
};

namespace detail {

inline double max_gradient_norm(const P1Function& y) {
  double worst = 0.0;
  for (int k = 0; k < y.mesh->num_triangles(); ++k)
    worst = std::max(worst, y.gradient(k).norm());
  return worst;
}

inline std::vector<double> residual_from_load(const P1Function& y, const std::vector<double>& load,
                                              const std::vector<std::uint8_t>& mask) {
  std::vector<double> F = assemble_flux_residual(y, mask);
  for (std::size_t i = 0; i < F.size(); ++i) F[i] -= load[i];
  return F;
}

}  // namespace detail

/// Solution of the linearization at y = 0 (the Poisson problem with the
/// given load and boundary values v); serves as the Newton initial guess.
inline P1Function state_initial_guess_from_load(const Mesh& mesh, const std::vector<double>& load,
                                                const P1Function& v_samples,
                                                double lin_rel_tol = 1e-12) {
  const std::vector<std::uint8_t> mask = dirichlet_mask(mesh);
  P1Function lift(mesh);
  for (int i = 0; i < mesh.num_vertices(); ++i)
    if (mask[i]) lift[i] = v_samples[i];
  // rhs = load - K0 * lift on free rows; K0 is the plain Laplacian.
  std::vector<double> rhs = load;
  for (int k = 0; k < mesh.num_triangles(); ++k) {
    const ElementGeometry g = element_geometry(mesh, k);
    Vec2 grad{0.0, 0.0};
    for (int i = 0; i < 3; ++i) {
      grad.x += lift[g.verts[i]] * g.grad_basis[i].x;
      grad.y += lift[g.verts[i]] * g.grad_basis[i].y;
    }
    for (int i = 0; i < 3; ++i)
      if (!mask[g.verts[i]]) rhs[g.verts[i]] -= g.area * grad.dot(g.grad_basis[i]);
  }
  const SparseSymMatrix K0 = assemble_jacobian(P1Function(mesh), mask);
  const std::vector<double> delta = solve_spd(K0, rhs, lin_rel_tol);
  P1Function y = lift;
  for (int i = 0; i < mesh.num_vertices(); ++i)
    if (!mask[i]) y[i] += delta[i];
  return y;
}

inline P1Function state_initial_guess(const P1Function& u, const P1Function& v_samples,
                                      double lin_rel_tol = 1e-12) {
  const std::vector<std::uint8_t> mask = dirichlet_mask(*u.mesh);
  return state_initial_guess_from_load(*u.mesh, control_load(u, mask), v_samples, lin_rel_tol);
}

/// Damped Newton solve of the discrete state equation with a fixed load
/// vector. Boundary values come from v_samples (interior entries ignored).
/// Each step solves J(y_k) d = -F(y_k); the step is halved (at most 30
/// times) until ||F||_2 strictly decreases. Throws NewtonFailure when the
/// residual cannot be driven below tol.
inline std::pair<P1Function, NewtonReport> solve_state_from_load(
    const Mesh& mesh, const std::vector<double>& load, const P1Function& v_samples, double tol,
    int max_iter, double lin_rel_tol = 1e-12, const P1Function* warm_start = nullptr) {
  if (!(tol > 0.0)) throw std::invalid_argument("solve_state: tol must be positive");
  const std::vector<std::uint8_t> mask = dirichlet_mask(mesh);

  P1Function y = warm_start ? *warm_start
                            : state_initial_guess_from_load(mesh, load, v_samples, lin_rel_tol);
  for (int i = 0; i < mesh.num_vertices(); ++i)
    if (mask[i]) y[i] = v_samples[i];

  NewtonReport report;
  std::vector<double> F = detail::residual_from_load(y, load, mask);
  double fnorm = vec_norm2(F);
  report.residual_history.push_back(fnorm);

  while (fnorm > tol) {
    if (report.iterations >= max_iter) {
      report.max_grad_inf = detail::max_gradient_norm(y);
      throw NewtonFailure("solve_state: max_iter reached with residual " + std::to_string(fnorm),
                          report);
    }
    const SparseSymMatrix K = assemble_jacobian(y, mask);
    std::vector<double> rhs(F.size());
    for (std::size_t i = 0; i < F.size(); ++i) rhs[i] = -F[i];
    std::vector<double> delta;
    try {
      delta = solve_spd(K, rhs, lin_rel_tol);
    } catch (const SolverFailure& e) {
      report.max_grad_inf = detail::max_gradient_norm(y);
      throw NewtonFailure(std::string("solve_state: linear solve failed (") + e.what() + ")",
                          report);
    }

    double step = 1.0;
    P1Function y_trial = y;
    std::vector<double> F_trial;
    double fnorm_trial = fnorm;
    bool accepted = false;
    for (int halving = 0; halving <= 30; ++halving) {
      for (int i = 0; i < mesh.num_vertices(); ++i) y_trial[i] = y[i] + step * delta[i];
      F_trial = detail::residual_from_load(y_trial, load, mask);
      fnorm_trial = vec_norm2(F_trial);
      if (std::isfinite(fnorm_trial) && fnorm_trial < fnorm) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      report.max_grad_inf = detail::max_gradient_norm(y);
      throw NewtonFailure("solve_state: damping exhausted at residual " + std::to_string(fnorm),
                          report);
    }
    y = std::move(y_trial);
    F = std::move(F_trial);
    fnorm = fnorm_trial;
    ++report.iterations;
    report.residual_history.push_back(fnorm);
  }
  report.converged = true;
  report.max_grad_inf = detail::max_gradient_norm(y);
  return {std::move(y), std::move(report)};
}

/// State solve driven by a P1 control.
inline std::pair<P1Function, NewtonReport> solve_state(const P1Function& u,
                                                       const P1Function& v_samples,
                                                       double tol = 1e-10, int max_iter = 50,
                                                       double lin_rel_tol = 1e-12,
                                                       const P1Function* warm_start = nullptr) {
  const Mesh& mesh = *u.mesh;
  detail::check_same_mesh(mesh, v_samples, "solve_state(v)");
  const std::vector<std::uint8_t> mask = dirichlet_mask(mesh);
  return solve_state_from_load(mesh, control_load(u, mask), v_samples, tol, max_iter, lin_rel_tol,
                               warm_start);
}

/// Discrete adjoint solve: find phi with zero boundary values such that
///   K[y] phi = load,   load_i = int (y - y_d) zeta_i
/// with the degree-4 rule and y_d evaluated analytically at the quadrature
/// points (y_d is never interpolated). The system matrix is the same
/// bilinear form as the Newton Jacobian at y.
template <typename YdFn>
P1Function solve_adjoint(const P1Function& y, YdFn&& y_d, double rel_tol = 1e-12) {
  const Mesh& mesh = *y.mesh;
  const std::vector<std::uint8_t> mask = dirichlet_mask(mesh);
  const QuadratureRule rule = quadrature(4);
  std::vector<double> load(mesh.num_vertices(), 0.0);
  for (int k = 0; k < mesh.num_triangles(); ++k) {
    const ElementGeometry g = element_geometry(mesh, k);
    for (int qp = 0; qp < rule.size(); ++qp) {
      const Vec2 p = quad_point(mesh, k, rule.points[qp]);
      const double misfit = y.value_in(k, rule.points[qp]) - y_d(p.x, p.y);
      const double w = rule.weights[qp] * g.area * misfit;
      for (int i = 0; i < 3; ++i)
        if (!mask[g.verts[i]]) load[g.verts[i]] += w * rule.points[qp][i];
    }
  }
  const SparseSymMatrix K = assemble_jacobian(y, mask);
  return P1Function(mesh, solve_spd(K, load, rel_tol));
}

}  // namespace curvopt

#endif  // CURVOPT_SOLVER_HPP
