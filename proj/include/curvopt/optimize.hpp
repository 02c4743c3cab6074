#ifndef CURVOPT_OPTIMIZE_HPP
#define CURVOPT_OPTIMIZE_HPP

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "curvopt/assembly.hpp"
#include "curvopt/fields.hpp"
#include "curvopt/mesh.hpp"
#include "curvopt/p1.hpp"
#include "curvopt/solver.hpp"
#include "curvopt/sparse.hpp"

namespace curvopt {

enum class ControlBasis { P1, P0 };

/// Immutable description of one optimal control problem: tracking target
/// y_d, boundary datum v, Tikhonov weight alpha, and the L^p ball
/// constraint ||u||_p <= theta with p > 2.
struct ControlProblem {
  const Mesh* mesh = nullptr;
  double alpha = 1e-6;
  double p = 2.5;
  double theta = 20.0;
  AnalyticField y_d = fields::zero();
  AnalyticField v = fields::zero();
  double newton_tol = 1e-10;
  int newton_max_iter = 50;
  double optimizer_tol = 2e-4;
  int optimizer_max_iter = 400;
  double lin_rel_tol = 1e-12;
  ControlBasis control_basis = ControlBasis::P1;

  void validate() const {
    if (mesh == nullptr) throw std::invalid_argument("ControlProblem: mesh not set");
    if (!(alpha > 0.0)) throw std::invalid_argument("ControlProblem: alpha must be positive");
    if (!(theta > 0.0)) throw std::invalid_argument("ControlProblem: theta must be positive");
    if (!(p > 2.0)) throw std::invalid_argument("ControlProblem: p must exceed 2");
    if (!(newton_tol > 0.0) || !(optimizer_tol > 0.0))
      throw std::invalid_argument("ControlProblem: tolerances must be positive");
  }
};

/// Optimization trace. cost_history is nonincreasing by the Armijo rule;
/// kkt_residual is the min-form first-order residual at the final iterate.
struct OptimizeReport {
  std::vector<double> cost_history;
  std::vector<double> gradient_norm_history;
  std::vector<double> control_lp_norm_history;
  std::vector<double> step_rel_change_history;  // stopping-test quantity per accepted step
  int iterations = 0;
  bool converged = false;
  double kkt_residual = 0.0;
};

class OptimizeFailure : public std::runtime_error {
 public:
  OptimizeFailure(const std::string& what, OptimizeReport report)
      : std::runtime_error(what), report_(std::move(report)) {}

  const OptimizeReport& report() const { return report_; }

 private:
  OptimizeReport report_;
};

struct OptimizeResult {
  P1Function control;       // P1 view of the control (vertex average for P0 runs)
  P1Function state;
  P1Function adjoint;
  OptimizeReport report;
  ControlBasis basis = ControlBasis::P1;
  std::vector<double> control_coeffs;  // native coefficients (per vertex or per triangle)
};

/// Radial retraction onto the L^p ball: u unchanged when feasible,
/// otherwise scaled by theta / ||u||_p. This follows the scaling practice
/// for enforcing the constraint; it is not the L^2-metric projection.
inline P1Function project_lp_ball(const P1Function& u, double p, double theta) {
  if (!(p > 2.0) || !(theta > 0.0))
    throw std::invalid_argument("project_lp_ball: need p > 2 and theta > 0");
  const double nrm = lp_norm(u, p);
  if (nrm <= theta * (1.0 + 1e-12)) return u;
  P1Function scaled = u;
  const double factor = theta / nrm;
  for (double& c : scaled.coeffs) c *= factor;
  return scaled;
}

/// Compatibility data for a control: |int u|, the boundary perimeter, and
/// whether |int u| < perimeter. When the flag is false no graph solution
/// of the state equation can exist.
struct CompatibilityCheck {
  double control_integral_abs = 0.0;
  double perimeter = 0.0;
  bool compatible = false;
};

inline CompatibilityCheck check_compatibility(const P1Function& u) {
  CompatibilityCheck c;
  c.control_integral_abs = std::abs(integral(u));
  c.perimeter = boundary_perimeter(*u.mesh);
  c.compatible = c.control_integral_abs < c.perimeter;
  return c;
}

namespace detail {

/// Control-space operations for the P1 (vertex) basis.
struct P1ControlOps {
  const Mesh* mesh;
  const SparseSymMatrix* mass;
  const std::vector<std::uint8_t>* mask;

  int dim() const { return mesh->num_vertices(); }
  double lp(const std::vector<double>& c, double p) const {
    return lp_norm(P1Function(*mesh, c), p);
  }
  double l2(const std::vector<double>& c) const { return l2_norm(*mass, c); }
  double inner(const std::vector<double>& a, const std::vector<double>& b) const {
    return vec_dot(a, mass->apply(b));
  }
  std::vector<double> load(const std::vector<double>& c) const {
    return control_load(P1Function(*mesh, c), *mask);
  }
  std::vector<double> riesz_gradient(const P1Function& phi, const std::vector<double>& u,
                                     double alpha) const {
    std::vector<double> g(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) g[i] = phi.coeffs[i] + alpha * u[i];
    return g;
  }
  double control_l2_cost(const std::vector<double>& c) const {
    return vec_dot(c, mass->apply(c));
  }
  P1Function as_p1(const std::vector<double>& c) const { return P1Function(*mesh, c); }
};

/// Control-space operations for the P0 (elementwise constant) basis; mass
/// and L^p integrals are exact per element.
struct P0ControlOps {
  const Mesh* mesh;
  const std::vector<std::uint8_t>* mask;
  std::vector<double> areas;

  explicit P0ControlOps(const Mesh& m, const std::vector<std::uint8_t>& msk)
      : mesh(&m), mask(&msk), areas(m.num_triangles()) {
    for (int k = 0; k < m.num_triangles(); ++k) areas[k] = triangle_area(m, k);
  }

  int dim() const { return mesh->num_triangles(); }
  double lp(const std::vector<double>& c, double p) const {
    double s = 0.0;
    for (int k = 0; k < dim(); ++k) s += areas[k] * std::pow(std::abs(c[k]), p);
    return std::pow(s, 1.0 / p);
  }
  double l2(const std::vector<double>& c) const { return std::sqrt(control_l2_cost(c)); }
  double inner(const std::vector<double>& a, const std::vector<double>& b) const {
    double s = 0.0;
    for (int k = 0; k < dim(); ++k) s += areas[k] * a[k] * b[k];
    return s;
  }
  std::vector<double> load(const std::vector<double>& c) const {
    std::vector<double> L(mesh->num_vertices(), 0.0);
    for (int k = 0; k < dim(); ++k) {
      const Tri& t = mesh->triangles[k];
      const double w = areas[k] / 3.0 * c[k];
      for (int i = 0; i < 3; ++i)
        if (!(*mask)[t[i]]) L[t[i]] += w;
    }
    return L;
  }
  std::vector<double> riesz_gradient(const P1Function& phi, const std::vector<double>& u,
                                     double alpha) const {
    std::vector<double> g(u.size());
    for (int k = 0; k < dim(); ++k) {
      const Tri& t = mesh->triangles[k];
      g[k] = (phi[t[0]] + phi[t[1]] + phi[t[2]]) / 3.0 + alpha * u[k];
    }
    return g;
  }
  double control_l2_cost(const std::vector<double>& c) const {
    double s = 0.0;
    for (int k = 0; k < dim(); ++k) s += areas[k] * c[k] * c[k];
    return s;
  }
  P1Function as_p1(const std::vector<double>& c) const {
    // Area-weighted vertex average; used only as an export view.
    P1Function f(*mesh);
    std::vector<double> w(mesh->num_vertices(), 0.0);
    for (int k = 0; k < dim(); ++k) {
      const Tri& t = mesh->triangles[k];
      for (int i = 0; i < 3; ++i) {
        f[t[i]] += areas[k] * c[k];
        w[t[i]] += areas[k];
      }
    }
    for (int v = 0; v < mesh->num_vertices(); ++v) f[v] /= w[v];
    return f;
  }
};

template <typename Ops>
std::vector<double> project_coeffs(const Ops& ops, std::vector<double> c, double p, double theta) {
  const double nrm = ops.lp(c, p);
  if (nrm <= theta * (1.0 + 1e-12)) return c;
  const double factor = theta / nrm;
  for (double& x : c) x *= factor;
  return c;
}

/// Tracking term 1/2 int (y - y_d)^2 with the degree-4 rule and analytic
/// y_d at quadrature points.
inline double tracking_cost(const P1Function& y, const AnalyticField& y_d) {
  const Mesh& mesh = *y.mesh;
  const QuadratureRule rule = quadrature(4);
  double s = 0.0;
  for (int k = 0; k < mesh.num_triangles(); ++k) {
    const double area = triangle_area(mesh, k);
    double local = 0.0;
    for (int qp = 0; qp < rule.size(); ++qp) {
      const Vec2 pt = quad_point(mesh, k, rule.points[qp]);
      const double d = y.value_in(k, rule.points[qp]) - y_d(pt.x, pt.y);
      local += rule.weights[qp] * d * d;
    }
    s += area * local;
  }
  return 0.5 * s;
}

template <typename Ops>
struct Evaluation {
  P1Function y;
  NewtonReport newton;
  double cost = 0.0;
};

template <typename Ops>
Evaluation<Ops> evaluate_control(const ControlProblem& problem, const Ops& ops,
                                 const std::vector<double>& u, const P1Function& v_samples,
                                 const P1Function* warm_start) {
  Evaluation<Ops> ev;
  auto [y, rep] = solve_state_from_load(*problem.mesh, ops.load(u), v_samples, problem.newton_tol,
                                        problem.newton_max_iter, problem.lin_rel_tol, warm_start);
  ev.y = std::move(y);
  ev.newton = std::move(rep);
  ev.cost = tracking_cost(ev.y, problem.y_d) + 0.5 * problem.alpha * ops.control_l2_cost(u);
  return ev;
}

template <typename Ops>
double kkt_residual_impl(const ControlProblem& problem, const Ops& ops,
                         const std::vector<double>& u, const P1Function& phi) {
  const std::vector<double> g = ops.riesz_gradient(phi, u, problem.alpha);
  if (ops.lp(u, problem.p) < problem.theta * (1.0 - 1e-8)) return ops.l2(g);
  std::vector<double> target(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    const double phi_i = g[i] - problem.alpha * u[i];  // recover the phi part
    target[i] = -phi_i / problem.alpha;
  }
  target = project_coeffs(ops, std::move(target), problem.p, problem.theta);
  std::vector<double> diff(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) diff[i] = u[i] - target[i];
  return ops.l2(diff);
}

template <typename Ops>
OptimizeResult optimize_impl(const ControlProblem& problem, const Ops& ops,
                             std::vector<double> u) {
  const Mesh& mesh = *problem.mesh;
  const P1Function v_samples = interpolate(mesh, problem.v.value);

  u = project_coeffs(ops, std::move(u), problem.p, problem.theta);

  OptimizeReport report;
  Evaluation<Ops> cur;
  try {
    cur = evaluate_control(problem, ops, u, v_samples, nullptr);
  } catch (const NewtonFailure& e) {
    throw OptimizeFailure(std::string("optimize: state solve failed at the initial control (") +
                              e.what() + ")",
                          report);
  }
  report.cost_history.push_back(cur.cost);
  report.control_lp_norm_history.push_back(ops.lp(u, problem.p));

  P1Function phi = solve_adjoint(cur.y, problem.y_d.value, problem.lin_rel_tol);

  const double s_max = std::min(1.0 / problem.alpha, 1e6);
  const double armijo_c = 1e-4;
  const int max_halvings = 40;

  while (true) {
    const std::vector<double> g = ops.riesz_gradient(phi, u, problem.alpha);
    const double gnorm = ops.l2(g);
    report.gradient_norm_history.push_back(gnorm);

    // Armijo backtracking on the projected step.
    auto try_step = [&](double step, std::vector<double>& trial_out,
                        Evaluation<Ops>& ev_out) -> bool {
      std::vector<double> trial(u.size());
      for (std::size_t i = 0; i < u.size(); ++i) trial[i] = u[i] - step * g[i];
      trial = project_coeffs(ops, std::move(trial), problem.p, problem.theta);
      try {
        ev_out = evaluate_control(problem, ops, trial, v_samples, &cur.y);
      } catch (const NewtonFailure&) {
        return false;  // state not solvable at this trial point: treat as rejection
      }
      trial_out = std::move(trial);
      return true;
    };

    double s = s_max;
    std::vector<double> u_next;
    Evaluation<Ops> next;
    bool accepted = false;
    bool any_evaluated = false;
    for (int halving = 0; halving <= max_halvings; ++halving, s *= 0.5) {
      std::vector<double> trial;
      Evaluation<Ops> ev;
      if (!try_step(s, trial, ev)) continue;
      any_evaluated = true;
      if (ev.cost <= cur.cost - armijo_c * s * gnorm * gnorm) {
        u_next = std::move(trial);
        next = std::move(ev);
        accepted = true;
        break;
      }
    }
    if (!any_evaluated)
      throw OptimizeFailure("optimize: state solve failed at every trial step", report);

    // The first-accepted step can sit at the oscillatory edge s ~ 2/L where
    // progress stalls; probing the half step once and keeping the better of
    // the two (both Armijo-acceptable) restores a real contraction.
    if (accepted) {
      std::vector<double> trial_half;
      Evaluation<Ops> ev_half;
      const double s_half = 0.5 * s;
      if (try_step(s_half, trial_half, ev_half) && ev_half.cost < next.cost &&
          ev_half.cost <= cur.cost - armijo_c * s_half * gnorm * gnorm) {
        u_next = std::move(trial_half);
        next = std::move(ev_half);
      }
    }

    if (!accepted) {
      // No decrease found in 40 halvings: numerically stationary.
      report.converged = true;
      break;
    }

    std::vector<double> diff(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) diff[i] = u_next[i] - u[i];
    const double rel_change = ops.l2(diff) / std::max(1.0, ops.l2(u));
    report.step_rel_change_history.push_back(rel_change);

    u = std::move(u_next);
    cur = std::move(next);
    report.cost_history.push_back(cur.cost);
    report.control_lp_norm_history.push_back(ops.lp(u, problem.p));
    phi = solve_adjoint(cur.y, problem.y_d.value, problem.lin_rel_tol);
    if (rel_change > 0.0) ++report.iterations;

    if (rel_change <= problem.optimizer_tol) {
      report.converged = true;
      break;
    }
    if (report.iterations >= problem.optimizer_max_iter) break;
  }

  report.kkt_residual = kkt_residual_impl(problem, ops, u, phi);

  OptimizeResult result;
  result.control = ops.as_p1(u);
  result.state = std::move(cur.y);
  result.adjoint = std::move(phi);
  result.report = std::move(report);
  result.basis = problem.control_basis;
  result.control_coeffs = std::move(u);
  return result;
}

}  // namespace detail

/// Reduced cost J(u) = 1/2 ||S(u) - y_d||^2 + alpha/2 ||u||^2 (tracking by
/// degree-4 quadrature, control term by exact mass).
inline double reduced_cost(const ControlProblem& problem, const P1Function& u) {
  problem.validate();
  const Mesh& mesh = *problem.mesh;
  detail::check_same_mesh(mesh, u, "reduced_cost");
  const P1Function v_samples = interpolate(mesh, problem.v.value);
  auto [y, rep] = solve_state(u, v_samples, problem.newton_tol, problem.newton_max_iter,
                              problem.lin_rel_tol);
  (void)rep;
  const SparseSymMatrix mass = assemble_mass(mesh);
  return detail::tracking_cost(y, problem.y_d) +
         0.5 * problem.alpha * vec_dot(u.coeffs, mass.apply(u.coeffs));
}

/// Reduced gradient as a P1 function: phi(y(u)) + alpha u, the L^2-Riesz
/// representative of the derivative of the reduced cost.
inline P1Function reduced_gradient(const ControlProblem& problem, const P1Function& u) {
  problem.validate();
  const Mesh& mesh = *problem.mesh;
  detail::check_same_mesh(mesh, u, "reduced_gradient");
  const P1Function v_samples = interpolate(mesh, problem.v.value);
  auto [y, rep] = solve_state(u, v_samples, problem.newton_tol, problem.newton_max_iter,
                              problem.lin_rel_tol);
  (void)rep;
  const P1Function phi = solve_adjoint(y, problem.y_d.value, problem.lin_rel_tol);
  P1Function g(mesh);
  for (int i = 0; i < mesh.num_vertices(); ++i) g[i] = phi[i] + problem.alpha * u[i];
  return g;
}

/// First-order residual in min form: ||phi + alpha u||_2 while the
/// constraint is inactive, else the fixed-point mismatch
/// ||u - project(-phi/alpha)||_2 of the scaled-adjoint characterization.
inline double kkt_residual(const ControlProblem& problem, const P1Function& u,
                           const P1Function& phi) {
  problem.validate();
  const std::vector<std::uint8_t> mask = dirichlet_mask(*problem.mesh);
  const SparseSymMatrix mass = assemble_mass(*problem.mesh);
  detail::P1ControlOps ops{problem.mesh, &mass, &mask};
  return detail::kkt_residual_impl(problem, ops, u.coeffs, phi);
}

/// Projected gradient with Armijo backtracking on the reduced cost.
/// Each iteration starts the line search at step min(1/alpha, 1e6) and
/// halves until J(u+) <= J(u) - 1e-4 s ||g||^2; state solve failures count
/// as rejections. Stops when the relative control change drops below
/// optimizer_tol or after optimizer_max_iter iterations.
inline OptimizeResult optimize(const ControlProblem& problem, const P1Function& u0) {
  problem.validate();
  const Mesh& mesh = *problem.mesh;
  const std::vector<std::uint8_t> mask = dirichlet_mask(mesh);
  if (problem.control_basis == ControlBasis::P1) {
    detail::check_same_mesh(mesh, u0, "optimize(u0)");
    const SparseSymMatrix mass = assemble_mass(mesh);
    detail::P1ControlOps ops{&mesh, &mass, &mask};
    return detail::optimize_impl(problem, ops, u0.coeffs);
  }
  // P0 basis: start from the elementwise average of u0.
  detail::P0ControlOps ops(mesh, mask);
  std::vector<double> u(mesh.num_triangles(), 0.0);
  if (u0.mesh != nullptr) {
    for (int k = 0; k < mesh.num_triangles(); ++k) {
      const Tri& t = mesh.triangles[k];
      u[k] = (u0[t[0]] + u0[t[1]] + u0[t[2]]) / 3.0;
    }
  }
  return detail::optimize_impl(problem, ops, std::move(u));
}

inline OptimizeResult optimize(const ControlProblem& problem) {
  return optimize(problem, P1Function(*problem.mesh));
}

}  // namespace curvopt

#endif  // CURVOPT_OPTIMIZE_HPP
