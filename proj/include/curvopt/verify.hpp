#ifndef CURVOPT_VERIFY_HPP
#define CURVOPT_VERIFY_HPP

#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <memory>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "curvopt/assembly.hpp"
#include "curvopt/fields.hpp"
#include "curvopt/mesh.hpp"
#include "curvopt/optimize.hpp"
#include "curvopt/p1.hpp"
#include "curvopt/quadrature.hpp"
#include "curvopt/solver.hpp"

namespace curvopt {

/// Experimental order of convergence under mesh halving.
inline double eoc(double e_coarse, double e_fine) {
  if (!(e_coarse > 0.0) || !(e_fine > 0.0))
    throw std::invalid_argument("eoc: errors must be positive");
  return std::log2(e_coarse / e_fine);
}

/// One refinement-study row. The first error slot holds the gradient-type
/// error of the study (W^1_inf or H^1), the second the value-type error
/// (nodal max or L^2). Undefined EOC entries are NaN.
struct ConvergenceRow {
  double h = 0.0;
  double err_w1inf = 0.0;
  double err_l2 = 0.0;
  double eoc_w1inf = std::numeric_limits<double>::quiet_NaN();
  double eoc_l2 = std::numeric_limits<double>::quiet_NaN();
};

struct ConvergenceTable {
  std::string label;
  std::vector<ConvergenceRow> rows;

  /// Fills the EOC columns from consecutive rows (h must halve row to row).
  void compute_eoc() {
    for (std::size_t i = 1; i < rows.size(); ++i) {
      if (rows[i - 1].err_w1inf > 0.0 && rows[i].err_w1inf > 0.0)
        rows[i].eoc_w1inf = eoc(rows[i - 1].err_w1inf, rows[i].err_w1inf);
      if (rows[i - 1].err_l2 > 0.0 && rows[i].err_l2 > 0.0)
        rows[i].eoc_l2 = eoc(rows[i - 1].err_l2, rows[i].err_l2);
    }
  }

  /// Pinned CSV schema: header then %.6g rows, NaN EOC printed empty.
  std::string to_csv() const {
    std::string out = "h,err_w1inf,err_l2,eoc_w1inf,eoc_l2\n";
    char buf[64];
    auto num = [&buf](double v) -> std::string {
      if (std::isnan(v)) return "";
      std::snprintf(buf, sizeof(buf), "%.6g", v);
      return buf;
    };
    for (const ConvergenceRow& r : rows) {
      out += num(r.h) + ',' + num(r.err_w1inf) + ',' + num(r.err_l2) + ',' + num(r.eoc_w1inf) +
             ',' + num(r.eoc_l2) + '\n';
    }
    return out;
  }

  /// Human-readable table with the log-factor caveat in the footer.
  void print(std::ostream& out) const {
    out << "# " << label << '\n';
    out << "      h      err_w1inf        err_l2   eoc_w1inf   eoc_l2\n";
    char buf[160];
    for (const ConvergenceRow& r : rows) {
      std::snprintf(buf, sizeof(buf), "%10.6f  %12.6g  %12.6g  %9.3f  %8.3f\n", r.h, r.err_w1inf,
                    r.err_l2, r.eoc_w1inf, r.eoc_l2);
      out << buf;
    }
    out << "# note: the theoretical rate h|log h|^4 is indistinguishable from rate h\n"
           "# at these resolutions; acceptance bands encode order 1 up to log factors.\n";
  }
};

namespace detail {

/// max over triangles of |grad f_h - grad f(barycenter)| — the natural
/// W^1_inf distance for a piecewise-constant discrete gradient.
inline double w1inf_error(const P1Function& fh, const AnalyticField& f) {
  const Mesh& mesh = *fh.mesh;
  double worst = 0.0;
  for (int k = 0; k < mesh.num_triangles(); ++k) {
    const Vec2 bary = quad_point(mesh, k, {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0});
    worst = std::max(worst, (fh.gradient(k) - f.grad(bary.x, bary.y)).norm());
  }
  return worst;
}

inline double nodal_max_error(const P1Function& fh, const AnalyticField& f) {
  const Mesh& mesh = *fh.mesh;
  double worst = 0.0;
  for (int v = 0; v < mesh.num_vertices(); ++v)
    worst = std::max(worst, std::abs(fh[v] - f(mesh.vertices[v].x, mesh.vertices[v].y)));
  return worst;
}

inline double l2_field_error(const P1Function& fh, const AnalyticField& f) {
  const Mesh& mesh = *fh.mesh;
  const QuadratureRule rule = quadrature(4);
  double s = 0.0;
  for (int k = 0; k < mesh.num_triangles(); ++k) {
    double local = 0.0;
    for (int qp = 0; qp < rule.size(); ++qp) {
      const Vec2 p = quad_point(mesh, k, rule.points[qp]);
      const double d = fh.value_in(k, rule.points[qp]) - f(p.x, p.y);
      local += rule.weights[qp] * d * d;
    }
    s += triangle_area(mesh, k) * local;
  }
  return std::sqrt(s);
}

inline double h1_field_error(const P1Function& fh, const AnalyticField& f) {
  const Mesh& mesh = *fh.mesh;
  const QuadratureRule rule = quadrature(4);
  double s = 0.0;
  for (int k = 0; k < mesh.num_triangles(); ++k) {
    const Vec2 gh = fh.gradient(k);
    double local = 0.0;
    for (int qp = 0; qp < rule.size(); ++qp) {
      const Vec2 p = quad_point(mesh, k, rule.points[qp]);
      const double d = fh.value_in(k, rule.points[qp]) - f(p.x, p.y);
      const Vec2 dg = gh - f.grad(p.x, p.y);
      local += rule.weights[qp] * (d * d + dg.norm2());
    }
    s += triangle_area(mesh, k) * local;
  }
  return std::sqrt(s);
}

}  // namespace detail

struct StateStudyResult {
  ConvergenceTable table;
  std::vector<NewtonReport> newton_reports;
};

/// Spherical-cap refinement study: u = 1, v = trace of the radius-2 cap,
/// on unit squares n = 8 * 2^k. The cap solves the state equation exactly
/// with constant curvature 2/R = 1.
inline StateStudyResult state_convergence_study(int levels) {
  if (levels < 2 || levels > 6)
    throw std::invalid_argument("state_convergence_study: levels must be in [2,6]");
  const AnalyticField cap = fields::cap_trace(2.0);
  StateStudyResult result;
  result.table.label = "state: spherical cap, u = 1";
  for (int k = 0; k < levels; ++k) {
    const int n = 8 << k;
    const Mesh mesh = unit_square_mesh(n);
    const P1Function u(mesh, 1.0);
    const P1Function v_samples = interpolate(mesh, cap.value);
    auto [y, report] = solve_state(u, v_samples);
    ConvergenceRow row;
    row.h = mesh.h_max;
    row.err_w1inf = detail::w1inf_error(y, cap);
    row.err_l2 = detail::nodal_max_error(y, cap);
    result.table.rows.push_back(row);
    result.newton_reports.push_back(std::move(report));
  }
  result.table.compute_eoc();
  return result;
}

/// Adjoint study in the analytic regime: at y = 0 with target
/// y_d = -2 pi^2 sin(pi x) sin(pi y) the adjoint problem is the Poisson
/// problem with solution sin(pi x) sin(pi y).
inline ConvergenceTable adjoint_convergence_study(int levels) {
  if (levels < 2 || levels > 6)
    throw std::invalid_argument("adjoint_convergence_study: levels must be in [2,6]");
  const AnalyticField load = fields::poisson_sine_load();
  const AnalyticField exact = fields::sine_pi();
  ConvergenceTable table;
  table.label = "adjoint: Poisson reduction at y = 0";
  for (int k = 0; k < levels; ++k) {
    const int n = 8 << k;
    const Mesh mesh = unit_square_mesh(n);
    const P1Function y_zero(mesh);
    const P1Function phi = solve_adjoint(y_zero, load.value);
    ConvergenceRow row;
    row.h = mesh.h_max;
    row.err_w1inf = detail::h1_field_error(phi, exact);
    row.err_l2 = detail::l2_field_error(phi, exact);
    table.rows.push_back(row);
  }
  table.compute_eoc();
  return table;
}

struct ControlStudyResult {
  ConvergenceTable table;
  std::vector<double> control_lp_norms;  // per level, coarse to finest
  std::unique_ptr<Mesh> finest_mesh;
  OptimizeResult finest;
  double finest_seconds = 0.0;
};

/// Self-convergence of the optimal control for the sine-on-a-square
/// experiment at n = 16 * 2^k; the finest-level control serves as the
/// reference since no closed form is available.
inline ControlStudyResult control_convergence_study(int levels,
                                                    const ControlProblem& prototype = {}) {
  if (levels < 2 || levels > 4)
    throw std::invalid_argument("control_convergence_study: levels must be in [2,4]");
  ControlStudyResult result;
  result.table.label = "control: sine target self-convergence";

  std::vector<std::unique_ptr<Mesh>> meshes;
  std::vector<OptimizeResult> runs;
  for (int k = 0; k < levels; ++k) {
    const int n = 16 << k;
    meshes.push_back(std::make_unique<Mesh>(unit_square_mesh(n)));
    ControlProblem problem = prototype;
    problem.mesh = meshes.back().get();
    problem.y_d = fields::sine_square(0.1);
    problem.v = fields::zero();
    const auto t0 = std::chrono::steady_clock::now();
    runs.push_back(optimize(problem));
    const auto t1 = std::chrono::steady_clock::now();
    result.finest_seconds = std::chrono::duration<double>(t1 - t0).count();
    result.control_lp_norms.push_back(lp_norm(runs.back().control, problem.p));
  }

  // L^2 distance to the finest control, integrated on the finest mesh.
  const Mesh& ref_mesh = *meshes.back();
  const P1Function& ref = runs.back().control;
  const QuadratureRule rule = quadrature(4);
  for (int k = 0; k + 1 < levels; ++k) {
    const PointLocator locator(*meshes[k]);
    const P1Function& coarse = runs[k].control;
    double s = 0.0;
    for (int t = 0; t < ref_mesh.num_triangles(); ++t) {
      double local = 0.0;
      for (int qp = 0; qp < rule.size(); ++qp) {
        const Vec2 p = quad_point(ref_mesh, t, rule.points[qp]);
        const double d = locator.eval(coarse, p.x, p.y) - ref.value_in(t, rule.points[qp]);
        local += rule.weights[qp] * d * d;
      }
      s += triangle_area(ref_mesh, t) * local;
    }
    ConvergenceRow row;
    row.h = meshes[k]->h_max;
    row.err_l2 = std::sqrt(s);
    result.table.rows.push_back(row);
  }
  result.table.compute_eoc();
  result.finest_mesh = std::move(meshes.back());
  result.finest = std::move(runs.back());
  return result;
}

/// Interpolation rate of the nodal interpolant on unit squares n = 8 * 2^k:
/// gradient error in the first slot, L^2 error in the second. Exact for
/// linear fields (both errors zero, EOC undefined).
inline ConvergenceTable interpolation_check(const AnalyticField& field, int levels) {
  if (levels < 2 || levels > 6)
    throw std::invalid_argument("interpolation_check: levels must be in [2,6]");
  if (!field.has_grad())
    throw std::invalid_argument("interpolation_check: field needs a gradient");
  ConvergenceTable table;
  table.label = "interpolation: " + field.name;
  for (int k = 0; k < levels; ++k) {
    const Mesh mesh = unit_square_mesh(8 << k);
    const P1Function ih = interpolate(mesh, field.value);
    ConvergenceRow row;
    row.h = mesh.h_max;
    row.err_w1inf = detail::w1inf_error(ih, field);
    row.err_l2 = detail::l2_field_error(ih, field);
    table.rows.push_back(row);
  }
  table.compute_eoc();
  return table;
}

/// L^2 tracking error and target norm restricted to the triangles whose
/// vertices and barycenter all satisfy the inset predicate.
template <typename InsetFn>
std::pair<double, double> subdomain_tracking_error(const P1Function& y, const AnalyticField& y_d,
                                                   InsetFn&& inside) {
  const Mesh& mesh = *y.mesh;
  const QuadratureRule rule = quadrature(4);
  double err = 0.0, ref = 0.0;
  for (int k = 0; k < mesh.num_triangles(); ++k) {
    const Tri& t = mesh.triangles[k];
    const Vec2 bc = quad_point(mesh, k, {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0});
    bool in = inside(bc.x, bc.y);
    for (int i = 0; i < 3 && in; ++i)
      in = inside(mesh.vertices[t[i]].x, mesh.vertices[t[i]].y);
    if (!in) continue;
    double le = 0.0, lr = 0.0;
    for (int qp = 0; qp < rule.size(); ++qp) {
      const Vec2 p = quad_point(mesh, k, rule.points[qp]);
      const double yd = y_d(p.x, p.y);
      const double d = y.value_in(k, rule.points[qp]) - yd;
      le += rule.weights[qp] * d * d;
      lr += rule.weights[qp] * yd * yd;
    }
    const double area = triangle_area(mesh, k);
    err += area * le;
    ref += area * lr;
  }
  return {std::sqrt(err), std::sqrt(ref)};
}

/// Inset predicates for the two experiment domains.
inline auto square_inset(double margin) {
  return [margin](double x, double y) {
    return x >= margin && x <= 1.0 - margin && y >= margin && y <= 1.0 - margin;
  };
}

inline auto clover_inset(double margin, CloverShape shape = {}) {
  return [margin, shape](double x, double y) {
    const double dx = x - shape.cx, dy = y - shape.cy;
    const double t = std::atan2(dy, dx);
    return std::hypot(dx, dy) <= shape.radius(t) - margin;
  };
}

}  // namespace curvopt

#endif  // CURVOPT_VERIFY_HPP
