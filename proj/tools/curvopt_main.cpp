// Command-line front end: state/adjoint solves, the optimal control loop,
// convergence studies and mesh generation, with VTK/CSV/manifest output.
//
// Exit codes: 0 success, 2 configuration error, 3 solver nonconvergence,
// 4 I/O error.

#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "curvopt/config.hpp"
#include "curvopt/curvopt.hpp"

namespace {

using namespace curvopt;

struct Overrides {
  std::optional<std::string> config_file;
  std::optional<std::string> preset;
  std::optional<std::string> mesh_kind;
  std::optional<int> mesh_n;
  std::optional<std::string> mesh_file;
  std::optional<double> alpha, p, theta, tol, newton_tol;
  std::optional<int> max_iter, newton_max_iter, levels;
  std::optional<std::string> yd, v, u, control_basis, out, as_surface, field;
};

void add_common_options(CLI::App* cmd, Overrides& o) {
  cmd->add_option("--config", o.config_file, "JSON config file (flat keys)");
  cmd->add_option("--preset", o.preset, "paperA | paperB | paperC | paperD");
  cmd->add_option("--mesh-kind", o.mesh_kind, "square | clover | file");
  cmd->add_option("--mesh-n", o.mesh_n, "mesh resolution");
  cmd->add_option("--mesh-file", o.mesh_file, "mesh file for --mesh-kind file");
  cmd->add_option("--alpha", o.alpha, "Tikhonov weight");
  cmd->add_option("--p", o.p, "control constraint exponent (> 2)");
  cmd->add_option("--theta", o.theta, "L^p ball radius");
  cmd->add_option("--yd", o.yd, "target field name");
  cmd->add_option("--v", o.v, "boundary field name");
  cmd->add_option("--u", o.u, "control field name (start point for optimize)");
  cmd->add_option("--tol", o.tol, "optimizer stopping tolerance");
  cmd->add_option("--max-iter", o.max_iter, "optimizer iteration cap");
  cmd->add_option("--newton-tol", o.newton_tol, "Newton residual tolerance");
  cmd->add_option("--newton-max-iter", o.newton_max_iter, "Newton iteration cap");
  cmd->add_option("--levels", o.levels, "refinement levels for convergence studies");
  cmd->add_option("--control-basis", o.control_basis, "p1 | p0");
  cmd->add_option("--out", o.out, "output directory");
  cmd->add_option("--as-surface", o.as_surface, "field whose values become the VTK z coordinate");
  cmd->add_option("--field", o.field, "field for the interpolation study");
}

RunConfig resolve_config(const std::string& command, const Overrides& o) {
  RunConfig c = o.preset ? preset_config(*o.preset) : RunConfig{};
  if (o.config_file) {
    RunConfig file_cfg = config_from_json_file(*o.config_file);
    const std::string preset_name = c.preset;
    c = file_cfg;
    if (o.preset) c.preset = preset_name;
  }
  c.command = command;
  if (o.mesh_kind) c.mesh_kind = *o.mesh_kind;
  if (o.mesh_n) c.mesh_n = *o.mesh_n;
  if (o.mesh_file) { c.mesh_file = *o.mesh_file; c.mesh_kind = "file"; }
  if (o.alpha) c.alpha = *o.alpha;
  if (o.p) c.p = *o.p;
  if (o.theta) c.theta = *o.theta;
  if (o.yd) c.yd = *o.yd;
  if (o.v) c.v = *o.v;
  if (o.u) c.u = *o.u;
  if (o.tol) c.tol = *o.tol;
  if (o.max_iter) c.max_iter = *o.max_iter;
  if (o.newton_tol) c.newton_tol = *o.newton_tol;
  if (o.newton_max_iter) c.newton_max_iter = *o.newton_max_iter;
  if (o.levels) c.levels = *o.levels;
  if (o.control_basis) c.control_basis = *o.control_basis;
  if (o.out) c.out = *o.out;
  if (o.as_surface) c.as_surface = *o.as_surface;
  if (o.field) c.field = *o.field;
  c.validate();
  return c;
}

void ensure_out_dir(const RunConfig& c) {
  std::error_code ec;
  std::filesystem::create_directories(c.out, ec);
  if (ec) throw std::runtime_error("cannot create output directory " + c.out);
}

std::string newton_history_csv(const NewtonReport& report) {
  std::string csv = "iter,residual\n";
  char buf[64];
  for (std::size_t i = 0; i < report.residual_history.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%zu,%.12g\n", i, report.residual_history[i]);
    csv += buf;
  }
  return csv;
}

std::string optimize_history_csv(const OptimizeReport& report) {
  std::string csv = "iter,cost,grad_norm,control_lp_norm\n";
  char buf[128];
  for (std::size_t i = 0; i < report.cost_history.size(); ++i) {
    std::string grad;
    if (i < report.gradient_norm_history.size()) {
      std::snprintf(buf, sizeof(buf), "%.12g", report.gradient_norm_history[i]);
      grad = buf;
    }
    std::string lp;
    if (i < report.control_lp_norm_history.size()) {
      std::snprintf(buf, sizeof(buf), "%.12g", report.control_lp_norm_history[i]);
      lp = buf;
    }
    std::snprintf(buf, sizeof(buf), "%zu,%.12g,", i, report.cost_history[i]);
    csv += buf;
    csv += grad + ',' + lp + '\n';
  }
  return csv;
}

void warn_if_incompatible(const P1Function& u) {
  const CompatibilityCheck c = check_compatibility(u);
  if (!c.compatible) {
    std::fprintf(stderr,
                 "warning: |int u| = %.6g is not below the boundary perimeter %.6g; "
                 "no graph solution can exist for this control\n",
                 c.control_integral_abs, c.perimeter);
  }
}

int run_solve_state(const RunConfig& c) {
  const Mesh mesh = build_mesh(c);
  ensure_out_dir(c);
  const P1Function u = interpolate(mesh, make_field(c.u).value);
  const P1Function v_samples = interpolate(mesh, make_field(c.v).value);
  warn_if_incompatible(u);
  auto [y, report] = solve_state(u, v_samples, c.newton_tol, c.newton_max_iter);
  std::printf("newton: %d iterations, final residual %.3e, max |grad y| = %.4f\n",
              report.iterations, report.residual_history.back(), report.max_grad_inf);
  export_vtk(mesh, {{"y", &y}, {"u", &u}, {"v", &v_samples}}, c.out + "/solution.vtk",
             c.as_surface);
  write_text_atomic(c.out + "/newton_history.csv", newton_history_csv(report));
  write_manifest(c, c.out);
  return 0;
}

int run_solve_adjoint(const RunConfig& c) {
  const Mesh mesh = build_mesh(c);
  ensure_out_dir(c);
  const P1Function u = interpolate(mesh, make_field(c.u).value);
  const P1Function v_samples = interpolate(mesh, make_field(c.v).value);
  const AnalyticField y_d = make_field(c.yd);
  warn_if_incompatible(u);
  auto [y, report] = solve_state(u, v_samples, c.newton_tol, c.newton_max_iter);
  const P1Function phi = solve_adjoint(y, y_d.value);
  std::printf("newton: %d iterations; ||phi||_L2 = %.6g\n", report.iterations, lp_norm(phi, 2.0));
  const P1Function yd_samples = interpolate(mesh, y_d.value);
  export_vtk(mesh, {{"y", &y}, {"phi", &phi}, {"y_d", &yd_samples}}, c.out + "/solution.vtk",
             c.as_surface);
  write_text_atomic(c.out + "/newton_history.csv", newton_history_csv(report));
  write_manifest(c, c.out);
  return 0;
}

int run_optimize(const RunConfig& c) {
  const Mesh mesh = build_mesh(c);
  ensure_out_dir(c);
  const ControlProblem problem = make_control_problem(c, mesh);
  const P1Function u0 = interpolate(mesh, make_field(c.u).value);
  warn_if_incompatible(u0);
  const OptimizeResult result = optimize(problem, u0);
  const double lp = lp_norm(result.control, c.p);
  std::printf("optimize: %d iterations, converged=%s, J = %.8g, ||u||_%.3g = %.6g, kkt = %.3e\n",
              result.report.iterations, result.report.converged ? "yes" : "no",
              result.report.cost_history.back(), c.p, lp, result.report.kkt_residual);
  const P1Function yd_samples = interpolate(mesh, problem.y_d.value);
  export_vtk(mesh,
             {{"y", &result.state},
              {"u", &result.control},
              {"phi", &result.adjoint},
              {"y_d", &yd_samples}},
             c.out + "/solution.vtk", c.as_surface);
  write_text_atomic(c.out + "/history.csv", optimize_history_csv(result.report));
  write_manifest(c, c.out);
  return 0;
}

int run_convergence(const RunConfig& c) {
  ensure_out_dir(c);
  ConvergenceTable table;
  if (c.study == "state") {
    table = state_convergence_study(c.levels).table;
  } else if (c.study == "adjoint") {
    table = adjoint_convergence_study(c.levels);
  } else if (c.study == "control") {
    RunConfig proto = c;
    ControlProblem prototype;
    prototype.alpha = proto.alpha;
    prototype.p = proto.p;
    prototype.theta = proto.theta;
    prototype.optimizer_tol = proto.tol;
    prototype.optimizer_max_iter = proto.max_iter;
    prototype.newton_tol = proto.newton_tol;
    prototype.newton_max_iter = proto.newton_max_iter;
    const ControlStudyResult result = control_convergence_study(c.levels, prototype);
    table = result.table;
    for (std::size_t k = 0; k < result.control_lp_norms.size(); ++k)
      std::printf("level %zu: ||u||_%.3g = %.6g\n", k, c.p, result.control_lp_norms[k]);
  } else if (c.study == "interp") {
    table = interpolation_check(make_field(c.field), c.levels);
  } else {
    throw std::invalid_argument("unknown convergence study '" + c.study + "'");
  }
  table.print(std::cout);
  write_text_atomic(c.out + "/table.csv", table.to_csv());
  write_manifest(c, c.out);
  return 0;
}

int run_mesh(const RunConfig& c) {
  const Mesh mesh = build_mesh(c);
  ensure_out_dir(c);
  std::printf("mesh: %d vertices, %d triangles, h_max = %.6g\n", mesh.num_vertices(),
              mesh.num_triangles(), mesh.h_max);
  std::ostringstream body;
  write_mesh(mesh, body);
  write_text_atomic(c.out + "/mesh.ntri", body.str());
  write_manifest(c, c.out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"finite-element optimal control of surface shape"};
  app.require_subcommand(1);

  Overrides o;
  CLI::App* solve_state_cmd = app.add_subcommand("solve-state", "solve the nonlinear state equation");
  CLI::App* solve_adjoint_cmd = app.add_subcommand("solve-adjoint", "solve state then adjoint");
  CLI::App* optimize_cmd = app.add_subcommand("optimize", "projected-gradient optimal control");
  CLI::App* convergence_cmd = app.add_subcommand("convergence", "refinement studies");
  CLI::App* mesh_cmd = app.add_subcommand("mesh", "generate and export a mesh");

  std::string study_arg;
  convergence_cmd->add_option("study", study_arg, "state | adjoint | control | interp")
      ->required();
  std::string mesh_kind_arg;
  mesh_cmd->add_option("kind", mesh_kind_arg, "square | clover")->required();

  for (CLI::App* cmd : {solve_state_cmd, solve_adjoint_cmd, optimize_cmd, convergence_cmd, mesh_cmd})
    add_common_options(cmd, o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return 2;
  }

  try {
    if (solve_state_cmd->parsed()) return run_solve_state(resolve_config("solve-state", o));
    if (solve_adjoint_cmd->parsed()) return run_solve_adjoint(resolve_config("solve-adjoint", o));
    if (optimize_cmd->parsed()) return run_optimize(resolve_config("optimize", o));
    if (convergence_cmd->parsed()) {
      RunConfig c = resolve_config("convergence", o);
      c.study = study_arg;
      return run_convergence(c);
    }
    if (mesh_cmd->parsed()) {
      RunConfig c = resolve_config("mesh", o);
      c.mesh_kind = mesh_kind_arg;
      c.validate();
      return run_mesh(c);
    }
  } catch (const NewtonFailure& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const OptimizeFailure& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const SolverFailure& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "i/o error: %s\n", e.what());
    return 4;
  }
  return 2;
}
