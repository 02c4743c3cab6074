#ifndef CURVOPT_CONFIG_HPP
#define CURVOPT_CONFIG_HPP

#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "curvopt/fields.hpp"
#include "curvopt/mesh.hpp"
#include "curvopt/optimize.hpp"

namespace curvopt {

/// Flat run configuration mirroring ControlProblem plus mesh and output
/// choices. Serialized as flat-key JSON; the manifest written next to every
/// run is exactly this structure, so a manifest can be replayed as a config.
struct RunConfig {
  std::string command = "optimize";  // solve-state | solve-adjoint | optimize | convergence | mesh
  std::string study = "state";       // state | adjoint | control | interp
  std::string preset;                // paperA..paperD, empty if none
  std::string mesh_kind = "square";  // square | clover | file
  int mesh_n = 64;
  std::string mesh_file;
  double alpha = 1e-6;
  double p = 2.5;
  double theta = 20.0;
  std::string yd = "sine_square";
  std::string v = "zero";
  std::string u = "zero";  // control for solve-state/solve-adjoint, start point for optimize
  double newton_tol = 1e-10;
  int newton_max_iter = 50;
  double tol = 2e-4;   // optimizer stopping tolerance (relative control change)
  int max_iter = 400;  // optimizer iteration cap
  int levels = 4;
  std::string control_basis = "p1";
  std::string out = "out";
  std::string as_surface;
  std::string field = "sine_square";  // interpolation-study field

  void validate() const {
    if (!(alpha > 0.0)) throw std::invalid_argument("config: alpha must be positive");
    if (!(p > 2.0)) throw std::invalid_argument("config: p must exceed 2");
    if (!(theta > 0.0)) throw std::invalid_argument("config: theta must be positive");
    if (mesh_kind != "square" && mesh_kind != "clover" && mesh_kind != "file")
      throw std::invalid_argument("config: mesh_kind must be square, clover or file");
    if (mesh_kind == "file" && mesh_file.empty())
      throw std::invalid_argument("config: mesh_kind 'file' needs mesh_file");
    if (mesh_kind != "file" && mesh_n < 1)
      throw std::invalid_argument("config: mesh_n must be >= 1");
    if (control_basis != "p1" && control_basis != "p0")
      throw std::invalid_argument("config: control_basis must be p1 or p0");
    make_field(yd);
    make_field(v);
    make_field(u);
    make_field(field);
  }
};

/// The four bundled experiment configurations. These constants are frozen;
/// changing any of them is a breaking change guarded by a snapshot test.
inline RunConfig preset_config(const std::string& name) {
  RunConfig c;
  c.preset = name;
  c.alpha = 1e-6;
  c.p = 2.5;
  // The sine experiments track a height-0.1 surface, matching the scale of
  // the other experiments and the reported optimum norm of about 3.75.
  if (name == "paperA") {
    c.mesh_kind = "square";
    c.mesh_n = 64;
    c.theta = 20.0;
    c.yd = "sine_square:0.1";
    c.v = "zero";
  } else if (name == "paperB") {
    c.mesh_kind = "square";
    c.mesh_n = 64;
    c.theta = 2.0;
    c.yd = "sine_square:0.1";
    c.v = "zero";
  } else if (name == "paperC") {
    c.mesh_kind = "square";
    c.mesh_n = 64;
    c.theta = 20.0;
    c.yd = "gaussian_bump";
    c.v = "sine_cos_boundary";
    // The boundary mismatch drives a large boundary-layer control whose
    // alpha-scale modes move slowly under projected gradient; the looser
    // stopping tolerance reflects the practical stationarity of these runs.
    c.tol = 2e-3;
  } else if (name == "paperD") {
    c.mesh_kind = "clover";
    c.mesh_n = 20;
    c.theta = 20.0;
    c.yd = "cosine_field";
    c.v = "zero";
    c.tol = 2e-3;
  } else {
    throw std::invalid_argument("unknown preset '" + name + "'");
  }
  return c;
}

inline nlohmann::json config_to_json(const RunConfig& c) {
  return nlohmann::json{{"command", c.command},
                        {"study", c.study},
                        {"preset", c.preset},
                        {"mesh_kind", c.mesh_kind},
                        {"mesh_n", c.mesh_n},
                        {"mesh_file", c.mesh_file},
                        {"alpha", c.alpha},
                        {"p", c.p},
                        {"theta", c.theta},
                        {"yd", c.yd},
                        {"v", c.v},
                        {"u", c.u},
                        {"newton_tol", c.newton_tol},
                        {"newton_max_iter", c.newton_max_iter},
                        {"tol", c.tol},
                        {"max_iter", c.max_iter},
                        {"levels", c.levels},
                        {"control_basis", c.control_basis},
                        {"out", c.out},
                        {"as_surface", c.as_surface},
                        {"field", c.field}};
}

/// Applies any keys present in j on top of c (flat keys, unknown keys are
/// an error so typos do not pass silently).
inline void config_apply_json(RunConfig& c, const nlohmann::json& j) {
  for (const auto& [key, value] : j.items()) {
    if (key == "command") c.command = value.get<std::string>();
    else if (key == "study") c.study = value.get<std::string>();
    else if (key == "preset") c.preset = value.get<std::string>();
    else if (key == "mesh_kind") c.mesh_kind = value.get<std::string>();
    else if (key == "mesh_n") c.mesh_n = value.get<int>();
    else if (key == "mesh_file") c.mesh_file = value.get<std::string>();
    else if (key == "alpha") c.alpha = value.get<double>();
    else if (key == "p") c.p = value.get<double>();
    else if (key == "theta") c.theta = value.get<double>();
    else if (key == "yd") c.yd = value.get<std::string>();
    else if (key == "v") c.v = value.get<std::string>();
    else if (key == "u") c.u = value.get<std::string>();
    else if (key == "newton_tol") c.newton_tol = value.get<double>();
    else if (key == "newton_max_iter") c.newton_max_iter = value.get<int>();
    else if (key == "tol") c.tol = value.get<double>();
    else if (key == "max_iter") c.max_iter = value.get<int>();
    else if (key == "levels") c.levels = value.get<int>();
    else if (key == "control_basis") c.control_basis = value.get<std::string>();
    else if (key == "out") c.out = value.get<std::string>();
    else if (key == "as_surface") c.as_surface = value.get<std::string>();
    else if (key == "field") c.field = value.get<std::string>();
    else throw std::invalid_argument("config: unknown key '" + key + "'");
  }
}

inline RunConfig config_from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config: cannot open " + path);
  nlohmann::json j;
  in >> j;
  RunConfig c;
  config_apply_json(c, j);
  return c;
}

/// Sectors for the clover mesh at resolution n: at least 8, divisible by 4,
/// roughly balancing arc length against ring spacing.
inline int clover_sectors_for(int n) {
  const int raw = (3 * n + 1) / 2 * 4;  // 4 * ceil(1.5 n)
  return raw < 8 ? 8 : raw;
}

inline Mesh build_mesh(const RunConfig& c) {
  if (c.mesh_kind == "square") return unit_square_mesh(c.mesh_n);
  if (c.mesh_kind == "clover") return clover_mesh(c.mesh_n, clover_sectors_for(c.mesh_n));
  return read_mesh_file(c.mesh_file);
}

inline ControlProblem make_control_problem(const RunConfig& c, const Mesh& mesh) {
  ControlProblem problem;
  problem.mesh = &mesh;
  problem.alpha = c.alpha;
  problem.p = c.p;
  problem.theta = c.theta;
  problem.y_d = make_field(c.yd);
  problem.v = make_field(c.v);
  problem.newton_tol = c.newton_tol;
  problem.newton_max_iter = c.newton_max_iter;
  problem.optimizer_tol = c.tol;
  problem.optimizer_max_iter = c.max_iter;
  problem.control_basis = c.control_basis == "p0" ? ControlBasis::P0 : ControlBasis::P1;
  problem.validate();
  return problem;
}

/// Atomic text write: temp file then rename.
inline void write_text_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + tmp);
    out << content;
    if (!out) throw std::runtime_error("write failed for " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw std::runtime_error("rename to " + path + " failed: " + ec.message());
}

inline void write_manifest(const RunConfig& c, const std::string& dir) {
  write_text_atomic(dir + "/manifest.json", config_to_json(c).dump(2) + "\n");
}

}  // namespace curvopt

#endif  // CURVOPT_CONFIG_HPP
