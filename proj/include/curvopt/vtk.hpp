#ifndef CURVOPT_VTK_HPP
#define CURVOPT_VTK_HPP

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "curvopt/mesh.hpp"
#include "curvopt/p1.hpp"

namespace curvopt {

/// Writes mesh plus named P1 fields as legacy ASCII VTK (unstructured grid,
/// triangle cells, one SCALARS block per field; values at 9 significant
/// digits). Points sit in the z = 0 plane unless as_surface names a field
/// whose values become the z coordinate. The file is written to a temporary
/// name and renamed into place.
inline void export_vtk(const Mesh& mesh,
                       const std::vector<std::pair<std::string, const P1Function*>>& fields,
                       const std::string& path, const std::string& as_surface = "") {
  const P1Function* height = nullptr;
  for (const auto& [name, f] : fields) {
    if (f->mesh != &mesh)
      throw std::invalid_argument("export_vtk: field '" + name + "' lives on another mesh");
    if (!as_surface.empty() && name == as_surface) height = f;
  }
  if (!as_surface.empty() && height == nullptr)
    throw std::invalid_argument("export_vtk: as_surface field '" + as_surface + "' not exported");

  std::string body;
  body.reserve(64 * (std::size_t)mesh.num_vertices());
  body += "# vtk DataFile Version 3.0\n";
  body += "curvopt fields\n";
  body += "ASCII\n";
  body += "DATASET UNSTRUCTURED_GRID\n";
  char buf[160];
  std::snprintf(buf, sizeof(buf), "POINTS %d double\n", mesh.num_vertices());
  body += buf;
  for (int v = 0; v < mesh.num_vertices(); ++v) {
    const double z = height ? (*height)[v] : 0.0;
    std::snprintf(buf, sizeof(buf), "%.9g %.9g %.9g\n", mesh.vertices[v].x, mesh.vertices[v].y, z);
    body += buf;
  }
  std::snprintf(buf, sizeof(buf), "CELLS %d %d\n", mesh.num_triangles(),
                4 * mesh.num_triangles());
  body += buf;
  for (const Tri& t : mesh.triangles) {
    std::snprintf(buf, sizeof(buf), "3 %d %d %d\n", t[0], t[1], t[2]);
    body += buf;
  }
  std::snprintf(buf, sizeof(buf), "CELL_TYPES %d\n", mesh.num_triangles());
  body += buf;
  for (int k = 0; k < mesh.num_triangles(); ++k) body += "5\n";
  std::snprintf(buf, sizeof(buf), "POINT_DATA %d\n", mesh.num_vertices());
  body += buf;
  for (const auto& [name, f] : fields) {
    body += "SCALARS " + name + " double 1\n";
    body += "LOOKUP_TABLE default\n";
    for (int v = 0; v < mesh.num_vertices(); ++v) {
      std::snprintf(buf, sizeof(buf), "%.9g\n", (*f)[v]);
      body += buf;
    }
  }

  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw std::runtime_error("export_vtk: cannot open " + tmp);
    out << body;
    if (!out) throw std::runtime_error("export_vtk: write failed for " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw std::runtime_error("export_vtk: rename to " + path + " failed: " + ec.message());
}

}  // namespace curvopt

#endif  // CURVOPT_VTK_HPP
