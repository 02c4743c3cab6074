#include <catch2/catch.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include "curvopt/mesh.hpp"

namespace {

namespace fs = std::filesystem;

int run_cli(const std::string& args) {
  const std::string cmd = std::string(CURVOPT_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::path("cli_scratch") / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
};

}  // namespace

TEST_CASE("cli: mesh generation writes the ASCII format") {
  TempDir dir("mesh");
  REQUIRE(run_cli("mesh square --mesh-n 3 --out " + dir.path.string()) == 0);
  const curvopt::Mesh mesh = curvopt::read_mesh_file((dir.path / "mesh.ntri").string());
  REQUIRE(mesh.num_vertices() == 16);
  REQUIRE(mesh.num_triangles() == 18);
  REQUIRE(fs::exists(dir.path / "manifest.json"));

  TempDir clover("mesh_clover");
  REQUIRE(run_cli("mesh clover --mesh-n 2 --out " + clover.path.string()) == 0);
  const curvopt::Mesh cm = curvopt::read_mesh_file((clover.path / "mesh.ntri").string());
  REQUIRE(cm.num_vertices() > 0);
}

TEST_CASE("cli: solve-state with zero data produces an all-zero field") {
  TempDir dir("state0");
  REQUIRE(run_cli("solve-state --mesh-n 4 --u zero --v zero --out " + dir.path.string()) == 0);
  const std::string vtk = slurp(dir.path / "solution.vtk");
  REQUIRE(vtk.find("SCALARS y double 1\nLOOKUP_TABLE default\n0\n") != std::string::npos);
}

TEST_CASE("cli: manifest replay reproduces byte-identical history") {
  TempDir first("opt1");
  const std::string base =
      "optimize --mesh-n 6 --yd sine_square --theta 0.5 --max-iter 4 --tol 1e-8 --out ";
  REQUIRE(run_cli(base + first.path.string()) == 0);
  const std::string history1 = slurp(first.path / "history.csv");
  REQUIRE(history1.rfind("iter,cost,grad_norm,control_lp_norm\n", 0) == 0);

  TempDir second("opt2");
  REQUIRE(run_cli("optimize --config " + (first.path / "manifest.json").string() + " --out " +
                  second.path.string()) == 0);
  REQUIRE(slurp(second.path / "history.csv") == history1);
}

TEST_CASE("cli: preset resolves the documented parameters") {
  TempDir dir("preset");
  // dry-ish run: tiny iteration budget, but the manifest must echo preset values
  REQUIRE(run_cli("optimize --preset paperA --mesh-n 4 --max-iter 1 --tol 1 --out " +
                  dir.path.string()) == 0);
  const std::string manifest = slurp(dir.path / "manifest.json");
  REQUIRE(manifest.find("\"alpha\": 1e-06") != std::string::npos);
  REQUIRE(manifest.find("\"p\": 2.5") != std::string::npos);
  REQUIRE(manifest.find("\"theta\": 20.0") != std::string::npos);
  REQUIRE(manifest.find("\"yd\": \"sine_square:0.1") != std::string::npos);
  REQUIRE(manifest.find("\"preset\": \"paperA\"") != std::string::npos);
  REQUIRE(manifest.find("\"mesh_n\": 4") != std::string::npos);  // flag overrides preset
}

TEST_CASE("cli: exit codes") {
  SECTION("config errors exit 2") {
    REQUIRE(run_cli("optimize --p 1.5 --mesh-n 4 --out cli_scratch/bad1") == 2);
    REQUIRE(run_cli("optimize --yd no_such_field --mesh-n 4 --out cli_scratch/bad2") == 2);
    REQUIRE(run_cli("convergence bogus --out cli_scratch/bad3") == 2);
    REQUIRE(run_cli("--not-a-flag") == 2);
  }
  SECTION("solver nonconvergence exits 3") {
    REQUIRE(run_cli("solve-state --mesh-n 8 --u constant:5 --newton-max-iter 12 "
                    "--out cli_scratch/bad4") == 3);
  }
  SECTION("missing mesh file is a config error") {
    REQUIRE(run_cli("solve-state --mesh-kind file --out cli_scratch/bad5") == 2);
  }
  SECTION("unwritable output directory exits 4") {
    TempDir dir("blocked");
    std::ofstream(dir.path / "occupied") << "x";
    // a regular file where the output directory should go
    REQUIRE(run_cli("mesh square --mesh-n 2 --out " + (dir.path / "occupied" / "sub").string()) ==
            4);
  }
}

TEST_CASE("cli: convergence study writes the pinned CSV schema") {
  TempDir dir("conv");
  REQUIRE(run_cli("convergence interp --levels 2 --field sine_square --out " +
                  dir.path.string()) == 0);
  const std::string csv = slurp(dir.path / "table.csv");
  REQUIRE(csv.rfind("h,err_w1inf,err_l2,eoc_w1inf,eoc_l2\n", 0) == 0);
}

TEST_CASE("cli: elementwise control basis") {
  TempDir dir("p0");
  REQUIRE(run_cli("optimize --mesh-n 6 --yd sine_square:0.1 --control-basis p0 --max-iter 3 "
                  "--tol 1e-7 --out " + dir.path.string()) == 0);
  const std::string manifest = slurp(dir.path / "manifest.json");
  REQUIRE(manifest.find("\"control_basis\": \"p0\"") != std::string::npos);
}

TEST_CASE("cli: solves run on an imported mesh file") {
  TempDir dir("meshfile");
  REQUIRE(run_cli("mesh clover --mesh-n 3 --out " + dir.path.string()) == 0);
  REQUIRE(run_cli("solve-state --mesh-kind file --mesh-file " +
                  (dir.path / "mesh.ntri").string() + " --u constant:1 --out " +
                  (dir.path / "solve").string()) == 0);
  REQUIRE(fs::exists(dir.path / "solve" / "solution.vtk"));
}
