#include <catch2/catch.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "curvopt/assembly.hpp"
#include "curvopt/mesh.hpp"
#include "curvopt/p1.hpp"
#include "curvopt/sparse.hpp"
#include "test_helpers.hpp"

using namespace curvopt;

namespace {

// Hand-derived 2-triangle Laplacian on the unit square in grid vertex order
// (0,0), (1,0), (0,1), (1,1); zeros link the diagonal pairs.
const double kTwoTriLaplacian[4][4] = {{1.0, -0.5, -0.5, 0.0},
                                       {-0.5, 1.0, 0.0, -0.5},
                                       {-0.5, 0.0, 1.0, -0.5},
                                       {0.0, -0.5, -0.5, 1.0}};

SparseSymMatrix hand_laplacian_with_elimination() {
  std::vector<std::vector<int>> adj(4);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      if (i != j && kTwoTriLaplacian[i][j] != 0.0) adj[i].push_back(j);
  SparseSymMatrix m = SparseSymMatrix::from_adjacency(std::move(adj));
  // eliminate vertices 0, 1, 3 with a unit diagonal; vertex 2 stays free
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      if (i == 2 && j == 2)
        m.at(2, 2) = kTwoTriLaplacian[2][2];
      else if (i == j)
        m.at(i, j) = 1.0;
    }
  return m;
}

}  // namespace

TEST_CASE("solve_spd on the identity returns the right-hand side") {
  std::vector<std::vector<int>> adj(5);
  SparseSymMatrix m = SparseSymMatrix::from_adjacency(std::move(adj));
  for (int i = 0; i < 5; ++i) m.at(i, i) = 1.0;
  const std::vector<double> b = {1.0, -2.0, 3.0, 0.5, 0.0};
  REQUIRE(solve_spd(m, b) == b);
}

TEST_CASE("solve_spd with eliminated rows leaves a single free dof") {
  const SparseSymMatrix m = hand_laplacian_with_elimination();
  std::vector<double> rhs(4, 0.0);
  rhs[2] = 1.0;
  const std::vector<double> x = solve_spd(m, rhs);
  REQUIRE(x[2] == Approx(1.0).epsilon(1e-14));
  REQUIRE(x[0] == 0.0);
  REQUIRE(x[1] == 0.0);
  REQUIRE(x[3] == 0.0);
}

TEST_CASE("solve_spd reproduces the analytic Poisson solution") {
  using std::numbers::pi;
  const Mesh mesh = unit_square_mesh(32);
  const auto mask = dirichlet_mask(mesh);
  const SparseSymMatrix K = assemble_jacobian(P1Function(mesh), mask);
  const SparseSymMatrix M = assemble_mass(mesh);
  // rhs = M * (2 pi^2 sin sin nodal samples), boundary rows zeroed
  const P1Function f = interpolate(
      mesh, [](double x, double y) { return 2 * pi * pi * std::sin(pi * x) * std::sin(pi * y); });
  std::vector<double> rhs = M.apply(f.coeffs);
  for (int v = 0; v < mesh.num_vertices(); ++v)
    if (mask[v]) rhs[v] = 0.0;
  const std::vector<double> x = solve_spd(K, rhs);
  double worst = 0.0;
  for (int v = 0; v < mesh.num_vertices(); ++v)
    worst = std::max(worst,
                     std::abs(x[v] - std::sin(pi * mesh.vertices[v].x) *
                                         std::sin(pi * mesh.vertices[v].y)));
  REQUIRE(worst <= 5e-3);
}

TEST_CASE("assembled systems are positive definite after elimination") {
  const Mesh mesh = unit_square_mesh(6);
  const SparseSymMatrix K = assemble_jacobian(P1Function(mesh), dirichlet_mask(mesh));
  REQUIRE(K.structurally_symmetric());
  for (int v = 0; v < mesh.num_vertices(); ++v) REQUIRE(K.get(v, v) > 0.0);
  auto rng = curvopt_test::make_rng(1);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> x(mesh.num_vertices());
    for (double& c : x) c = dist(rng);
    REQUIRE(vec_dot(x, K.apply(x)) > 0.0);
  }
}

TEST_CASE("solve_spd is deterministic") {
  const Mesh mesh = unit_square_mesh(12);
  const SparseSymMatrix K = assemble_jacobian(P1Function(mesh), dirichlet_mask(mesh));
  auto rng = curvopt_test::make_rng(2);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<double> rhs(mesh.num_vertices());
  for (double& c : rhs) c = dist(rng);
  REQUIRE(solve_spd(K, rhs) == solve_spd(K, rhs));
}

TEST_CASE("solve_spd input validation and failure reporting") {
  std::vector<std::vector<int>> adj(2);
  SparseSymMatrix m = SparseSymMatrix::from_adjacency(std::move(adj));
  m.at(0, 0) = 1.0;
  m.at(1, 1) = -1.0;  // not SPD
  SECTION("rel_tol range") {
    REQUIRE_THROWS_AS(solve_spd(m, {1.0, 1.0}, 0.0), std::invalid_argument);
    REQUIRE_THROWS_AS(solve_spd(m, {1.0, 1.0}, 1e-3), std::invalid_argument);
  }
  SECTION("dimension mismatch") {
    REQUIRE_THROWS_AS(solve_spd(m, {1.0}), std::invalid_argument);
  }
  SECTION("nonpositive pivot carries a residual") {
    try {
      solve_spd(m, {1.0, 1.0});
      FAIL("expected SolverFailure");
    } catch (const SolverFailure& e) {
      REQUIRE(std::isinf(e.achieved_residual()));
    }
  }
  SECTION("zero rhs short-circuits to zero") {
    const std::vector<double> x = solve_spd(m, {0.0, 0.0});
    REQUIRE(x == std::vector<double>{0.0, 0.0});
  }
}

TEST_CASE("conjugate gradient fallback agrees with the direct path") {
  const Mesh mesh = unit_square_mesh(10);
  const SparseSymMatrix K = assemble_jacobian(P1Function(mesh), dirichlet_mask(mesh));
  auto rng = curvopt_test::make_rng(3);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<double> rhs(mesh.num_vertices());
  for (double& c : rhs) c = dist(rng);
  const std::vector<double> direct = solve_spd(K, rhs);
  const std::vector<double> cg = detail::jacobi_pcg(K, rhs, 1e-12, 40 * K.dim());
  double worst = 0.0;
  for (std::size_t i = 0; i < direct.size(); ++i)
    worst = std::max(worst, std::abs(direct[i] - cg[i]));
  REQUIRE(worst < 1e-9);
}
