#include <catch2/catch.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "curvopt/assembly.hpp"
#include "curvopt/mesh.hpp"
#include "curvopt/p1.hpp"
#include "test_helpers.hpp"

using namespace curvopt;

namespace {

Mesh single_unit_right_triangle() {
  Mesh mesh;
  mesh.vertices = {{0.0, 0.0}, {1.0, 0.0}, {0.0, 1.0}};
  mesh.triangles = {{0, 1, 2}};
  mesh.finalize();
  return mesh;
}

// Dense re-assembly oracle: stiffness with a fixed 2x2 coefficient matrix,
// assembled triangle by triangle into a dense array.
std::vector<std::vector<double>> dense_stiffness(const Mesh& mesh, const Sym2& coeff) {
  std::vector<std::vector<double>> K(mesh.num_vertices(),
                                     std::vector<double>(mesh.num_vertices(), 0.0));
  for (int k = 0; k < mesh.num_triangles(); ++k) {
    const ElementGeometry g = element_geometry(mesh, k);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        K[g.verts[i]][g.verts[j]] += g.area * g.grad_basis[i].dot(coeff.apply(g.grad_basis[j]));
  }
  return K;
}

}  // namespace

TEST_CASE("eval_Q") {
  REQUIRE(eval_Q({0.0, 0.0}) == 1.0);
  REQUIRE(eval_Q({3.0, 4.0}) == Approx(std::sqrt(26.0)).epsilon(1e-15));
  REQUIRE(eval_Q({1.0, 0.0}) == Approx(std::sqrt(2.0)).epsilon(1e-15));
}

TEST_CASE("eval_A closed forms") {
  SECTION("flat graph gives the identity") {
    const Sym2 A = eval_A({0.0, 0.0});
    REQUIRE(A.a11 == 1.0);
    REQUIRE(A.a12 == 0.0);
    REQUIRE(A.a22 == 1.0);
  }
  SECTION("gradient (1,0)") {
    const Sym2 A = eval_A({1.0, 0.0});
    REQUIRE(A.a11 == Approx(1.0 / (2.0 * std::sqrt(2.0))).epsilon(1e-14));
    REQUIRE(A.a12 == 0.0);
    REQUIRE(A.a22 == Approx(1.0 / std::sqrt(2.0)).epsilon(1e-14));
  }
  SECTION("gradient (3,4): eigenpairs") {
    const Vec2 g{3.0, 4.0};
    const Sym2 A = eval_A(g);
    const auto eig = A.eigenvalues();
    REQUIRE(eig[0] == Approx(std::pow(26.0, -1.5)).epsilon(1e-12));
    REQUIRE(eig[1] == Approx(std::pow(26.0, -0.5)).epsilon(1e-12));
    // eigenvector of the smaller eigenvalue is parallel to the gradient
    const Vec2 Ag = A.apply(g);
    REQUIRE(Ag.x == Approx(eig[0] * g.x).epsilon(1e-12));
    REQUIRE(Ag.y == Approx(eig[0] * g.y).epsilon(1e-12));
  }
}

TEST_CASE("element coefficient invariants for random gradients") {
  auto rng = curvopt_test::make_rng(10);
  std::uniform_real_distribution<double> dist(-10.0, 10.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const Vec2 g{dist(rng), dist(rng)};
    const ElementCoeff c = element_coeff(g);
    REQUIRE(c.Q >= 1.0);
    const auto eig = c.A.eigenvalues();
    REQUIRE(eig[0] > 0.0);
    REQUIRE(eig[1] <= 1.0 + 1e-15);
    REQUIRE(eig[0] == Approx(std::pow(c.Q, -3.0)).epsilon(1e-12));
    REQUIRE(eig[1] == Approx(1.0 / c.Q).epsilon(1e-12));
    // uniform positivity of Q^2 I - g g^T: b^T (Q^2 I - g g^T) b >= |b|^2
    const Vec2 b{dist(rng), dist(rng)};
    const double quad = c.Q * c.Q * b.norm2() - (g.dot(b)) * (g.dot(b));
    REQUIRE(quad >= b.norm2() * (1.0 - 1e-12));
  }
}

TEST_CASE("state residual cases") {
  SECTION("flat state with zero control") {
    const Mesh mesh = unit_square_mesh(4);
    const auto mask = dirichlet_mask(mesh);
    const std::vector<double> F =
        assemble_state_residual(P1Function(mesh), P1Function(mesh), mask);
    for (double v : F) REQUIRE(v == 0.0);
  }
  SECTION("unit control on n=2: center entry is -1/4") {
    // hand quadrature: 6 incident triangles of area 1/8, load = |K|/3 each
    const Mesh mesh = unit_square_mesh(2);
    const auto mask = dirichlet_mask(mesh);
    const std::vector<double> F =
        assemble_state_residual(P1Function(mesh), P1Function(mesh, 1.0), mask);
    const int center = 4;
    REQUIRE_FALSE(mesh.is_boundary(center));
    REQUIRE(F[center] == Approx(-0.25).epsilon(1e-14));
  }
  SECTION("constant flux is discretely divergence free") {
    const Mesh mesh = unit_square_mesh(5);
    const auto mask = dirichlet_mask(mesh);
    const P1Function y = interpolate(mesh, [](double x, double) { return x; });
    const std::vector<double> F = assemble_state_residual(y, P1Function(mesh), mask);
    for (double v : F) REQUIRE(std::abs(v) < 1e-14);
  }
  SECTION("dimension mismatch") {
    const Mesh mesh = unit_square_mesh(2);
    const Mesh other = unit_square_mesh(3);
    REQUIRE_THROWS_AS(
        assemble_state_residual(P1Function(mesh), P1Function(other), dirichlet_mask(mesh)),
        std::invalid_argument);
  }
}

TEST_CASE("jacobian assembly") {
  SECTION("two-triangle Laplacian matches the hand-derived matrix") {
    const double expected[4][4] = {{1.0, -0.5, -0.5, 0.0},
                                   {-0.5, 1.0, 0.0, -0.5},
                                   {-0.5, 0.0, 1.0, -0.5},
                                   {0.0, -0.5, -0.5, 1.0}};
    const Mesh mesh = unit_square_mesh(1);
    const std::vector<std::uint8_t> no_elim(4, 0);
    const SparseSymMatrix K = assemble_jacobian(P1Function(mesh), no_elim);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j)
        REQUIRE(std::abs(K.get(i, j) - expected[i][j]) < 1e-14);
  }
  SECTION("flat state reduces to the P1 Laplacian on any mesh") {
    const Mesh mesh = clover_mesh(2, 12);
    const std::vector<std::uint8_t> no_elim(mesh.num_vertices(), 0);
    const SparseSymMatrix K = assemble_jacobian(P1Function(mesh), no_elim);
    const auto dense = dense_stiffness(mesh, Sym2{1.0, 0.0, 1.0});
    for (int i = 0; i < mesh.num_vertices(); ++i)
      for (int j = 0; j < mesh.num_vertices(); ++j)
        REQUIRE(std::abs(K.get(i, j) - dense[i][j]) < 1e-13);
  }
  SECTION("tilted-plane state equals a constant-coefficient stiffness") {
    const Mesh mesh = unit_square_mesh(3);
    const std::vector<std::uint8_t> no_elim(mesh.num_vertices(), 0);
    const P1Function y = interpolate(mesh, [](double x, double) { return x; });
    const SparseSymMatrix K = assemble_jacobian(y, no_elim);
    const Sym2 coeff{1.0 / (2.0 * std::sqrt(2.0)), 0.0, 1.0 / std::sqrt(2.0)};
    const auto dense = dense_stiffness(mesh, coeff);
    for (int i = 0; i < mesh.num_vertices(); ++i)
      for (int j = 0; j < mesh.num_vertices(); ++j)
        REQUIRE(std::abs(K.get(i, j) - dense[i][j]) < 1e-13);
  }
  SECTION("assembled symmetrically, not symmetrized") {
    const Mesh mesh = unit_square_mesh(4);
    auto rng = curvopt_test::make_rng(11);
    std::uniform_real_distribution<double> dist(-0.8, 0.8);
    P1Function y(mesh);
    for (double& c : y.coeffs) c = dist(rng);
    const SparseSymMatrix K = assemble_jacobian(y, dirichlet_mask(mesh));
    REQUIRE(K.max_asymmetry() == 0.0);
  }
}

TEST_CASE("jacobian equals the finite-difference derivative of the residual") {
  auto rng = curvopt_test::make_rng(12);
  std::uniform_real_distribution<double> dist(-0.7, 0.7);
  for (int n : {1, 4}) {
    const Mesh mesh = unit_square_mesh(n);
    const auto mask = n == 1 ? std::vector<std::uint8_t>(mesh.num_vertices(), 0)
                             : dirichlet_mask(mesh);
    P1Function y(mesh);
    for (double& c : y.coeffs) c = dist(rng);
    const P1Function u(mesh);  // load cancels in differences anyway
    const SparseSymMatrix K = assemble_jacobian(y, mask);
    const double eps = 1e-6;
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<double> d(mesh.num_vertices(), 0.0);
      for (int v = 0; v < mesh.num_vertices(); ++v)
        if (!mask[v]) d[v] = dist(rng);
      P1Function yp = y, ym = y;
      for (int v = 0; v < mesh.num_vertices(); ++v) {
        yp[v] += eps * d[v];
        ym[v] -= eps * d[v];
      }
      const std::vector<double> Fp = assemble_state_residual(yp, u, mask);
      const std::vector<double> Fm = assemble_state_residual(ym, u, mask);
      const std::vector<double> Kd = K.apply(d);
      for (int v = 0; v < mesh.num_vertices(); ++v) {
        if (mask[v]) continue;
        REQUIRE(std::abs(Kd[v] - (Fp[v] - Fm[v]) / (2 * eps)) < 1e-6);
      }
    }
  }
}

TEST_CASE("mass matrix") {
  SECTION("single element mass matrix") {
    const Mesh mesh = single_unit_right_triangle();
    const SparseSymMatrix M = assemble_mass(mesh);
    const double scale = 0.5 / 12.0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        REQUIRE(M.get(i, j) == Approx(scale * (i == j ? 2.0 : 1.0)).epsilon(1e-13));
  }
  SECTION("partition of unity: total mass is the domain area") {
    const Mesh mesh = unit_square_mesh(6);
    const SparseSymMatrix M = assemble_mass(mesh);
    const std::vector<double> ones(mesh.num_vertices(), 1.0);
    REQUIRE(vec_dot(ones, M.apply(ones)) == Approx(1.0).epsilon(1e-12));
    // row sums equal int zeta_i
    const std::vector<double> rows = M.apply(ones);
    const std::vector<double> load = assemble_load(mesh, 2, [](double, double) { return 1.0; });
    for (int v = 0; v < mesh.num_vertices(); ++v)
      REQUIRE(rows[v] == Approx(load[v]).epsilon(1e-12));
  }
  SECTION("clover mass totals the polygonal area") {
    const double analytic = std::numbers::pi * 0.35 * 0.35 * 1.045;
    const Mesh mesh = clover_mesh(4, 32);
    const SparseSymMatrix M = assemble_mass(mesh);
    const std::vector<double> ones(mesh.num_vertices(), 1.0);
    REQUIRE(vec_dot(ones, M.apply(ones)) == Approx(analytic).epsilon(0.02));
  }
  SECTION("degree below two is rejected") {
    REQUIRE_THROWS_AS(assemble_mass(unit_square_mesh(1), 1), std::invalid_argument);
  }
}

TEST_CASE("lp norms") {
  const Mesh mesh = unit_square_mesh(16);
  SECTION("constants") {
    for (double p : {1.0, 2.0, 2.5, 7.0}) {
      REQUIRE(lp_norm(P1Function(mesh, 3.0), p) == Approx(3.0).epsilon(1e-12));
      REQUIRE(lp_norm(P1Function(mesh, -3.0), p) == Approx(3.0).epsilon(1e-12));
    }
  }
  SECTION("L2 of the sine interpolant") {
    using std::numbers::pi;
    const Mesh fine = unit_square_mesh(64);
    const P1Function f =
        interpolate(fine, [](double x, double y) { return std::sin(pi * x) * std::sin(pi * y); });
    REQUIRE(lp_norm(f, 2.0) == Approx(0.5).margin(1e-3));
  }
  SECTION("L2.5 of f = x against the analytic integral 1/3.5") {
    const P1Function f = interpolate(mesh, [](double x, double) { return x; });
    REQUIRE(lp_norm(f, 2.5) == Approx(std::pow(1.0 / 3.5, 1.0 / 2.5)).margin(1e-5));
  }
  SECTION("squared L2 norm equals the mass quadratic form") {
    auto rng = curvopt_test::make_rng(13);
    std::uniform_real_distribution<double> dist(-2.0, 2.0);
    P1Function f(mesh);
    for (double& c : f.coeffs) c = dist(rng);
    const SparseSymMatrix M = assemble_mass(mesh);
    const double viaM = vec_dot(f.coeffs, M.apply(f.coeffs));
    const double viaQ = lp_norm(f, 2.0);
    REQUIRE(viaQ * viaQ == Approx(viaM).epsilon(1e-12));
  }
  SECTION("p below one is rejected") {
    REQUIRE_THROWS_AS(lp_norm(P1Function(mesh), 0.5), std::invalid_argument);
  }
}

TEST_CASE("residual consistency at the spherical-cap interpolant") {
  // F(I_h Y) with u = 2/R should vanish at rate O(h) or better
  const AnalyticField cap = fields::cap_trace(2.0);
  double prev = 0.0;
  for (int n : {8, 16, 32}) {
    const Mesh mesh = unit_square_mesh(n);
    const P1Function y = interpolate(mesh, cap.value);
    const P1Function u(mesh, 1.0);
    const std::vector<double> F = assemble_state_residual(y, u, dirichlet_mask(mesh));
    double worst = 0.0;
    for (double v : F) worst = std::max(worst, std::abs(v));
    if (prev > 0.0) REQUIRE(prev / worst >= std::pow(2.0, 0.9));
    prev = worst;
  }
}

TEST_CASE("integral of a P1 function") {
  const Mesh mesh = unit_square_mesh(3);
  REQUIRE(integral(P1Function(mesh, 2.5)) == Approx(2.5).epsilon(1e-12));
  const P1Function f = interpolate(mesh, [](double x, double) { return x; });
  REQUIRE(integral(f) == Approx(0.5).epsilon(1e-12));
}
