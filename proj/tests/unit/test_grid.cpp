#include <doctest.h>

#include <cmath>
#include <numbers>

#include "helpers.hpp"
#include "pnpup/error.hpp"
#include "pnpup/flux_operator.hpp"
#include "pnpup/grid.hpp"
#include "pnpup/krylov.hpp"

using namespace pnpup;
using testing::dot;
using testing::random_vector;

TEST_CASE("grid indexing is row-major with axis 0 slowest") {
  Grid g(3, 5);
  CHECK(g.size() == 125);
  CHECK(g.stride(0) == 25);
  CHECK(g.stride(2) == 1);
  const int c[3] = {1, 2, 3};
  const auto v = g.index(c);
  CHECK(v == 1 * 25 + 2 * 5 + 3);
  for (int a = 0; a < 3; ++a) CHECK(g.coord(v, a) == c[a]);
  CHECK(g.center(v, 1) == doctest::Approx(0.5));
}

TEST_CASE("periodic neighbours wrap around") {
  Grid g(2, 4);
  const auto last = testing::at(g, 3, 1);
  CHECK(g.wrap_plus(last, 0) == testing::at(g, 0, 1));
  CHECK(g.wrap_minus(testing::at(g, 0, 1), 0) == last);
  CHECK(g.wrap_plus(testing::at(g, 2, 3), 1) == testing::at(g, 2, 0));
}

TEST_CASE("grid rejects invalid shapes") {
  CHECK_THROWS_AS(Grid(0, 4), InputError);
  CHECK_THROWS_AS(Grid(4, 4), InputError);
  CHECK_THROWS_AS(Grid(2, 0), InputError);
}

TEST_CASE("reductions use voxel-volume weights") {
  Grid g(2, 8);
  std::vector<double> ones(g.size(), 1.0);
  CHECK(integrate(g, ones) == doctest::Approx(1.0));
  CHECK(l2_norm(g, ones) == doctest::Approx(1.0));
  std::vector<char> half(g.size(), 0);
  for (std::size_t v = 0; v < g.size(); ++v) half[v] = g.coord(v, 0) < 4;
  CHECK(integrate(g, ones, half) == doctest::Approx(0.5));
  auto f = random_vector(g.size(), 7);
  subtract_mean(f, half);
  CHECK(std::abs(mean(f, half)) < 1e-15);
  CHECK(max_abs(std::vector<double>{-3.0, 2.0}) == 3.0);
}

TEST_CASE("flux operator is symmetric for every boundary kind") {
  Grid g(2, 12);
  const auto coef = random_vector(g.size(), 1, 0.5, 3.0);
  for (Boundary bc : {Boundary::Periodic, Boundary::Neumann, Boundary::Dirichlet}) {
    auto A = FluxOperator::from_voxel_coefficient(g, coef, bc);
    const auto x = random_vector(g.size(), 2), y = random_vector(g.size(), 3);
    std::vector<double> ax(g.size()), ay(g.size());
    A.apply(x, ax);
    A.apply(y, ay);
    CHECK(dot(ax, y) == doctest::Approx(dot(x, ay)).epsilon(1e-12));
  }
}

TEST_CASE("full tensor operator is symmetric and positive semidefinite") {
  Grid g(2, 10);
  Eigen::MatrixXd T(2, 2);
  T << 2.0, 0.7, 0.7, 1.5;
  for (Boundary bc : {Boundary::Neumann, Boundary::Dirichlet, Boundary::Periodic}) {
    auto A = FluxOperator::from_tensor(g, T, bc);
    const auto x = random_vector(g.size(), 4), y = random_vector(g.size(), 5);
    std::vector<double> ax(g.size()), ay(g.size());
    A.apply(x, ax);
    A.apply(y, ay);
    CHECK(dot(ax, y) == doctest::Approx(dot(x, ay)).epsilon(1e-12));
    CHECK(dot(ax, x) > 0.0);
    // diagonal() must agree with e_v^T A e_v
    const auto d = A.diagonal();
    for (std::size_t v : {std::size_t{0}, std::size_t{13}, g.size() - 1}) {
      std::vector<double> e(g.size(), 0.0), ae(g.size());
      e[v] = 1.0;
      A.apply(e, ae);
      CHECK(d[v] == doctest::Approx(ae[v]).epsilon(1e-12));
    }
  }
}

TEST_CASE("cell-centred sine is an exact Dirichlet eigenvector") {
  const int n = 32;
  Grid g(1, n);
  std::vector<double> coef(g.size(), 1.0), u(g.size()), au(g.size());
  for (std::size_t v = 0; v < g.size(); ++v) u[v] = std::sin(std::numbers::pi * g.center(v, 0));
  FluxOperator::from_voxel_coefficient(g, coef, Boundary::Dirichlet).apply(u, au);
  const double h = g.spacing();
  const double lambda = 4.0 * std::pow(std::sin(std::numbers::pi * h / 2), 2) / (h * h);
  for (std::size_t v = 0; v < g.size(); ++v) CHECK(au[v] == doctest::Approx(lambda * u[v]).epsilon(1e-12));
}

TEST_CASE("inactive voxels are decoupled") {
  Grid g(2, 6);
  std::vector<char> active(g.size(), 1);
  active[testing::at(g, 2, 2)] = 0;
  std::vector<double> coef(g.size(), 1.0);
  auto A = FluxOperator::from_voxel_coefficient(g, coef, Boundary::Periodic, active);
  CHECK(A.face(0, testing::at(g, 1, 2)) == 0.0);
  CHECK(A.face(1, testing::at(g, 2, 1)) == 0.0);
  CHECK(A.face(0, testing::at(g, 0, 0)) == 1.0);
  CHECK(A.singular());
}

TEST_CASE("harmonic face averaging") {
  Grid g(1, 4);
  std::vector<double> coef{1.0, 4.0, 1.0, 4.0};
  auto A = FluxOperator::from_voxel_coefficient(g, coef, Boundary::Periodic);
  for (std::size_t v = 0; v < 4; ++v) CHECK(A.face(0, v) == doctest::Approx(1.6));
}

TEST_CASE("conjugate gradient solves a shifted Neumann system") {
  Grid g(2, 24);
  const auto coef = random_vector(g.size(), 11, 1.0, 5.0);
  auto A = FluxOperator::from_voxel_coefficient(g, coef, Boundary::Neumann);
  A.add_shift(3.0);
  CHECK_FALSE(A.singular());
  const auto xstar = random_vector(g.size(), 12);
  std::vector<double> b(g.size()), x(g.size(), 0.0);
  A.apply(xstar, b);
  const auto res = conjugate_gradient(A, b, x, CgOptions{1e-12, 2000, false});
  CHECK(res.converged);
  CHECK(res.residual <= 1e-12);
  CHECK(testing::max_diff(x, xstar) < 1e-9);
}

TEST_CASE("singular periodic system with mean projection") {
  Grid g(2, 16);
  const auto coef = random_vector(g.size(), 21, 1.0, 2.0);
  auto A = FluxOperator::from_voxel_coefficient(g, coef, Boundary::Periodic);
  auto xstar = random_vector(g.size(), 22);
  subtract_mean(xstar);
  std::vector<double> b(g.size()), x(g.size(), 0.0);
  A.apply(xstar, b);
  const auto res = conjugate_gradient(A, b, x, CgOptions{1e-12, 2000, true});
  CHECK(res.converged);
  CHECK(std::abs(mean(x)) < 1e-14);
  CHECK(testing::max_diff(x, xstar) < 1e-9);
}

TEST_CASE("zero right-hand side returns zero") {
  Grid g(2, 8);
  std::vector<double> coef(g.size(), 1.0), b(g.size(), 0.0), x = random_vector(g.size(), 3);
  auto A = FluxOperator::from_voxel_coefficient(g, coef, Boundary::Dirichlet);
  const auto res = conjugate_gradient(A, b, x, CgOptions{});
  CHECK(res.converged);
  CHECK(max_abs(x) == 0.0);
}

TEST_CASE("iteration cap is reported, not hidden") {
  Grid g(2, 32);
  std::vector<double> coef(g.size(), 1.0), x(g.size(), 0.0);
  auto b = random_vector(g.size(), 5);
  auto A = FluxOperator::from_voxel_coefficient(g, coef, Boundary::Dirichlet);
  const auto res = conjugate_gradient(A, b, x, CgOptions{1e-12, 3, false});
  CHECK_FALSE(res.converged);
  CHECK(res.iterations == 3);
  CHECK(res.residual > 1e-12);
}

TEST_CASE("gradients of a linear profile") {
  Grid g(1, 10);
  std::vector<double> u(g.size());
  for (std::size_t v = 0; v < g.size(); ++v) u[v] = 3.0 * g.center(v, 0);
  const auto fg = face_gradient(g, u, 0, false);
  for (std::size_t v = 0; v + 1 < g.size(); ++v) CHECK(fg[v] == doctest::Approx(3.0));
  CHECK(fg.back() == 0.0);
  const auto cg = central_gradient(g, u, 0, Boundary::Neumann);
  for (std::size_t v = 1; v + 1 < g.size(); ++v) CHECK(cg[v] == doctest::Approx(3.0));
  // mirror ghost at the boundary halves the one-sided difference
  CHECK(cg[0] == doctest::Approx(1.5));
}
