#include <doctest.h>

#include <cmath>
#include <numbers>
#include <set>

#include "helpers.hpp"
#include "pnpup/error.hpp"
#include "pnpup/microdns.hpp"

using namespace pnpup;
using std::numbers::pi;

namespace {

UnitCell cell_of(CellKind kind, int m, double radius = 0.25) {
  GeometrySpec s;
  s.kind = kind;
  s.radius = radius;
  return build_unit_cell(s, m);
}

// 4-connected components of the solid voxels, without wraparound.
int solid_islands(const MicroDomain& dom) {
  const Grid& g = dom.grid;
  std::vector<int> seen(g.size(), 0);
  int count = 0;
  for (std::size_t s = 0; s < g.size(); ++s) {
    if (dom.fluid[s] || seen[s]) continue;
    ++count;
    std::vector<std::size_t> stack{s};
    seen[s] = 1;
    while (!stack.empty()) {
      const auto v = stack.back();
      stack.pop_back();
      for (int a = 0; a < 2; ++a) {
        const int c = g.coord(v, a);
        if (c + 1 < g.n()) {
          const auto w = v + g.stride(a);
          if (!dom.fluid[w] && !seen[w]) seen[w] = 1, stack.push_back(w);
        }
        if (c > 0) {
          const auto w = v - g.stride(a);
          if (!dom.fluid[w] && !seen[w]) seen[w] = 1, stack.push_back(w);
        }
      }
    }
  }
  return count;
}

MacroState macro_from(const Grid& g, const std::function<double(double, double)>& f1,
                      const std::function<double(double, double)>& f2) {
  MacroState s(g);
  for (std::size_t v = 0; v < g.size(); ++v) {
    s.u1[v] = f1(g.center(v, 0), g.center(v, 1));
    s.u2[v] = f2(g.center(v, 0), g.center(v, 1));
  }
  return s;
}

}  // namespace

TEST_CASE("micro domain assembly") {
  const PermittivityParams params{0.5, 3.0};
  SUBCASE("full cell") {
    auto dom = assemble_micro_domain(cell_of(CellKind::Full, 8), params, 0.25);
    CHECK(dom.grid.n() == 32);
    CHECK(dom.cells_per_axis == 4);
    CHECK(porosity(dom) == 1.0);
    for (double e : dom.eps.values) CHECK(e == 0.25);
  }
  SUBCASE("disc tiling: 16 inclusions and bit-exact porosity") {
    auto cell = cell_of(CellKind::Disc, 16);
    auto dom = assemble_micro_domain(cell, params, 0.25);
    CHECK(solid_islands(dom) == 16);
    CHECK(porosity(dom) == porosity(cell));
    for (std::size_t v = 0; v < dom.grid.size(); ++v) {
      const int i = dom.grid.coord(v, 0) % 16, j = dom.grid.coord(v, 1) % 16;
      REQUIRE(dom.fluid[v] == cell.fluid_mask()[testing::at(cell.grid(), i, j)]);
    }
  }
  SUBCASE("laminate stripes") {
    auto dom = assemble_micro_domain(cell_of(CellKind::Laminate, 8), PermittivityParams{1.0, 4.0}, 0.125);
    int changes = 0;
    for (int i = 0; i + 1 < dom.grid.n(); ++i)
      changes += dom.fluid[testing::at(dom.grid, i, 0)] != dom.fluid[testing::at(dom.grid, i + 1, 0)];
    CHECK(changes == 15);  // 8 periods: 16 layers
    CHECK(std::set<double>(dom.eps.values.begin(), dom.eps.values.end()) == std::set<double>{1.0, 4.0});
  }
  SUBCASE("errors") {
    auto cell = cell_of(CellKind::Disc, 16);
    CHECK_THROWS_AS(assemble_micro_domain(cell, params, 0.3), InputError);
    CHECK_THROWS_WITH_AS(assemble_micro_domain(cell, params, 1.0 / 64, 1 << 16), doctest::Contains("1048576"),
                         InputError);
    GeometrySpec s3;
    s3.dim = 3;
    CHECK_THROWS_AS(assemble_micro_domain(build_unit_cell(s3, 4), params, 0.5), InputError);
  }
}

TEST_CASE("micro Poisson") {
  SUBCASE("zero charge") {
    auto dom = assemble_micro_domain(cell_of(CellKind::Disc, 8), PermittivityParams{1.0, 4.0}, 0.25);
    std::vector<double> n(dom.grid.size(), 0.3);
    CHECK(max_abs(solve_micro_poisson(dom, n, n, 1e-10).u3) == 0.0);
  }
  SUBCASE("constant permittivity eigenfunction") {
    const double lambda = 0.8;
    auto dom = assemble_micro_domain(cell_of(CellKind::Full, 16), PermittivityParams{lambda, 1.0}, 0.25);
    const Grid& g = dom.grid;
    std::vector<double> np(g.size()), nm(g.size(), 0.0);
    for (std::size_t v = 0; v < g.size(); ++v) np[v] = std::cos(pi * g.center(v, 0));
    const auto r = solve_micro_poisson(dom, np, nm, 1e-10);
    double err = 0;
    for (std::size_t v = 0; v < g.size(); ++v)
      err = std::max(err, std::abs(r.u3[v] - np[v] / (lambda * lambda * pi * pi)));
    CHECK(err < 0.2 / (64.0 * 64.0));
  }
  SUBCASE("laminate permittivity agrees with a twice-refined solve") {
    const PermittivityParams params{1.0, 4.0};
    auto solve = [&](int m) {
      auto dom = assemble_micro_domain(cell_of(CellKind::Laminate, m), params, 0.125);
      std::vector<double> np(dom.grid.size()), nm(dom.grid.size(), 0.0);
      for (std::size_t v = 0; v < dom.grid.size(); ++v)
        np[v] = std::cos(pi * dom.grid.center(v, 0)) * std::cos(pi * dom.grid.center(v, 1));
      return std::make_pair(dom.grid, solve_micro_poisson(dom, np, nm, 1e-11).u3);
    };
    const auto [gc, coarse] = solve(16);
    const auto [gf, fine] = solve(32);
    std::vector<double> restricted(gc.size());
    for (int i = 0; i < gc.n(); ++i)
      for (int j = 0; j < gc.n(); ++j) {
        double s = 0;
        for (int di = 0; di < 2; ++di)
          for (int dj = 0; dj < 2; ++dj) s += fine[testing::at(gf, 2 * i + di, 2 * j + dj)];
        restricted[testing::at(gc, i, j)] = 0.25 * s;
      }
    std::vector<double> d(gc.size());
    for (std::size_t v = 0; v < gc.size(); ++v) d[v] = coarse[v] - restricted[v];
    const double rel = l2_norm(gc, d) / l2_norm(gc, restricted);
    MESSAGE("laminate micro Poisson refinement difference " << rel);
    CHECK(rel < 1e-3);
  }
}

TEST_CASE("micro time stepping") {
  const PermittivityParams params{1.0, 4.0};
  auto cell = cell_of(CellKind::Disc, 16);
  auto dom = assemble_micro_domain(cell, params, 0.25);
  const Grid coarse(2, 32, GridKind::Macro);
  SUBCASE("zero densities stay zero") {
    MicroConfig cfg;
    cfg.dt = 1e-3;
    cfg.T = 3e-3;
    auto init = micro_initial_state(dom, MacroState(coarse), cfg, cfg.bc);
    auto run = run_micro(dom, init, cfg);
    CHECK(max_abs(run.final_state.nplus) == 0.0);
    CHECK(max_abs(run.final_state.phi) == 0.0);
  }
  SUBCASE("equal densities with no-flux walls: zero potential and exact mass") {
    MicroConfig cfg;
    cfg.dt = 1e-3;
    cfg.T = 5e-3;
    cfg.bc = MacroBoundary::Neumann;
    auto bump = [](double x, double y) { return 1.0 + 0.5 * std::cos(pi * x) * std::cos(pi * y); };
    auto init = micro_initial_state(dom, macro_from(coarse, bump, bump), cfg, cfg.bc);
    const double m0 = integrate(dom.grid, init.nplus);
    auto run = run_micro(dom, init, cfg);
    double prev = m0;
    for (std::size_t k = 0; k < run.mass1.size(); ++k) {
      CHECK(std::abs(run.mass1[k] - prev) <= 1e-10 * m0);
      CHECK(run.mass1[k] == run.mass2[k]);
      prev = run.mass1[k];
    }
    CHECK(max_abs(run.final_state.phi) <= 1e-12);
    for (std::size_t v = 0; v < dom.grid.size(); ++v)
      if (!dom.fluid[v]) REQUIRE(run.final_state.nplus[v] == 0.0);
  }
  SUBCASE("refined time step oracle") {
    auto u1 = [](double x, double) { return 1.0 + 0.5 * std::sin(pi * x); };
    auto u2 = [](double, double) { return 1.0; };
    auto run_at = [&](double dt) {
      MicroConfig cfg;
      cfg.dt = dt;
      cfg.T = 0.01;
      cfg.bc = MacroBoundary::Neumann;
      return run_micro(dom, micro_initial_state(dom, macro_from(coarse, u1, u2), cfg, cfg.bc), cfg).final_state;
    };
    const auto a = run_at(1e-4), b = run_at(1e-5);
    const auto e1 = compare_fields(dom.grid, b.nplus, a.nplus, dom.fluid);
    const auto e2 = compare_fields(dom.grid, b.nminus, a.nminus, dom.fluid);
    MESSAGE("dt vs dt/10: n+ " << e1.l2_abs << " (rel " << e1.l2_rel << "), n- " << e2.l2_abs);
    CHECK(e1.l2_abs < 1e-4);
    CHECK(e2.l2_abs < 1e-4);
  }
}

TEST_CASE("interpolation reproduces linear fields") {
  const Grid coarse(2, 8, GridKind::Macro), fine(2, 32, GridKind::Micro);
  std::vector<double> f(coarse.size());
  for (std::size_t v = 0; v < coarse.size(); ++v) f[v] = 2.0 * coarse.center(v, 0) - coarse.center(v, 1) + 0.5;
  const auto g = interpolate_to(coarse, f, fine, Boundary::Neumann);
  const double h = coarse.spacing();
  for (std::size_t v = 0; v < fine.size(); ++v) {
    const double x = fine.center(v, 0), y = fine.center(v, 1);
    if (x < h / 2 || x > 1 - h / 2 || y < h / 2 || y > 1 - h / 2) continue;
    REQUIRE(g[v] == doctest::Approx(2.0 * x - y + 0.5).epsilon(1e-12));
  }
  std::vector<double> c(coarse.size(), 3.0);
  for (double x : interpolate_to(coarse, c, fine, Boundary::Neumann)) REQUIRE(x == doctest::Approx(3.0));
}

TEST_CASE("two-scale reconstruction") {
  const PermittivityParams params{1.0, 4.0};
  auto cell = cell_of(CellKind::Disc, 16);
  auto hom = homogenize(cell, params, SolverOptions{});
  auto dom = assemble_micro_domain(cell, params, 0.25);
  const Grid coarse(2, 32, GridKind::Macro);
  SUBCASE("zero correctors give the interpolated macro fields") {
    auto macro = macro_from(coarse, [](double x, double) { return 1.0 + x; }, [](double, double y) { return 1.0 + y; });
    for (std::size_t v = 0; v < coarse.size(); ++v) macro.u3[v] = std::cos(pi * coarse.center(v, 0));
    CorrectorSet zero = hom.correctors;
    for (auto* set : {&zero.xi3, &zero.eta, &zero.zeta3})
      for (auto& f : *set) std::fill(f.values.begin(), f.values.end(), 0.0);
    const auto rec = reconstruct_two_scale(macro, zero, hom.tensors, dom, MacroBoundary::Academic);
    const auto plain = macro_only(macro, dom, MacroBoundary::Academic);
    CHECK(testing::max_diff(rec.state.phi, plain.phi) < 1e-14);
    CHECK(testing::max_diff(rec.state.nplus, plain.nplus) < 1e-14);
  }
  SUBCASE("constant potential leaves no corrector contribution") {
    auto macro = macro_from(coarse, [](double, double) { return 0.5; }, [](double, double) { return 0.5; });
    const auto rec = reconstruct_two_scale(macro, hom.correctors, hom.tensors, dom, MacroBoundary::Neumann);
    const auto plain = macro_only(macro, dom, MacroBoundary::Neumann);
    CHECK(testing::max_diff(rec.state.phi, plain.phi) == 0.0);
    CHECK(testing::max_diff(rec.state.nplus, plain.nplus) == 0.0);
  }
  SUBCASE("missing second-order correctors produce a warning") {
    auto first = hom.correctors;
    first.zeta3.clear();
    auto macro = macro_from(coarse, [](double, double) { return 1.0; }, [](double, double) { return 1.0; });
    const auto rec = reconstruct_two_scale(macro, first, hom.tensors, dom, MacroBoundary::Academic);
    CHECK_FALSE(rec.second_order);
    CHECK(rec.warnings.size() == 1);
  }
  SUBCASE("laminate: the reconstruction beats the macro field against DNS") {
    auto lam = cell_of(CellKind::Laminate, 16);
    auto lh = homogenize(lam, params, SolverOptions{});
    auto ldom = assemble_micro_domain(lam, params, 0.125);
    MacroConfig mc;
    mc.resolution = 64;
    mc.dt = 1e-4;
    mc.T = 2e-4;
    const Grid g(2, 64, GridKind::Macro);
    const auto seed = initial_state(g, "dipole");
    const auto macro = run_macro(mc, lh.tensors, seed).final_state;
    MicroConfig cfg;
    cfg.dt = mc.dt;
    cfg.T = mc.T;
    const auto dns = run_micro(ldom, micro_initial_state(ldom, seed, cfg, cfg.bc), cfg).final_state;
    const auto rec = reconstruct_two_scale(macro, lh.correctors, lh.tensors, ldom, cfg.bc);
    const auto plain = macro_only(macro, ldom, cfg.bc);
    const double e_rec = compare_fields(ldom.grid, dns.phi, rec.state.phi).l2_rel;
    const double e_plain = compare_fields(ldom.grid, dns.phi, plain.phi).l2_rel;
    MESSAGE("laminate s=1/8: reconstruction " << e_rec << ", macro only " << e_plain);
    CHECK(e_rec < e_plain);
  }
}

TEST_CASE("constant coefficient: DNS and upscaled runs coincide") {
  const PermittivityParams params{1.0, 1.0};
  auto cell = cell_of(CellKind::Full, 8);
  auto hom = homogenize(cell, params, SolverOptions{});
  auto dom = assemble_micro_domain(cell, params, 0.125);  // fine grid 64
  MacroConfig mc;
  mc.resolution = 64;
  mc.dt = 1e-3;
  mc.T = 3e-3;
  const auto seed = initial_state(Grid(2, 64, GridKind::Macro), "dipole");
  const auto macro = run_macro(mc, hom.tensors, seed).final_state;
  MicroConfig cfg;
  cfg.dt = mc.dt;
  cfg.T = mc.T;
  const auto dns = run_micro(dom, micro_initial_state(dom, seed, cfg, cfg.bc), cfg).final_state;
  CHECK(compare_fields(dom.grid, dns.nplus, macro.u1).l2_rel < 1e-9);
  CHECK(compare_fields(dom.grid, dns.phi, macro.u3).l2_rel < 1e-8);
}

TEST_CASE("compare_fields") {
  Grid g(2, 16);
  auto a = testing::random_vector(g.size(), 4);
  auto r = compare_fields(g, a, a);
  CHECK(r.l2_abs == 0.0);
  CHECK(r.linf_rel == 0.0);
  std::vector<double> zero(g.size(), 0.0), half(g.size(), 0.5);
  r = compare_fields(g, zero, half);
  CHECK(r.l2_abs == doctest::Approx(0.5));
  CHECK(r.linf_abs == doctest::Approx(0.5));
  auto b = a;
  for (auto& x : b) x += 0.5;
  CHECK(compare_fields(g, a, b).l2_abs == doctest::Approx(0.5));
  std::vector<char> mask(g.size(), 0);
  mask[0] = 1;
  b[1] += 100.0;
  CHECK(compare_fields(g, a, b, mask).linf_abs == doctest::Approx(0.5));
  CHECK_THROWS_AS(compare_fields(ScalarField(Grid(2, 8)), ScalarField(Grid(2, 16))), InputError);
}
