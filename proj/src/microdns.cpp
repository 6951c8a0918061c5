#include "pnpup/microdns.hpp"

#include <array>
#include <cmath>
#include <sstream>

#include "pnpup/error.hpp"
#include "pnpup/krylov.hpp"

namespace pnpup {

MicroDomain assemble_micro_domain(const UnitCell& cell, const PermittivityParams& params, double s,
                                  std::size_t max_voxels) {
  if (!(s > 0.0) || s > 1.0) throw InputError("scale ratio s must lie in (0, 1]");
  const long cells = std::lround(1.0 / s);
  if (std::abs(static_cast<double>(cells) * s - 1.0) > 1e-9)
    throw InputError("1/s must be an integer so that cells tile the domain exactly");
  if (cell.dim() > 2) throw InputError("direct simulation is limited to N <= 2");
  const long n = cells * cell.resolution();
  const double voxels = std::pow(static_cast<double>(n), cell.dim());
  if (voxels > static_cast<double>(max_voxels)) {
    std::ostringstream msg;
    msg << "micro grid needs " << static_cast<std::size_t>(voxels) << " voxels (" << n << " per axis), budget is "
        << max_voxels;
    throw InputError(msg.str());
  }
  MicroDomain dom;
  dom.s = s;
  dom.cells_per_axis = static_cast<int>(cells);
  dom.grid = Grid(cell.dim(), static_cast<int>(n), GridKind::Micro);
  dom.fluid.resize(dom.grid.size());
  dom.eps = ScalarField(dom.grid);
  const auto kappa = permittivity_field(cell, params);
  const Grid& cg = cell.grid();
  std::array<int, 3> c{0, 0, 0};
  for (std::size_t v = 0; v < dom.grid.size(); ++v) {
    for (int a = 0; a < cell.dim(); ++a) c[a] = dom.grid.coord(v, a) % cell.resolution();
    const std::size_t w = cg.index(std::span<const int>(c.data(), cell.dim()));
    dom.fluid[v] = cell.fluid_mask()[w];
    dom.eps[v] = kappa[w];
  }
  return dom;
}

double porosity(const MicroDomain& dom) {
  std::size_t fluid = 0;
  for (char c : dom.fluid) fluid += c ? 1 : 0;
  return static_cast<double>(fluid) / static_cast<double>(dom.fluid.size());
}

PoissonResult solve_micro_poisson(const MicroDomain& dom, std::span<const double> nplus,
                                  std::span<const double> nminus, double tol, std::span<const double> warm) {
  const Grid& g = dom.grid;
  const auto op = FluxOperator::from_voxel_coefficient(g, dom.eps.values, Boundary::Neumann);
  std::vector<double> rhs(g.size());
  for (std::size_t v = 0; v < g.size(); ++v) rhs[v] = dom.fluid[v] ? nplus[v] - nminus[v] : 0.0;
  PoissonResult out;
  out.removed_mean_charge = mean(rhs);
  subtract_mean(rhs);
  if (warm.size() == g.size())
    out.u3.assign(warm.begin(), warm.end());
  else
    out.u3.assign(g.size(), 0.0);
  const CgOptions cg{tol, 200 * g.n() + 100, true};
  const auto res = conjugate_gradient(op, rhs, out.u3, cg);
  if (!res.converged) {
    std::ostringstream msg;
    msg << "micro Poisson solve diverged (relative residual " << res.residual << ")";
    throw SolverError(msg.str());
  }
  subtract_mean(out.u3);
  out.iterations = res.iterations;
  out.residual = res.residual;
  return out;
}

TransportModel micro_transport_model(const MicroDomain& dom, const MicroConfig& cfg) {
  TransportModel m;
  m.grid = dom.grid;
  m.bc = cfg.bc == MacroBoundary::Academic ? Boundary::Dirichlet : Boundary::Neumann;
  m.potential_bc = Boundary::Neumann;
  m.active = dom.fluid;
  m.scheme = cfg.drift;
  m.capacity = 1.0;
  m.diffusivity = 1.0;
  m.drift = Eigen::MatrixXd::Identity(dom.grid.dim(), dom.grid.dim());
  return m;
}

MicroStepResult step_micro_pnp(const MicroState& state, const MicroDomain& dom, const MicroConfig& cfg) {
  if (!(cfg.dt > 0)) throw InputError("time step must be positive");
  if (!state.grid.same_shape(dom.grid)) throw InputError("micro state does not live on the domain grid");
  const auto model = micro_transport_model(dom, cfg);
  const auto op = implicit_diffusion_operator(model, cfg.dt);
  PotentialSolve potential = [&](std::span<const double> v1, std::span<const double> v2, std::vector<double>& phi) {
    phi = solve_micro_poisson(dom, v1, v2, cfg.poisson_tol, phi).u3;
  };
  auto step = picard_step(model, op, cfg.dt, state.nplus, state.nminus, state.phi, potential, cfg.picard);
  MicroStepResult out;
  out.state.grid = state.grid;
  out.state.nplus = std::move(step.u1);
  out.state.nminus = std::move(step.u2);
  out.state.phi = std::move(step.phi);
  out.state.t = state.t + cfg.dt;
  out.picard_iterations = step.iterations;
  out.increments = std::move(step.increments);
  return out;
}

namespace {

// Multilinear interpolation with a ghost rule per axis.
std::vector<double> interpolate_axes(const Grid& coarse, std::span<const double> f, const Grid& fine,
                                     const std::array<Boundary, 3>& bc) {
  if (coarse.dim() != fine.dim()) throw InputError("interpolation between grids of different dimension");
  if (coarse.same_shape(fine)) return {f.begin(), f.end()};
  const int dim = coarse.dim();
  const int nc = coarse.n();
  std::vector<double> out(fine.size());
  for (std::size_t v = 0; v < fine.size(); ++v) {
    std::array<int, 3> lo{};
    std::array<double, 3> t{};
    for (int a = 0; a < dim; ++a) {
      const double xi = fine.center(v, a) * nc - 0.5;
      lo[a] = static_cast<int>(std::floor(xi));
      t[a] = xi - lo[a];
    }
    double acc = 0.0;
    for (int corner = 0; corner < (1 << dim); ++corner) {
      double w = 1.0, sign = 1.0;
      std::array<int, 3> c{};
      for (int a = 0; a < dim; ++a) {
        const int bit = (corner >> a) & 1;
        int i = lo[a] + bit;
        w *= bit ? t[a] : 1.0 - t[a];
        if (i < 0 || i >= nc) {
          if (bc[a] == Boundary::Periodic) {
            i = (i + nc) % nc;
          } else {
            i = i < 0 ? 0 : nc - 1;
            if (bc[a] == Boundary::Dirichlet) sign = -sign;
          }
        }
        c[a] = i;
      }
      if (w == 0.0) continue;
      acc += w * sign * f[coarse.index(std::span<const int>(c.data(), dim))];
    }
    out[v] = acc;
  }
  return out;
}

std::array<Boundary, 3> uniform(Boundary b) { return {b, b, b}; }

Boundary density_boundary(MacroBoundary bc) {
  return bc == MacroBoundary::Academic ? Boundary::Dirichlet : Boundary::Neumann;
}

std::vector<double> second_difference(const Grid& g, std::span<const double> u, int axis) {
  // Neumann mirror ghosts.
  const double inv_h2 = 1.0 / (g.spacing() * g.spacing());
  std::vector<double> d(g.size());
  for (std::size_t v = 0; v < g.size(); ++v) {
    const int i = g.coord(v, axis);
    const double up = i == g.n() - 1 ? u[v] : u[v + g.stride(axis)];
    const double dn = i == 0 ? u[v] : u[v - g.stride(axis)];
    d[v] = (up - 2.0 * u[v] + dn) * inv_h2;
  }
  return d;
}

}  // namespace

std::vector<double> interpolate_to(const Grid& coarse, std::span<const double> f, const Grid& fine, Boundary bc) {
  return interpolate_axes(coarse, f, fine, uniform(bc));
}

MicroState micro_initial_state(const MicroDomain& dom, const MacroState& macro, const MicroConfig& cfg,
                               MacroBoundary density_bc) {
  MicroState s;
  s.grid = dom.grid;
  s.t = macro.t;
  const Boundary bc = density_boundary(density_bc);
  s.nplus = interpolate_to(macro.grid, macro.u1, dom.grid, bc);
  s.nminus = interpolate_to(macro.grid, macro.u2, dom.grid, bc);
  for (std::size_t v = 0; v < dom.grid.size(); ++v)
    if (!dom.fluid[v]) s.nplus[v] = s.nminus[v] = 0.0;
  s.phi = solve_micro_poisson(dom, s.nplus, s.nminus, cfg.poisson_tol).u3;
  return s;
}

MicroRun run_micro(const MicroDomain& dom, MicroState init, const MicroConfig& cfg) {
  if (!(cfg.dt > 0) || !(cfg.T >= cfg.dt)) throw InputError("micro run requires dt > 0 and T >= dt");
  const long steps = std::lround(cfg.T / cfg.dt);
  MicroRun run;
  MicroState state = std::move(init);
  const double t0 = state.t;
  for (long k = 0; k < steps; ++k) {
    auto step = step_micro_pnp(state, dom, cfg);
    state = std::move(step.state);
    state.t = t0 + static_cast<double>(k + 1) * cfg.dt;
    run.mass1.push_back(integrate(dom.grid, state.nplus));
    run.mass2.push_back(integrate(dom.grid, state.nminus));
    run.picard_iters.push_back(step.picard_iterations);
  }
  run.final_state = std::move(state);
  return run;
}

MicroState macro_only(const MacroState& macro, const MicroDomain& dom, MacroBoundary density_bc) {
  MicroState s;
  s.grid = dom.grid;
  s.t = macro.t;
  const Boundary bc = density_boundary(density_bc);
  s.nplus = interpolate_to(macro.grid, macro.u1, dom.grid, bc);
  s.nminus = interpolate_to(macro.grid, macro.u2, dom.grid, bc);
  s.phi = interpolate_to(macro.grid, macro.u3, dom.grid, Boundary::Neumann);
  for (std::size_t v = 0; v < dom.grid.size(); ++v)
    if (!dom.fluid[v]) s.nplus[v] = s.nminus[v] = 0.0;
  subtract_mean(s.phi);
  return s;
}

Reconstruction reconstruct_two_scale(const MacroState& macro, const CorrectorSet& correctors,
                                     const EffectiveTensors& tensors, const MicroDomain& dom,
                                     MacroBoundary density_bc, bool first_order_only) {
  const int dim = macro.grid.dim();
  if (dim != dom.grid.dim() || static_cast<int>(correctors.xi3.size()) != dim ||
      static_cast<int>(correctors.eta.size()) != dim || tensors.dim != dim)
    throw InputError("reconstruction inputs have inconsistent dimensions");
  const Grid& cg = correctors.xi3[0].grid;
  if (dom.grid.n() != cg.n() * dom.cells_per_axis)
    throw InputError("micro grid is not a tiling of the corrector grid");

  Reconstruction rec;
  rec.second_order = correctors.has_zeta() && !first_order_only;
  if (!correctors.has_zeta() && !first_order_only)
    rec.warnings.push_back("second-order potential correctors missing; s^2 term skipped");

  MicroState base = macro_only(macro, dom, density_bc);
  // Ghost rules: d_k u3 is odd across faces normal to k, even otherwise.
  std::vector<std::vector<double>> grad(dim);
  for (int k = 0; k < dim; ++k) {
    std::array<Boundary, 3> bc = uniform(Boundary::Neumann);
    bc[k] = Boundary::Dirichlet;
    grad[k] = interpolate_axes(macro.grid, central_gradient(macro.grid, macro.u3, k, Boundary::Neumann), dom.grid, bc);
  }
  std::vector<std::vector<double>> hess;
  if (rec.second_order) {
    hess.resize(static_cast<std::size_t>(dim * dim));
    for (int k = 0; k < dim; ++k)
      for (int l = 0; l < dim; ++l) {
        std::array<Boundary, 3> bc = uniform(Boundary::Neumann);
        std::vector<double> d;
        if (k == l) {
          d = second_difference(macro.grid, macro.u3, k);
        } else {
          d = central_gradient(macro.grid, central_gradient(macro.grid, macro.u3, l, Boundary::Neumann), k,
                               Boundary::Neumann);
          bc[k] = bc[l] = Boundary::Dirichlet;
        }
        hess[k * dim + l] = interpolate_axes(macro.grid, d, dom.grid, bc);
      }
  }

  const double s = dom.s;
  const int m = cg.n();
  std::array<int, 3> c{0, 0, 0};
  MicroState& out = rec.state;
  out = base;
  for (std::size_t v = 0; v < dom.grid.size(); ++v) {
    for (int a = 0; a < dim; ++a) c[a] = dom.grid.coord(v, a) % m;
    const std::size_t y = cg.index(std::span<const int>(c.data(), dim));
    double phi_corr = 0.0, eta_corr = 0.0;
    for (int k = 0; k < dim; ++k) {
      phi_corr -= s * correctors.xi3[k][y] * grad[k][v];
      eta_corr += correctors.eta[k][y] * grad[k][v];
    }
    if (rec.second_order)
      for (int k = 0; k < dim; ++k)
        for (int l = 0; l < dim; ++l) phi_corr += s * s * correctors.zeta(k, l)[y] * hess[k * dim + l][v];
    out.phi[v] += phi_corr;
    if (dom.fluid[v]) {
      out.nplus[v] -= s * kCharge[0] * base.nplus[v] * eta_corr;
      out.nminus[v] -= s * kCharge[1] * base.nminus[v] * eta_corr;
    }
  }
  subtract_mean(out.phi);
  return rec;
}

ErrorReport compare_fields(const Grid& grid, std::span<const double> reference, std::span<const double> candidate,
                           std::span<const char> mask) {
  if (reference.size() != grid.size() || candidate.size() != grid.size() ||
      (!mask.empty() && mask.size() != grid.size()))
    throw InputError("compare_fields: fields are not on the same grid");
  std::vector<double> diff(grid.size());
  for (std::size_t v = 0; v < grid.size(); ++v) diff[v] = candidate[v] - reference[v];
  ErrorReport r;
  r.l2_abs = l2_norm(grid, diff, mask);
  r.linf_abs = max_abs(diff, mask);
  const double l2_ref = l2_norm(grid, reference, mask);
  const double linf_ref = max_abs(reference, mask);
  r.l2_rel = l2_ref > 0 ? r.l2_abs / l2_ref : r.l2_abs;
  r.linf_rel = linf_ref > 0 ? r.linf_abs / linf_ref : r.linf_abs;
  return r;
}

ErrorReport compare_fields(const ScalarField& reference, const ScalarField& candidate, std::span<const char> mask) {
  if (!reference.grid.same_shape(candidate.grid)) throw InputError("compare_fields: grid mismatch");
  return compare_fields(reference.grid, reference.values, candidate.values, mask);
}

}  // namespace pnpup
