#include "pnpup/macropnp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <limits>
#include <sstream>

#include "pnpup/error.hpp"
#include "pnpup/krylov.hpp"

namespace pnpup {

namespace {

void require_spd(const Eigen::MatrixXd& eps0, int dim) {
  if (eps0.rows() != dim || eps0.cols() != dim) throw InputError("eps0 shape does not match the macro grid");
  const double scale = eps0.cwiseAbs().maxCoeff();
  if (!(scale > 0) || (eps0 - eps0.transpose()).cwiseAbs().maxCoeff() > 1e-8 * scale)
    throw SolverError("eps0 is not symmetric positive definite");
  Eigen::LLT<Eigen::MatrixXd> llt(eps0);
  if (llt.info() != Eigen::Success) throw SolverError("eps0 is not symmetric positive definite");
}

double entropy_density(double u) {
  if (u < 0.0) throw InputError("free energy requires non-negative densities");
  return u > 0.0 ? u * (std::log(u) - 1.0) : 0.0;
}

double field_energy(const Grid& grid, std::span<const double> phi, const Eigen::MatrixXd& coef, Boundary bc) {
  const auto op = FluxOperator::from_tensor(grid, coef, bc);
  std::vector<double> a(grid.size());
  op.apply(phi, a);
  long double s = 0;
  for (std::size_t v = 0; v < grid.size(); ++v) s += phi[v] * a[v];
  return static_cast<double>(s) * grid.voxel_volume();
}

double interaction_and_entropy(const MacroState& state) {
  long double s = 0;
  for (std::size_t v = 0; v < state.grid.size(); ++v)
    s += entropy_density(state.u1[v]) + entropy_density(state.u2[v]) + (state.u1[v] - state.u2[v]) * state.u3[v];
  return static_cast<double>(s) * state.grid.voxel_volume();
}

}  // namespace

PoissonResult solve_macro_poisson(const Grid& grid, std::span<const double> u1, std::span<const double> u2,
                                  const Eigen::MatrixXd& eps0, double p, double tol, std::span<const double> warm) {
  require_spd(eps0, grid.dim());
  if (u1.size() != grid.size() || u2.size() != grid.size()) throw InputError("density size does not match grid");
  const Eigen::MatrixXd sym = 0.5 * (eps0 + eps0.transpose());
  const auto op = FluxOperator::from_tensor(grid, sym, Boundary::Neumann);
  std::vector<double> rhs(grid.size());
  for (std::size_t v = 0; v < grid.size(); ++v) rhs[v] = p * (u1[v] - u2[v]);
  PoissonResult out;
  out.removed_mean_charge = mean(rhs);
  subtract_mean(rhs);
  if (warm.size() == grid.size())
    out.u3.assign(warm.begin(), warm.end());
  else
    out.u3.assign(grid.size(), 0.0);
  const CgOptions cg{tol, 100 * grid.n() + 100, true};
  const auto res = conjugate_gradient(op, rhs, out.u3, cg);
  if (!res.converged) {
    std::ostringstream msg;
    msg << "macro Poisson solve diverged (relative residual " << res.residual << " after " << res.iterations
        << " iterations)";
    throw SolverError(msg.str());
  }
  subtract_mean(out.u3);
  out.iterations = res.iterations;
  out.residual = res.residual;
  return out;
}

TransportModel macro_transport_model(const EffectiveTensors& tensors, const MacroConfig& cfg) {
  TransportModel m;
  m.grid = Grid(cfg.dim, cfg.resolution, GridKind::Macro);
  m.bc = cfg.bc == MacroBoundary::Academic ? Boundary::Dirichlet : Boundary::Neumann;
  m.potential_bc = Boundary::Neumann;
  m.scheme = cfg.drift;
  m.capacity = tensors.porosity;
  m.diffusivity = tensors.porosity;
  m.drift = tensors.M - tensors.Hhat;
  return m;
}

MacroStepResult step_macro_pnp(const MacroState& state, const EffectiveTensors& tensors, const MacroConfig& cfg) {
  if (!(cfg.dt > 0)) throw InputError("time step must be positive");
  if (tensors.dim != state.grid.dim()) throw InputError("tensor dimension does not match the macro grid");
  auto model = macro_transport_model(tensors, cfg);
  model.grid = state.grid;
  const auto op = implicit_diffusion_operator(model, cfg.dt);
  double removed = 0.0;
  PotentialSolve potential = [&](std::span<const double> v1, std::span<const double> v2, std::vector<double>& phi) {
    auto res = solve_macro_poisson(state.grid, v1, v2, tensors.eps0, tensors.porosity, cfg.poisson_tol, phi);
    phi = std::move(res.u3);
    removed = res.removed_mean_charge;
  };
  auto step = picard_step(model, op, cfg.dt, state.u1, state.u2, state.u3, potential, cfg.picard);
  MacroStepResult out;
  out.state.grid = state.grid;
  out.state.u1 = std::move(step.u1);
  out.state.u2 = std::move(step.u2);
  out.state.u3 = std::move(step.phi);
  out.state.t = state.t + cfg.dt;
  out.picard_iterations = step.iterations;
  out.increments = std::move(step.increments);
  out.removed_mean_charge = removed;
  return out;
}

double free_energy(const MacroState& state, double lambda2, Boundary potential_bc) {
  const Eigen::MatrixXd coef = lambda2 * Eigen::MatrixXd::Identity(state.grid.dim(), state.grid.dim());
  return interaction_and_entropy(state) - field_energy(state.grid, state.u3, coef, potential_bc);
}

double free_energy_effective(const MacroState& state, const Eigen::MatrixXd& eps0) {
  return interaction_and_entropy(state) - field_energy(state.grid, state.u3, eps0, Boundary::Neumann);
}

LocalEquilibriumReport check_local_equilibrium(const MacroState& state, int window) {
  if (window < 1) throw InputError("local-equilibrium window must be positive");
  const Grid& g = state.grid;
  const int nb = (g.n() + window - 1) / window;
  int total = 1;
  for (int a = 0; a < g.dim(); ++a) total *= nb;

  std::vector<double> lo(2 * total, std::numeric_limits<double>::infinity());
  std::vector<double> hi(2 * total, -std::numeric_limits<double>::infinity());
  std::vector<char> skip(total, 0);
  const std::vector<double>* u[2] = {&state.u1, &state.u2};
  for (std::size_t v = 0; v < g.size(); ++v) {
    int b = 0;
    for (int a = 0; a < g.dim(); ++a) b = b * nb + g.coord(v, a) / window;
    for (int r = 0; r < 2; ++r) {
      const double d = (*u[r])[v];
      if (!(d > 0.0)) {
        skip[b] = 1;
        continue;
      }
      const double mu = std::log(d) + kCharge[r] * state.u3[v];
      lo[2 * b + r] = std::min(lo[2 * b + r], mu);
      hi[2 * b + r] = std::max(hi[2 * b + r], mu);
    }
  }
  LocalEquilibriumReport rep;
  rep.blocks = total;
  for (int b = 0; b < total; ++b) {
    if (skip[b]) {
      ++rep.skipped_blocks;
      continue;
    }
    for (int r = 0; r < 2; ++r) rep.deviation = std::max(rep.deviation, hi[2 * b + r] - lo[2 * b + r]);
  }
  return rep;
}

DiagnosticsRow diagnostics(const MacroState& state, const EffectiveTensors& tensors, const MacroConfig& cfg,
                           int picard_iters) {
  DiagnosticsRow row;
  row.t = state.t;
  row.mass1 = integrate(state.grid, state.u1);
  row.mass2 = integrate(state.grid, state.u2);
  row.charge = row.mass1 - row.mass2;
  row.free_energy = free_energy(state, cfg.lambda2);
  row.free_energy_effective = free_energy_effective(state, tensors.eps0);
  row.picard_iters = picard_iters;
  row.loceq_dev = check_local_equilibrium(state, cfg.loceq_window).deviation;
  return row;
}

MacroRun run_macro(const MacroConfig& cfg, const EffectiveTensors& tensors, MacroState init,
                   const std::function<void(const DiagnosticsRow&)>& on_step) {
  if (!(cfg.dt > 0) || !(cfg.T >= cfg.dt)) throw InputError("macro run requires dt > 0 and T >= dt");
  if (init.grid.dim() != cfg.dim || init.grid.n() != cfg.resolution)
    throw InputError("initial state grid does not match the macro configuration");
  MacroRun run;
  auto initial = solve_macro_poisson(init.grid, init.u1, init.u2, tensors.eps0, tensors.porosity, cfg.poisson_tol);
  init.u3 = std::move(initial.u3);
  MacroState state = std::move(init);
  const long steps = std::lround(cfg.T / cfg.dt);
  auto maybe_snapshot = [&](const MacroState& s) {
    for (double ts : cfg.snapshot_times)
      if (std::abs(s.t - ts) <= 0.5 * cfg.dt) run.snapshots.push_back(s);
  };
  maybe_snapshot(state);
  for (long k = 0; k < steps; ++k) {
    auto step = step_macro_pnp(state, tensors, cfg);
    state = std::move(step.state);
    state.t = static_cast<double>(k + 1) * cfg.dt;
    auto row = diagnostics(state, tensors, cfg, step.picard_iterations);
    row.removed_mean_charge = step.removed_mean_charge;
    if (on_step) on_step(row);
    run.rows.push_back(row);
    run.increments.push_back(std::move(step.increments));
    maybe_snapshot(state);
  }
  run.final_state = std::move(state);
  return run;
}

MacroState initial_state(const Grid& grid, const std::string& name, double amplitude) {
  using std::numbers::pi;
  MacroState s(grid);
  for (std::size_t v = 0; v < grid.size(); ++v) {
    const double x1 = grid.center(v, 0);
    double bump = 1.0;
    for (int a = 0; a < grid.dim(); ++a) bump *= std::sin(pi * grid.center(v, a));
    if (name == "zero") {
      continue;
    } else if (name == "eigenmode") {
      s.u1[v] = s.u2[v] = amplitude * bump;
    } else if (name == "asymmetric") {
      s.u1[v] = amplitude * (1.0 + 0.5 * std::sin(pi * x1));
      s.u2[v] = amplitude;
    } else if (name == "dipole") {
      s.u1[v] = amplitude * bump * (1.0 + 0.5 * std::cos(pi * x1));
      s.u2[v] = amplitude * bump * (1.0 - 0.5 * std::cos(pi * x1));
    } else {
      throw InputError("unknown initial state '" + name + "'");
    }
  }
  return s;
}

}  // namespace pnpup
