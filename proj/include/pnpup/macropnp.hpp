#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "pnpup/grid.hpp"
#include "pnpup/transport.hpp"
#include "pnpup/upscale.hpp"

namespace pnpup {

/// Density boundary conditions of the upscaled run. Academic: homogeneous
/// Dirichlet densities, homogeneous Neumann potential. Neumann: no flux for
/// everything (conservation tests).
enum class MacroBoundary { Academic, Neumann };

struct MacroConfig {
  int dim = 2;
  int resolution = 64;
  double dt = 1e-3;
  double T = 1e-2;
  MacroBoundary bc = MacroBoundary::Academic;
  DriftScheme drift = DriftScheme::Upwind;
  PicardOptions picard;
  double poisson_tol = 1e-10;
  double lambda2 = 1.0;       // coefficient of the classical free energy
  int loceq_window = 4;
  std::vector<double> snapshot_times;
};

/// u1 = n+, u2 = n-, u3 = potential (mean zero) on the macro grid.
struct MacroState {
  Grid grid;
  std::vector<double> u1, u2, u3;
  double t = 0.0;

  MacroState() = default;
  explicit MacroState(const Grid& g) : grid(g), u1(g.size(), 0.0), u2(g.size(), 0.0), u3(g.size(), 0.0) {}
};

struct PoissonResult {
  std::vector<double> u3;
  double removed_mean_charge = 0.0;
  int iterations = 0;
  double residual = 0.0;
};

/// -div(eps0 grad u3) = p (u1 - u2) with homogeneous Neumann data; the source
/// is projected to mean zero first. Throws SolverError for a non-SPD eps0.
/// `warm` (optional) seeds the iteration.
PoissonResult solve_macro_poisson(const Grid& grid, std::span<const double> u1, std::span<const double> u2,
                                  const Eigen::MatrixXd& eps0, double p, double tol,
                                  std::span<const double> warm = {});

/// Transport model of the upscaled densities: capacity = diffusivity = p and
/// drift tensor M - Hhat (D^r = z_r u^r Hhat folded into the drift).
TransportModel macro_transport_model(const EffectiveTensors& tensors, const MacroConfig& cfg);

struct MacroStepResult {
  MacroState state;
  int picard_iterations = 0;
  std::vector<double> increments;
  double removed_mean_charge = 0.0;
};

MacroStepResult step_macro_pnp(const MacroState& state, const EffectiveTensors& tensors, const MacroConfig& cfg);

/// F = int sum_r u^r (log u^r - 1) + (u1 - u2) u3 - lambda^2 |grad u3|^2, with 0 log 0 = 0.
double free_energy(const MacroState& state, double lambda2, Boundary potential_bc = Boundary::Neumann);

/// Same entropy and interaction terms, field energy grad u3 . eps0 grad u3.
double free_energy_effective(const MacroState& state, const Eigen::MatrixXd& eps0);

struct LocalEquilibriumReport {
  double deviation = 0.0;  // max over species and blocks of (max mu - min mu)
  int skipped_blocks = 0;  // blocks containing a non-positive density
  int blocks = 0;
};

/// mu^r = log u^r + z_r u3 on window^N voxel blocks.
LocalEquilibriumReport check_local_equilibrium(const MacroState& state, int window);

struct DiagnosticsRow {
  double t = 0.0;
  double mass1 = 0.0, mass2 = 0.0, charge = 0.0;
  double free_energy = 0.0;
  double free_energy_effective = 0.0;
  int picard_iters = 0;
  double loceq_dev = 0.0;
  double removed_mean_charge = 0.0;
};

DiagnosticsRow diagnostics(const MacroState& state, const EffectiveTensors& tensors, const MacroConfig& cfg,
                           int picard_iters);

struct MacroRun {
  MacroState final_state;
  std::vector<DiagnosticsRow> rows;  // one per accepted step
  std::vector<MacroState> snapshots;
  std::vector<std::vector<double>> increments;  // Picard increments per step
};

/// Solves the initial potential, then steps from t = 0 to T.
MacroRun run_macro(const MacroConfig& cfg, const EffectiveTensors& tensors, MacroState init,
                   const std::function<void(const DiagnosticsRow&)>& on_step = {});

/// Named initial states used by the tools and tests:
///   zero, eigenmode (u1 = u2 = prod sin(pi x_a)),
///   asymmetric (u1 = 1 + 0.5 sin(pi x_1), u2 = 1),
///   dipole (u1,u2 = prod sin(pi x_a) * (1 +- 0.5 cos(pi x_1))).
MacroState initial_state(const Grid& grid, const std::string& name, double amplitude = 1.0);

}  // namespace pnpup
