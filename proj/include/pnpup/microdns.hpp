#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pnpup/cellcorrect.hpp"
#include "pnpup/grid.hpp"
#include "pnpup/macropnp.hpp"
#include "pnpup/transport.hpp"
#include "pnpup/unitcell.hpp"
#include "pnpup/upscale.hpp"

namespace pnpup {

/// Perforated domain Omega = [0,1]^N tiled by 1/s copies of the unit cell per
/// axis; the fine grid has m/s voxels per axis.
struct MicroDomain {
  double s = 1.0;
  int cells_per_axis = 1;
  Grid grid;
  std::vector<char> fluid;  // tiled cell mask
  ScalarField eps;          // eps(x/s)
};

/// Throws InputError when 1/s is not an integer, N > 2, or the fine grid
/// exceeds `max_voxels`.
MicroDomain assemble_micro_domain(const UnitCell& cell, const PermittivityParams& params, double s,
                                  std::size_t max_voxels = std::size_t{1} << 20);

double porosity(const MicroDomain& dom);

/// Densities live on fluid voxels (zero on solid); phi on every voxel, mean zero.
struct MicroState {
  Grid grid;
  std::vector<double> nplus, nminus, phi;
  double t = 0.0;
};

struct MicroConfig {
  double dt = 1e-3;
  double T = 1e-2;
  MacroBoundary bc = MacroBoundary::Academic;
  DriftScheme drift = DriftScheme::Upwind;
  PicardOptions picard;
  double poisson_tol = 1e-10;
};

/// -div(eps(x/s) grad phi) = n+ - n- with homogeneous Neumann data on the
/// outer boundary; the charge is projected to mean zero first.
PoissonResult solve_micro_poisson(const MicroDomain& dom, std::span<const double> nplus,
                                  std::span<const double> nminus, double tol, std::span<const double> warm = {});

TransportModel micro_transport_model(const MicroDomain& dom, const MicroConfig& cfg);

struct MicroStepResult {
  MicroState state;
  int picard_iterations = 0;
  std::vector<double> increments;
};

MicroStepResult step_micro_pnp(const MicroState& state, const MicroDomain& dom, const MicroConfig& cfg);

/// Restricts macro densities to the fluid voxels of the fine grid (bilinear
/// interpolation when the grids differ) and solves the initial potential.
MicroState micro_initial_state(const MicroDomain& dom, const MacroState& macro, const MicroConfig& cfg,
                               MacroBoundary density_bc);

struct MicroRun {
  MicroState final_state;
  std::vector<double> mass1, mass2;  // per accepted step
  std::vector<int> picard_iters;
};

MicroRun run_micro(const MicroDomain& dom, MicroState init, const MicroConfig& cfg);

/// Samples a macro cell-centred field at the fine voxel centres by
/// multilinear interpolation. Ghost values follow bc (mirror for Neumann,
/// odd reflection for Dirichlet).
std::vector<double> interpolate_to(const Grid& coarse, std::span<const double> f, const Grid& fine, Boundary bc);

struct Reconstruction {
  MicroState state;
  bool second_order = false;
  std::vector<std::string> warnings;
};

/// Two-scale reconstruction
///   u^r_s ~ u0^r - s sum_k z_r u0^r eta^k(x/s) d_k u0^3
///   u^3_s ~ u0^3 - s sum_k xi^k(x/s) d_k u0^3 + s^2 sum_kl zeta^kl(x/s) d_kl u0^3
/// with correctors sampled at the wrapped fine coordinate. Missing zeta drops
/// the second-order term with a warning. Passing first_order_only = true
/// drops it as well.
Reconstruction reconstruct_two_scale(const MacroState& macro, const CorrectorSet& correctors,
                                     const EffectiveTensors& tensors, const MicroDomain& dom,
                                     MacroBoundary density_bc, bool first_order_only = false);

/// Macro fields interpolated to the fine grid with no corrector terms.
MicroState macro_only(const MacroState& macro, const MicroDomain& dom, MacroBoundary density_bc);

struct ErrorReport {
  double l2_abs = 0.0, l2_rel = 0.0;
  double linf_abs = 0.0, linf_rel = 0.0;
};

/// Errors of `candidate` against `reference` over the masked voxels
/// (relative values are normalised by the reference norm).
ErrorReport compare_fields(const Grid& grid, std::span<const double> reference, std::span<const double> candidate,
                           std::span<const char> mask = {});
ErrorReport compare_fields(const ScalarField& reference, const ScalarField& candidate,
                           std::span<const char> mask = {});

}  // namespace pnpup
