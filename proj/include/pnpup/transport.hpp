#pragma once

#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "pnpup/flux_operator.hpp"
#include "pnpup/grid.hpp"

namespace pnpup {

enum class DriftScheme { Upwind, Central };

/// Two-species Nernst-Planck transport
///
///   capacity d_t u - diffusivity Lap u = div(z u W grad phi)
///
/// on an (optionally masked) grid. Diffusion is implicit; the drift is
/// evaluated at the lagged Picard iterate.
struct TransportModel {
  Grid grid;
  Boundary bc = Boundary::Dirichlet;  // densities: Dirichlet (zero) or Neumann (no flux)
  Boundary potential_bc = Boundary::Neumann;
  std::vector<char> active;           // empty: every voxel carries density
  DriftScheme scheme = DriftScheme::Upwind;
  double capacity = 1.0;
  double diffusivity = 1.0;
  Eigen::MatrixXd drift;  // W (N x N)
};

/// Discrete div(z u W grad phi) in conservative face-flux form. Boundary
/// faces and faces touching an inactive voxel carry no drift flux.
std::vector<double> drift_divergence(const TransportModel& model, std::span<const double> u,
                                     std::span<const double> phi, int z);

/// capacity/dt I + diffusivity (-Lap) with the model's boundary and mask.
FluxOperator implicit_diffusion_operator(const TransportModel& model, double dt);

struct PicardOptions {
  double tol = 1e-10;       // on max_r ||u^r - v^r||_{L2}
  int max_iter = 50;
  double linear_tol = 1e-12;
  int linear_max_iter = 5000;
  double negativity_floor = -1e-12;
};

/// Solves for phi given (u1, u2); `phi` holds the warm start on entry.
using PotentialSolve = std::function<void(std::span<const double> u1, std::span<const double> u2,
                                          std::vector<double>& phi)>;

struct PicardStep {
  std::vector<double> u1, u2, phi;
  int iterations = 0;
  std::vector<double> increments;
};

/// One implicit-diffusion / lagged-drift time step with Picard iteration to a
/// fixed point:
///   phi <- potential(v1, v2)
///   u^r <- (cap/dt + diff A)^{-1} (cap/dt u^r_old + div(z_r v^r W grad phi))
/// until max_r ||u^r - v^r|| <= tol. The returned phi is re-solved from the
/// accepted densities.
PicardStep picard_step(const TransportModel& model, const FluxOperator& implicit_op, double dt,
                       std::span<const double> u1_old, std::span<const double> u2_old,
                       std::span<const double> phi_guess, const PotentialSolve& potential,
                       const PicardOptions& opts);

}  // namespace pnpup
