#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "pnpup/cellcorrect.hpp"
#include "pnpup/unitcell.hpp"

namespace pnpup {

struct TensorProvenance {
  std::uint64_t geometry_hash = 0;
  std::string cell_kind;
  int resolution = 0;
  double solver_tol = 0.0;
  double lambda = 0.0;
  double alpha = 0.0;
};

/// Effective coefficients of the upscaled system. The concentration-dependent
/// tensor D^r(t,x) factorises as z_r u^r(t,x) Hhat.
struct EffectiveTensors {
  int dim = 0;
  double porosity = 1.0;
  Eigen::MatrixXd eps0;
  Eigen::MatrixXd M;
  Eigen::MatrixXd Hhat;
  TensorProvenance provenance;

  Eigen::MatrixXd diffusion_tensor(int z, double u) const { return static_cast<double>(z) * u * Hhat; }
};

struct PermittivityForms {
  Eigen::MatrixXd flux;    // (1/|Y|) sum over i-faces of kappa (delta_ik - d_i xi^k)
  Eigen::MatrixXd energy;  // (1/|Y|) sum over faces of kappa (e_k - grad xi^k).(e_i - grad xi^i)
  double relative_gap = 0.0;
};

PermittivityForms permittivity_forms(const ScalarField& kappa, const std::vector<ScalarField>& xi3);

/// Flux-form eps0. Throws SolverError when flux and energy forms differ by
/// more than 1e-8 relative.
Eigen::MatrixXd effective_permittivity(const UnitCell& cell, const ScalarField& kappa,
                                       const std::vector<ScalarField>& xi3);

Eigen::MatrixXd electro_convection_tensor(const UnitCell& cell, const std::vector<ScalarField>& xi3);

Eigen::MatrixXd diffusion_shape_tensor(const UnitCell& cell, const std::vector<ScalarField>& eta);

/// Reuss (harmonic) and Voigt (arithmetic) means of kappa.
std::pair<double, double> voigt_reuss_bounds(const ScalarField& kappa);

struct TensorDiagnostics {
  double symmetry_defect = 0.0;  // max|eps0 - eps0^T| / max|eps0|
  double eig_min = 0.0, eig_max = 0.0;
  double reuss = 0.0, voigt = 0.0;
  double hhat_asymmetry = 0.0;  // max|Hhat - Hhat^T|, reported only
  bool within_bounds(double slack) const noexcept { return eig_min >= reuss - slack && eig_max <= voigt + slack; }
};

TensorDiagnostics diagnose(const EffectiveTensors& tensors, const ScalarField& kappa);

struct HomogenizationResult {
  ScalarField kappa;
  CorrectorSet correctors;
  EffectiveTensors tensors;
  PermittivityForms forms;
};

/// Full cell pipeline: kappa, xi3, eta, eps0, M, Hhat and optionally zeta3.
HomogenizationResult homogenize(const UnitCell& cell, const PermittivityParams& params, const SolverOptions& opts,
                                bool second_order = true);

/// Block material tensor of the upscaled system at a sampled state (u1, u2):
///   [ p I   0     -D^1 + z_1 u1 M ]
///   [ 0     p I   -D^2 + z_2 u2 M ]
///   [ 0     0      eps0           ]
struct MaterialTensorReport {
  int dim = 0;
  double porosity = 0.0, u1 = 0.0, u2 = 0.0;
  Eigen::MatrixXd eps0, M, Hhat;
  Eigen::MatrixXd blocks;  // 3N x 3N
  Eigen::VectorXd eps0_eigenvalues;
  double drift_block_norm1 = 0.0, drift_block_norm2 = 0.0;

  Eigen::MatrixXd block(int row, int col) const { return blocks.block(row * dim, col * dim, dim, dim); }
};

MaterialTensorReport material_tensor_report(const EffectiveTensors& tensors, double u1, double u2);

inline constexpr int kCharge[2] = {+1, -1};

}  // namespace pnpup
