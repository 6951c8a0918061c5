#pragma once

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "pnpup/grid.hpp"
#include "pnpup/unitcell.hpp"

namespace pnpup {

struct SolverOptions {
  double tol = 1e-10;  // relative residual
  int max_iter = 0;    // 0: 50 * m
  int threads = 1;     // independent corrector solves run concurrently

  int iteration_cap(int m) const noexcept { return max_iter > 0 ? max_iter : 50 * m; }
};

/// -div(coefficient grad u) = rhs on the periodic cell, in strong form
/// (rhs holds per-voxel source values). With a domain mask the problem lives
/// on the masked voxels only and faces to unmasked voxels carry no flux.
struct PeriodicEllipticProblem {
  ScalarField coefficient;
  std::vector<double> rhs;
  std::optional<std::vector<char>> domain_mask;
};

struct EllipticSolution {
  ScalarField field;
  double residual = 0.0;
  int iterations = 0;
};

/// Mean-zero solution of the periodic problem. Throws SolverError with
/// "singular system incompatible" when the rhs does not sum to zero, or when
/// the iteration cap is reached.
EllipticSolution solve_periodic_elliptic(const PeriodicEllipticProblem& problem, const SolverOptions& opts);

/// Fine-grained version of the compatibility check: |sum rhs| / ||rhs||.
double rhs_incompatibility(std::span<const double> rhs, std::span<const char> mask = {});

struct CorrectorSet {
  std::vector<ScalarField> xi3;    // N fields on Y
  std::vector<ScalarField> eta;    // N fields on Y^s, zero on solid voxels
  std::vector<ScalarField> zeta3;  // N*N fields (k*N + l) on Y, empty if not computed
  std::vector<double> xi3_residuals, eta_residuals, zeta3_residuals;

  bool has_zeta() const noexcept { return !zeta3.empty(); }
  const ScalarField& zeta(int k, int l) const { return zeta3.at(static_cast<std::size_t>(k * static_cast<int>(xi3.size()) + l)); }
};

/// Source of the potential cell problem div(kappa (grad xi - e_j)) = 0,
/// assembled face-consistently: (kappa_{j-} - kappa_{j+}) / h.
std::vector<double> potential_corrector_rhs(const ScalarField& kappa, int j);

std::vector<EllipticSolution> solve_potential_corrector(const UnitCell& cell, const ScalarField& kappa,
                                                        const SolverOptions& opts);

/// Source of the fluid-restricted problem (grad eta, grad phi)_{Y^s} = -(grad xi, grad phi)_{Y^s}.
std::vector<double> density_corrector_rhs(const UnitCell& cell, const ScalarField& xi);

/// Geometry factor eta^k of the density corrector xi^{r_k} = z_r u0^r eta^k.
/// Throws InputError when the fluid region is not connected.
std::vector<EllipticSolution> solve_density_corrector_shape(const UnitCell& cell,
                                                            const std::vector<ScalarField>& xi3,
                                                            const SolverOptions& opts);

/// Source for zeta^{3_kl}:
///   -eps0_kl - d_k(kappa xi^l) - kappa d_k(xi^l - y_l)
/// with face-averaged quadrature; sums to zero when eps0 is the flux-form
/// tensor of the same xi.
std::vector<double> second_order_corrector_rhs(const ScalarField& kappa, const std::vector<ScalarField>& xi3,
                                               const Eigen::MatrixXd& eps0, int k, int l);

/// N*N fields, index k*N + l. Throws SolverError when a source is
/// incompatible beyond 1e-8 relative (inconsistent eps0).
std::vector<EllipticSolution> solve_second_order_potential_corrector(const UnitCell& cell,
                                                                     const ScalarField& kappa,
                                                                     const std::vector<ScalarField>& xi3,
                                                                     const Eigen::MatrixXd& eps0,
                                                                     const SolverOptions& opts);

}  // namespace pnpup
