#pragma once

#include <span>

#include "pnpup/flux_operator.hpp"

namespace pnpup {

struct CgOptions {
  double tol = 1e-10;   // relative residual ||b - Ax|| / ||b||
  int max_iter = 1000;
  /// Keep iterates mean-zero over the active voxels (singular periodic or
  /// pure-Neumann operators).
  bool project_mean = false;
};

struct CgResult {
  int iterations = 0;
  double residual = 0.0;  // true relative residual at exit
  bool converged = false;
};

/// Jacobi-preconditioned conjugate gradients. x holds the initial guess on
/// entry. Inactive voxels of A are held at zero.
CgResult conjugate_gradient(const FluxOperator& A, std::span<const double> b, std::span<double> x,
                            const CgOptions& opts);

}  // namespace pnpup
