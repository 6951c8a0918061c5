#include "pnpup/krylov.hpp"

#include <cmath>
#include <string>
#include <vector>

#include "pnpup/error.hpp"

namespace pnpup {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

CgResult conjugate_gradient(const FluxOperator& A, std::span<const double> b, std::span<double> x,
                            const CgOptions& opts) {
  const std::size_t n = A.grid().size();
  if (b.size() != n || x.size() != n) throw InputError("conjugate_gradient: vector size mismatch");
  const auto active = A.active();
  auto project = [&](std::span<double> v) {
    if (!active.empty())
      for (std::size_t i = 0; i < n; ++i)
        if (!active[i]) v[i] = 0.0;
    if (opts.project_mean) subtract_mean(v, active);
  };

  std::vector<double> rhs(b.begin(), b.end());
  project(rhs);
  project(x);
  const double bnorm = std::sqrt(dot(rhs, rhs));
  CgResult result;
  if (bnorm == 0.0) {
    std::fill(x.begin(), x.end(), 0.0);
    result.converged = true;
    return result;
  }

  std::vector<double> inv_diag = A.diagonal();
  for (auto& d : inv_diag) d = d > 0 ? 1.0 / d : 1.0;

  std::vector<double> r(n), z(n), p(n), q(n);
  auto true_residual = [&]() {
    A.apply(x, q);
    for (std::size_t i = 0; i < n; ++i) r[i] = rhs[i] - q[i];
    project(r);
    return std::sqrt(dot(r, r)) / bnorm;
  };

  double rel = true_residual();
  int it = 0;
  while (rel > opts.tol && it < opts.max_iter) {
    for (std::size_t i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
    project(z);
    double rz = dot(r, z);
    p = z;
    while (it < opts.max_iter) {
      ++it;
      A.apply(p, q);
      if (!active.empty())
        for (std::size_t i = 0; i < n; ++i)
          if (!active[i]) q[i] = 0.0;
      const double pq = dot(p, q);
      if (!(pq > 0.0)) throw SolverError("conjugate gradient breakdown: operator is not positive definite");
      const double alpha = rz / pq;
      for (std::size_t i = 0; i < n; ++i) {
        x[i] += alpha * p[i];
        r[i] -= alpha * q[i];
      }
      if (std::sqrt(dot(r, r)) / bnorm <= 0.5 * opts.tol) break;
      for (std::size_t i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
      project(z);
      const double rz_new = dot(r, z);
      const double beta = rz_new / rz;
      rz = rz_new;
      for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    }
    project(x);
    // Restart from the true residual.
    rel = true_residual();
  }
  result.iterations = it;
  result.residual = rel;
  result.converged = rel <= opts.tol;
  return result;
}

}  // namespace pnpup
