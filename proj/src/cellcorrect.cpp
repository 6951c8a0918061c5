#include "pnpup/cellcorrect.hpp"

#include <cmath>
#include <sstream>

#include "parallel.hpp"
#include "pnpup/error.hpp"
#include "pnpup/flux_operator.hpp"
#include "pnpup/krylov.hpp"

namespace pnpup {

namespace {

inline double harmonic(double a, double b) { return 2.0 * a * b / (a + b); }

void check_coefficient(const ScalarField& c) {
  for (double x : c.values)
    if (!(x > 0.0) || !std::isfinite(x))
      throw InputError("elliptic coefficient must be finite and strictly positive");
}

}  // namespace

double rhs_incompatibility(std::span<const double> rhs, std::span<const char> mask) {
  long double sum = 0, sq = 0;
  for (std::size_t i = 0; i < rhs.size(); ++i) {
    if (!mask.empty() && !mask[i]) continue;
    sum += rhs[i];
    sq += static_cast<long double>(rhs[i]) * rhs[i];
  }
  if (sq == 0) return 0.0;
  return static_cast<double>(std::abs(sum) / std::sqrt(sq));
}

EllipticSolution solve_periodic_elliptic(const PeriodicEllipticProblem& problem, const SolverOptions& opts) {
  const Grid& grid = problem.coefficient.grid;
  if (problem.rhs.size() != grid.size()) throw InputError("rhs size does not match the coefficient grid");
  if (!(opts.tol > 0.0)) throw InputError("solver tolerance must be positive");
  check_coefficient(problem.coefficient);

  std::vector<char> mask;
  if (problem.domain_mask) {
    mask = *problem.domain_mask;
    if (mask.size() != grid.size()) throw InputError("domain mask size does not match the coefficient grid");
  }
  const double incompat = rhs_incompatibility(problem.rhs, mask);
  if (incompat > 1e-10) {
    std::ostringstream msg;
    msg << "singular system incompatible: |sum rhs| / ||rhs|| = " << incompat;
    throw SolverError(msg.str());
  }

  const auto op = FluxOperator::from_voxel_coefficient(grid, problem.coefficient.values, Boundary::Periodic, mask);
  std::vector<double> rhs = problem.rhs;
  subtract_mean(rhs, mask);
  if (!mask.empty())
    for (std::size_t v = 0; v < rhs.size(); ++v)
      if (!mask[v]) rhs[v] = 0.0;

  EllipticSolution out{ScalarField(grid), 0.0, 0};
  CgOptions cg{opts.tol, opts.iteration_cap(grid.n()), true};
  const auto res = conjugate_gradient(op, rhs, out.field.values, cg);
  if (!res.converged) {
    std::ostringstream msg;
    msg << "periodic elliptic solve hit the iteration cap (" << cg.max_iter
        << ") with relative residual " << res.residual;
    throw SolverError(msg.str());
  }
  subtract_mean(out.field.values, mask);
  out.residual = res.residual;
  out.iterations = res.iterations;
  return out;
}

std::vector<double> potential_corrector_rhs(const ScalarField& kappa, int j) {
  const Grid& g = kappa.grid;
  const double inv_h = 1.0 / g.spacing();
  std::vector<double> b(g.size());
  for (std::size_t v = 0; v < g.size(); ++v) {
    const double k_minus = harmonic(kappa[g.wrap_minus(v, j)], kappa[v]);
    const double k_plus = harmonic(kappa[v], kappa[g.wrap_plus(v, j)]);
    b[v] = (k_minus - k_plus) * inv_h;
  }
  return b;
}

std::vector<EllipticSolution> solve_potential_corrector(const UnitCell& cell, const ScalarField& kappa,
                                                        const SolverOptions& opts) {
  if (!kappa.grid.same_shape(cell.grid())) throw InputError("kappa is not defined on the cell grid");
  return detail::parallel_map(cell.dim(), opts.threads, [&](int j) {
    return solve_periodic_elliptic({kappa, potential_corrector_rhs(kappa, j), std::nullopt}, opts);
  });
}

std::vector<double> density_corrector_rhs(const UnitCell& cell, const ScalarField& xi) {
  const Grid& g = cell.grid();
  const std::vector<double> ones(g.size(), 1.0);
  const auto op = FluxOperator::from_voxel_coefficient(g, ones, Boundary::Periodic, cell.fluid_mask());
  std::vector<double> x(xi.values);
  for (std::size_t v = 0; v < g.size(); ++v)
    if (!cell.is_fluid(v)) x[v] = 0.0;
  std::vector<double> b(g.size());
  op.apply(x, b);
  for (auto& e : b) e = -e;
  return b;
}

std::vector<EllipticSolution> solve_density_corrector_shape(const UnitCell& cell,
                                                            const std::vector<ScalarField>& xi3,
                                                            const SolverOptions& opts) {
  if (static_cast<int>(xi3.size()) != cell.dim()) throw InputError("expected one xi3 field per axis");
  const int components = fluid_components(cell);
  if (components != 1)
    throw InputError("fluid region is not connected across the periodic cell (" + std::to_string(components) +
                     " components)");
  const ScalarField ones(cell.grid(), 1.0);
  return detail::parallel_map(cell.dim(), opts.threads, [&](int k) {
    return solve_periodic_elliptic({ones, density_corrector_rhs(cell, xi3[k]), cell.fluid_mask()}, opts);
  });
}

std::vector<double> second_order_corrector_rhs(const ScalarField& kappa, const std::vector<ScalarField>& xi3,
                                               const Eigen::MatrixXd& eps0, int k, int l) {
  const Grid& g = kappa.grid;
  const double inv_h = 1.0 / g.spacing();
  const auto& xi = xi3.at(l).values;
  const double delta = k == l ? 1.0 : 0.0;
  std::vector<double> b(g.size());
  for (std::size_t v = 0; v < g.size(); ++v) {
    const std::size_t vp = g.wrap_plus(v, k), vm = g.wrap_minus(v, k);
    const double k_plus = harmonic(kappa[v], kappa[vp]);
    const double k_minus = harmonic(kappa[vm], kappa[v]);
    // d_k(kappa xi^l) as a face-flux difference
    const double div_term = (k_plus * 0.5 * (xi[v] + xi[vp]) - k_minus * 0.5 * (xi[vm] + xi[v])) * inv_h;
    // kappa d_k(xi^l - y_l), averaged over the two k-faces
    const double grad_plus = (xi[vp] - xi[v]) * inv_h - delta;
    const double grad_minus = (xi[v] - xi[vm]) * inv_h - delta;
    const double grad_term = 0.5 * (k_plus * grad_plus + k_minus * grad_minus);
    b[v] = -eps0(k, l) - div_term - grad_term;
  }
  return b;
}

std::vector<EllipticSolution> solve_second_order_potential_corrector(const UnitCell& cell,
                                                                     const ScalarField& kappa,
                                                                     const std::vector<ScalarField>& xi3,
                                                                     const Eigen::MatrixXd& eps0,
                                                                     const SolverOptions& opts) {
  const int dim = cell.dim();
  if (static_cast<int>(xi3.size()) != dim) throw InputError("expected one xi3 field per axis");
  if (eps0.rows() != dim || eps0.cols() != dim) throw InputError("eps0 shape does not match the cell dimension");
  return detail::parallel_map(dim * dim, opts.threads, [&](int idx) {
    const int k = idx / dim, l = idx % dim;
    auto rhs = second_order_corrector_rhs(kappa, xi3, eps0, k, l);
    const double incompat = rhs_incompatibility(rhs);
    if (incompat > 1e-8) {
      std::ostringstream msg;
      msg << "singular system incompatible for zeta3_" << k << l << ": |sum rhs| / ||rhs|| = " << incompat
          << " (eps0 inconsistent with the potential correctors)";
      throw SolverError(msg.str());
    }
    subtract_mean(rhs);
    return solve_periodic_elliptic({kappa, std::move(rhs), std::nullopt}, opts);
  });
}

}  // namespace pnpup
