#include "pnpup/upscale.hpp"

#include <cmath>
#include <sstream>

#include "pnpup/error.hpp"
#include "pnpup/flux_operator.hpp"

namespace pnpup {

namespace {

// Harmonic face coefficient on the +axis face of every voxel.
std::vector<double> face_kappa(const ScalarField& kappa, int axis) {
  const Grid& g = kappa.grid;
  std::vector<double> f(g.size());
  for (std::size_t v = 0; v < g.size(); ++v) {
    const double a = kappa[v], b = kappa[g.wrap_plus(v, axis)];
    f[v] = 2.0 * a * b / (a + b);
  }
  return f;
}

double max_abs(const Eigen::MatrixXd& m) { return m.cwiseAbs().maxCoeff(); }

}  // namespace

PermittivityForms permittivity_forms(const ScalarField& kappa, const std::vector<ScalarField>& xi3) {
  const Grid& g = kappa.grid;
  const int dim = g.dim();
  if (static_cast<int>(xi3.size()) != dim) throw InputError("expected one xi3 field per axis");
  std::vector<std::vector<double>> kf(dim);
  std::vector<std::vector<std::vector<double>>> grad(dim, std::vector<std::vector<double>>(dim));
  for (int a = 0; a < dim; ++a) {
    kf[a] = face_kappa(kappa, a);
    for (int k = 0; k < dim; ++k) grad[a][k] = face_gradient(g, xi3[k].values, a);
  }
  const double inv_count = 1.0 / static_cast<double>(g.size());
  PermittivityForms out{Eigen::MatrixXd::Zero(dim, dim), Eigen::MatrixXd::Zero(dim, dim), 0.0};
  for (int i = 0; i < dim; ++i)
    for (int k = 0; k < dim; ++k) {
      long double flux = 0, energy = 0;
      const double dik = i == k ? 1.0 : 0.0;
      for (std::size_t v = 0; v < g.size(); ++v) {
        flux += kf[i][v] * (dik - grad[i][k][v]);
        for (int a = 0; a < dim; ++a) {
          const double ek = (a == k ? 1.0 : 0.0) - grad[a][k][v];
          const double ei = (a == i ? 1.0 : 0.0) - grad[a][i][v];
          energy += kf[a][v] * ek * ei;
        }
      }
      out.flux(i, k) = static_cast<double>(flux) * inv_count;
      out.energy(i, k) = static_cast<double>(energy) * inv_count;
    }
  out.relative_gap = max_abs(out.flux - out.energy) / max_abs(out.flux);
  return out;
}

Eigen::MatrixXd effective_permittivity(const UnitCell& cell, const ScalarField& kappa,
                                       const std::vector<ScalarField>& xi3) {
  if (!kappa.grid.same_shape(cell.grid())) throw InputError("kappa is not defined on the cell grid");
  const auto forms = permittivity_forms(kappa, xi3);
  if (forms.relative_gap > 1e-8) {
    std::ostringstream msg;
    msg << "flux and energy forms of eps0 disagree (relative gap " << forms.relative_gap << ")";
    throw SolverError(msg.str());
  }
  return forms.flux;
}

Eigen::MatrixXd electro_convection_tensor(const UnitCell& cell, const std::vector<ScalarField>& xi3) {
  const Grid& g = cell.grid();
  const int dim = g.dim();
  if (static_cast<int>(xi3.size()) != dim) throw InputError("expected one xi3 field per axis");
  const double p = porosity(cell);
  const double inv_count = 1.0 / static_cast<double>(g.size());
  Eigen::MatrixXd M = p * Eigen::MatrixXd::Identity(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int k = 0; k < dim; ++k) {
      const auto gr = face_gradient(g, xi3[k].values, i);
      long double s = 0;
      for (std::size_t v = 0; v < g.size(); ++v)
        if (cell.is_fluid(v)) s += 0.5 * (gr[v] + gr[g.wrap_minus(v, i)]);
      M(i, k) -= static_cast<double>(s) * inv_count;
    }
  return M;
}

Eigen::MatrixXd diffusion_shape_tensor(const UnitCell& cell, const std::vector<ScalarField>& eta) {
  const Grid& g = cell.grid();
  const int dim = g.dim();
  if (static_cast<int>(eta.size()) != dim) throw InputError("expected one eta field per axis");
  const double inv_count = 1.0 / static_cast<double>(g.size());
  Eigen::MatrixXd H = Eigen::MatrixXd::Zero(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int k = 0; k < dim; ++k) {
      const auto gr = face_gradient(g, eta[k].values, i);
      long double s = 0;
      // only fluid-fluid faces carry a gradient of eta
      for (std::size_t v = 0; v < g.size(); ++v)
        if (cell.is_fluid(v) && cell.is_fluid(g.wrap_plus(v, i))) s += gr[v];
      H(i, k) = static_cast<double>(s) * inv_count;
    }
  return H;
}

std::pair<double, double> voigt_reuss_bounds(const ScalarField& kappa) {
  long double inv = 0, arith = 0;
  for (double k : kappa.values) {
    inv += 1.0 / k;
    arith += k;
  }
  const double n = static_cast<double>(kappa.size());
  return {static_cast<double>(n / inv), static_cast<double>(arith / n)};
}

TensorDiagnostics diagnose(const EffectiveTensors& tensors, const ScalarField& kappa) {
  TensorDiagnostics d;
  const auto& e = tensors.eps0;
  d.symmetry_defect = max_abs(e - e.transpose()) / max_abs(e);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (e + e.transpose()));
  d.eig_min = es.eigenvalues().minCoeff();
  d.eig_max = es.eigenvalues().maxCoeff();
  std::tie(d.reuss, d.voigt) = voigt_reuss_bounds(kappa);
  d.hhat_asymmetry = max_abs(tensors.Hhat - tensors.Hhat.transpose());
  return d;
}

HomogenizationResult homogenize(const UnitCell& cell, const PermittivityParams& params, const SolverOptions& opts,
                                bool second_order) {
  HomogenizationResult out;
  out.kappa = permittivity_field(cell, params);
  auto& c = out.correctors;
  for (auto& s : solve_potential_corrector(cell, out.kappa, opts)) {
    c.xi3.push_back(std::move(s.field));
    c.xi3_residuals.push_back(s.residual);
  }
  for (auto& s : solve_density_corrector_shape(cell, c.xi3, opts)) {
    c.eta.push_back(std::move(s.field));
    c.eta_residuals.push_back(s.residual);
  }
  out.forms = permittivity_forms(out.kappa, c.xi3);
  auto& t = out.tensors;
  t.dim = cell.dim();
  t.porosity = porosity(cell);
  t.eps0 = effective_permittivity(cell, out.kappa, c.xi3);
  t.M = electro_convection_tensor(cell, c.xi3);
  t.Hhat = diffusion_shape_tensor(cell, c.eta);
  t.provenance = {cell.geometry_hash(), to_string(cell.spec().kind), cell.resolution(), opts.tol, params.lambda,
                  params.alpha};
  if (second_order) {
    for (auto& s : solve_second_order_potential_corrector(cell, out.kappa, c.xi3, t.eps0, opts)) {
      c.zeta3.push_back(std::move(s.field));
      c.zeta3_residuals.push_back(s.residual);
    }
  }
  return out;
}

MaterialTensorReport material_tensor_report(const EffectiveTensors& tensors, double u1, double u2) {
  const int n = tensors.dim;
  MaterialTensorReport r;
  r.dim = n;
  r.porosity = tensors.porosity;
  r.u1 = u1;
  r.u2 = u2;
  r.eps0 = tensors.eps0;
  r.M = tensors.M;
  r.Hhat = tensors.Hhat;
  r.blocks = Eigen::MatrixXd::Zero(3 * n, 3 * n);
  const Eigen::MatrixXd pI = tensors.porosity * Eigen::MatrixXd::Identity(n, n);
  const double u[2] = {u1, u2};
  for (int s = 0; s < 2; ++s) {
    r.blocks.block(s * n, s * n, n, n) = pI;
    r.blocks.block(s * n, 2 * n, n, n) = -tensors.diffusion_tensor(kCharge[s], u[s]) + kCharge[s] * u[s] * tensors.M;
  }
  r.blocks.block(2 * n, 2 * n, n, n) = tensors.eps0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (tensors.eps0 + tensors.eps0.transpose()));
  r.eps0_eigenvalues = es.eigenvalues();
  r.drift_block_norm1 = r.block(0, 2).norm();
  r.drift_block_norm2 = r.block(1, 2).norm();
  return r;
}

}  // namespace pnpup
