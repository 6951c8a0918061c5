#include "pnpup/transport.hpp"

#include <algorithm>
#include <sstream>

#include "pnpup/error.hpp"
#include "pnpup/krylov.hpp"

namespace pnpup {

std::vector<double> drift_divergence(const TransportModel& model, std::span<const double> u,
                                     std::span<const double> phi, int z) {
  const Grid& g = model.grid;
  const int dim = g.dim();
  const double inv_h = 1.0 / g.spacing();
  auto active = [&](std::size_t v) { return model.active.empty() || model.active[v] != 0; };

  std::vector<std::vector<double>> central(dim);
  const bool anisotropic = (model.drift - Eigen::MatrixXd(model.drift.diagonal().asDiagonal())).cwiseAbs().maxCoeff() > 0;
  if (anisotropic)
    for (int b = 0; b < dim; ++b) central[b] = central_gradient(g, phi, b, model.potential_bc);

  std::vector<double> out(g.size(), 0.0);
  for (int a = 0; a < dim; ++a) {
    for (std::size_t v = 0; v < g.size(); ++v) {
      if (g.coord(v, a) == g.n() - 1 && model.bc != Boundary::Periodic) continue;
      const std::size_t w = g.wrap_plus(v, a);
      if (!active(v) || !active(w)) continue;
      double grad = model.drift(a, a) * (phi[w] - phi[v]) * inv_h;
      if (anisotropic)
        for (int b = 0; b < dim; ++b)
          if (b != a) grad += model.drift(a, b) * 0.5 * (central[b][v] + central[b][w]);
      const double velocity = -z * grad;
      double face_u;
      if (model.scheme == DriftScheme::Upwind)
        face_u = velocity >= 0 ? u[v] : u[w];
      else
        face_u = 0.5 * (u[v] + u[w]);
      const double flux = velocity * face_u * inv_h;
      out[v] -= flux;
      out[w] += flux;
    }
  }
  return out;
}

FluxOperator implicit_diffusion_operator(const TransportModel& model, double dt) {
  const std::vector<double> coef(model.grid.size(), model.diffusivity);
  auto op = FluxOperator::from_voxel_coefficient(model.grid, coef, model.bc, model.active);
  op.add_shift(model.capacity / dt);
  return op;
}

PicardStep picard_step(const TransportModel& model, const FluxOperator& implicit_op, double dt,
                       std::span<const double> u1_old, std::span<const double> u2_old,
                       std::span<const double> phi_guess, const PotentialSolve& potential,
                       const PicardOptions& opts) {
  const std::size_t n = model.grid.size();
  const std::span<const double> old[2] = {u1_old, u2_old};
  PicardStep step;
  std::vector<double> v[2] = {{u1_old.begin(), u1_old.end()}, {u2_old.begin(), u2_old.end()}};
  std::vector<double> u[2];
  step.phi.assign(phi_guess.begin(), phi_guess.end());
  const double cap_dt = model.capacity / dt;
  const CgOptions cg{opts.linear_tol, opts.linear_max_iter, false};

  bool converged = false;
  for (int it = 1; it <= opts.max_iter && !converged; ++it) {
    potential(v[0], v[1], step.phi);
    double increment = 0.0;
    for (int r = 0; r < 2; ++r) {
      auto rhs = drift_divergence(model, v[r], step.phi, r == 0 ? +1 : -1);
      for (std::size_t i = 0; i < n; ++i) rhs[i] += cap_dt * old[r][i];
      u[r] = v[r];
      const auto res = conjugate_gradient(implicit_op, rhs, u[r], cg);
      if (!res.converged) {
        std::ostringstream msg;
        msg << "implicit diffusion solve did not converge (relative residual " << res.residual << ")";
        throw SolverError(msg.str());
      }
      std::vector<double> diff(n);
      for (std::size_t i = 0; i < n; ++i) diff[i] = u[r][i] - v[r][i];
      increment = std::max(increment, l2_norm(model.grid, diff));
    }
    step.iterations = it;
    step.increments.push_back(increment);
    v[0] = u[0];
    v[1] = u[1];
    converged = increment <= opts.tol;
  }
  if (!converged) {
    std::ostringstream msg;
    msg << "Picard iteration did not converge in " << opts.max_iter << " iterations (last increment "
        << step.increments.back() << "); reduce the time step";
    throw SolverError(msg.str());
  }
  if (model.scheme == DriftScheme::Upwind) {
    for (int r = 0; r < 2; ++r) {
      const double lo = *std::min_element(v[r].begin(), v[r].end());
      if (lo < opts.negativity_floor) {
        std::ostringstream msg;
        msg << "density " << r + 1 << " became negative (" << lo << ") with the upwind scheme; reduce the time step";
        throw SolverError(msg.str());
      }
    }
  }
  potential(v[0], v[1], step.phi);
  step.u1 = std::move(v[0]);
  step.u2 = std::move(v[1]);
  return step;
}

}  // namespace pnpup
