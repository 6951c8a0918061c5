#include "oracles.hpp"

#include <cmath>
#include <stdexcept>

namespace oracle {

namespace {

void poisson_1d(const std::vector<double>& u1, const std::vector<double>& u2, double h, std::vector<double>& phi) {
  const std::size_t n = u1.size();
  double mean_charge = 0;
  for (std::size_t i = 0; i < n; ++i) mean_charge += u1[i] - u2[i];
  mean_charge /= static_cast<double>(n);
  // -(phi_{i+1} - 2 phi_i + phi_{i-1}) / h^2 = c_i with zero boundary flux:
  // F_{i+1/2} = F_{i-1/2} + h c_i, phi_{i+1} = phi_i - h F_{i+1/2}.
  phi.assign(n, 0.0);
  double flux = 0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    flux += h * (u1[i] - u2[i] - mean_charge);
    phi[i + 1] = phi[i] - h * flux;
  }
  double mean = 0;
  for (double p : phi) mean += p;
  mean /= static_cast<double>(n);
  for (double& p : phi) p -= mean;
}

}  // namespace

Pnp1D explicit_pnp_1d(int cells, double T, double dt_max, const std::function<double(double)>& u1_0,
                      const std::function<double(double)>& u2_0) {
  if (cells < 2 || !(T > 0) || !(dt_max > 0)) throw std::invalid_argument("explicit_pnp_1d: bad arguments");
  const double h = 1.0 / cells;
  Pnp1D out;
  out.u1.resize(cells);
  out.u2.resize(cells);
  for (int i = 0; i < cells; ++i) {
    out.u1[i] = u1_0((i + 0.5) * h);
    out.u2[i] = u2_0((i + 0.5) * h);
  }
  const double dt_cap = std::min(dt_max, 0.2 * h * h);
  out.steps = static_cast<long>(std::ceil(T / dt_cap - 1e-9));
  out.dt = T / static_cast<double>(out.steps);

  std::vector<double> f1(cells + 1), f2(cells + 1);
  for (long k = 0; k < out.steps; ++k) {
    poisson_1d(out.u1, out.u2, h, out.phi);
    f1[0] = f2[0] = f1[cells] = f2[cells] = 0.0;
    for (int i = 0; i + 1 < cells; ++i) {
      const double dphi = (out.phi[i + 1] - out.phi[i]) / h;
      const double a1 = 0.5 * (out.u1[i] + out.u1[i + 1]), a2 = 0.5 * (out.u2[i] + out.u2[i + 1]);
      f1[i + 1] = (out.u1[i + 1] - out.u1[i]) / h + a1 * dphi;
      f2[i + 1] = (out.u2[i + 1] - out.u2[i]) / h - a2 * dphi;
    }
    for (int i = 0; i < cells; ++i) {
      out.u1[i] += out.dt * (f1[i + 1] - f1[i]) / h;
      out.u2[i] += out.dt * (f2[i + 1] - f2[i]) / h;
    }
  }
  poisson_1d(out.u1, out.u2, h, out.phi);
  return out;
}

std::vector<double> restrict_to_centres(const std::vector<double>& fine, int coarse) {
  const int ratio = static_cast<int>(fine.size()) / coarse;
  if (ratio * coarse != static_cast<int>(fine.size())) throw std::invalid_argument("non-integer refinement ratio");
  std::vector<double> out(coarse);
  for (int i = 0; i < coarse; ++i) {
    if (ratio % 2 == 0) {
      const int j = i * ratio + ratio / 2;
      out[i] = 0.5 * (fine[j - 1] + fine[j]);
    } else {
      out[i] = fine[i * ratio + ratio / 2];
    }
  }
  return out;
}

double relative_l2(const std::vector<double>& a, const std::vector<double>& b) {
  double num = 0, den = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - b[i]) * (a[i] - b[i]);
    den += b[i] * b[i];
  }
  return std::sqrt(num / den);
}

}  // namespace oracle
