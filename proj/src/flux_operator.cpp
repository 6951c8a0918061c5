#include "pnpup/flux_operator.hpp"

#include <cmath>

#include "pnpup/error.hpp"

namespace pnpup {

namespace {
inline double harmonic(double a, double b) { return (a + b) > 0 ? 2.0 * a * b / (a + b) : 0.0; }
}  // namespace

FluxOperator::FluxOperator(const Grid& grid, Boundary bc, std::vector<char> active)
    : grid_(grid),
      bc_(bc),
      active_(std::move(active)),
      faces_(grid.dim(), std::vector<double>(grid.size(), 0.0)),
      boundary_diag_(grid.size(), 0.0) {
  if (!active_.empty() && active_.size() != grid.size())
    throw InputError("active mask size does not match grid");
}

bool FluxOperator::plus_neighbor(std::size_t v, int axis, std::size_t& w) const noexcept {
  if (grid_.coord(v, axis) == grid_.n() - 1) {
    if (bc_ != Boundary::Periodic) return false;
    w = v - (grid_.n() - 1) * grid_.stride(axis);
    return true;
  }
  w = v + grid_.stride(axis);
  return true;
}

FluxOperator FluxOperator::from_voxel_coefficient(const Grid& grid, std::span<const double> coef,
                                                  Boundary bc, std::vector<char> active) {
  if (coef.size() != grid.size()) throw InputError("coefficient size does not match grid");
  FluxOperator op(grid, bc, std::move(active));
  const double h2 = grid.spacing() * grid.spacing();
  for (int a = 0; a < grid.dim(); ++a) {
    for (std::size_t v = 0; v < grid.size(); ++v) {
      if (!op.is_active(v)) continue;
      std::size_t w;
      if (op.plus_neighbor(v, a, w)) {
        if (op.is_active(w)) op.faces_[a][v] = harmonic(coef[v], coef[w]);
      } else if (bc == Boundary::Dirichlet) {
        op.boundary_diag_[v] += 2.0 * coef[v] / h2;
      }
      if (bc == Boundary::Dirichlet && grid.coord(v, a) == 0) op.boundary_diag_[v] += 2.0 * coef[v] / h2;
    }
  }
  return op;
}

FluxOperator FluxOperator::from_tensor(const Grid& grid, const Eigen::MatrixXd& tensor, Boundary bc) {
  if (tensor.rows() != grid.dim() || tensor.cols() != grid.dim())
    throw InputError("tensor shape does not match grid dimension");
  FluxOperator op(grid, bc);
  const double h2 = grid.spacing() * grid.spacing();
  for (int a = 0; a < grid.dim(); ++a) {
    for (std::size_t v = 0; v < grid.size(); ++v) {
      std::size_t w;
      if (op.plus_neighbor(v, a, w)) op.faces_[a][v] = tensor(a, a);
      if (bc == Boundary::Dirichlet) {
        const int i = grid.coord(v, a);
        if (i == 0) op.boundary_diag_[v] += 2.0 * tensor(a, a) / h2;
        if (i == grid.n() - 1) op.boundary_diag_[v] += 2.0 * tensor(a, a) / h2;
      }
    }
  }
  Eigen::MatrixXd off = tensor;
  off.diagonal().setZero();
  if (off.cwiseAbs().maxCoeff() > 0) op.cross_ = off;
  return op;
}

void FluxOperator::add_shift(double value) {
  if (shift_.empty()) shift_.assign(grid_.size(), 0.0);
  for (std::size_t v = 0; v < grid_.size(); ++v)
    if (is_active(v)) shift_[v] += value;
}

bool FluxOperator::singular() const noexcept {
  if (bc_ == Boundary::Dirichlet) return false;
  if (shift_.empty()) return true;
  for (double s : shift_)
    if (s != 0.0) return false;
  return true;
}

void FluxOperator::apply(std::span<const double> x, std::span<double> y) const {
  const std::size_t n = grid_.size();
  const std::size_t m = static_cast<std::size_t>(grid_.n());
  const double inv_h2 = 1.0 / (grid_.spacing() * grid_.spacing());
  if (shift_.empty()) {
    for (std::size_t v = 0; v < n; ++v) y[v] = boundary_diag_[v] * x[v];
  } else {
    for (std::size_t v = 0; v < n; ++v) y[v] = (boundary_diag_[v] + shift_[v]) * x[v];
  }
  const bool periodic = bc_ == Boundary::Periodic;
  for (int a = 0; a < grid_.dim(); ++a) {
    const double* f = faces_[a].data();
    const std::size_t s = grid_.stride(a);
    const std::size_t line = m * s;
    // v = outer*line + i*s + inner; the face (v, v+s) for i < m-1, plus the wrap face.
    for (std::size_t outer = 0; outer < n; outer += line) {
      for (std::size_t i = 0; i + 1 < m; ++i) {
        const std::size_t base = outer + i * s;
        for (std::size_t inner = 0; inner < s; ++inner) {
          const std::size_t v = base + inner;
          const double flux = f[v] * (x[v] - x[v + s]) * inv_h2;
          y[v] += flux;
          y[v + s] -= flux;
        }
      }
      if (periodic) {
        const std::size_t last = outer + (m - 1) * s;
        for (std::size_t inner = 0; inner < s; ++inner) {
          const std::size_t v = last + inner, w = outer + inner;
          const double flux = f[v] * (x[v] - x[w]) * inv_h2;
          y[v] += flux;
          y[w] -= flux;
        }
      }
    }
  }
  if (cross_.size() > 0) apply_cross(x, y);
}

namespace {

// Sparse row of the cell-centred central difference with the boundary ghost rule.
struct CentralStencil {
  std::size_t plus, minus;
  double wplus, wminus;  // weights applied to u[plus], u[minus]
};

CentralStencil central_stencil(const Grid& g, std::size_t v, int a, Boundary bc) {
  const double c = 1.0 / (2.0 * g.spacing());
  const int i = g.coord(v, a);
  CentralStencil s{0, 0, c, -c};
  if (bc == Boundary::Periodic) {
    s.plus = g.wrap_plus(v, a);
    s.minus = g.wrap_minus(v, a);
    return s;
  }
  const double ghost = bc == Boundary::Neumann ? 1.0 : -1.0;
  if (i == g.n() - 1) {
    s.plus = v;
    s.wplus = c * ghost;
  } else {
    s.plus = v + g.stride(a);
  }
  if (i == 0) {
    s.minus = v;
    s.wminus = -c * ghost;
  } else {
    s.minus = v - g.stride(a);
  }
  return s;
}

}  // namespace

void FluxOperator::apply_cross(std::span<const double> x, std::span<double> y) const {
  const std::size_t n = grid_.size();
  const int dim = grid_.dim();
  std::vector<std::vector<double>> grad(dim, std::vector<double>(n));
  for (int b = 0; b < dim; ++b)
    for (std::size_t v = 0; v < n; ++v) {
      const auto s = central_stencil(grid_, v, b, bc_);
      grad[b][v] = s.wplus * x[s.plus] + s.wminus * x[s.minus];
    }
  for (int a = 0; a < dim; ++a) {
    std::vector<double> g(n, 0.0);
    for (int b = 0; b < dim; ++b)
      if (b != a && cross_(a, b) != 0.0)
        for (std::size_t v = 0; v < n; ++v) g[v] += cross_(a, b) * grad[b][v];
    // y += C_a^T g
    for (std::size_t v = 0; v < n; ++v) {
      const auto s = central_stencil(grid_, v, a, bc_);
      y[s.plus] += s.wplus * g[v];
      y[s.minus] += s.wminus * g[v];
    }
  }
}

std::vector<double> FluxOperator::diagonal() const {
  const std::size_t n = grid_.size();
  const double inv_h2 = 1.0 / (grid_.spacing() * grid_.spacing());
  std::vector<double> d(boundary_diag_);
  if (!shift_.empty())
    for (std::size_t v = 0; v < n; ++v) d[v] += shift_[v];
  for (int a = 0; a < grid_.dim(); ++a)
    for (std::size_t v = 0; v < n; ++v) {
      std::size_t w;
      if (faces_[a][v] == 0.0 || !plus_neighbor(v, a, w)) continue;
      d[v] += faces_[a][v] * inv_h2;
      d[w] += faces_[a][v] * inv_h2;
    }
  if (cross_.size() > 0) {
    // Diagonal of C_a^T C_b only picks up the ghost self-weights at boundaries.
    for (int a = 0; a < grid_.dim(); ++a)
      for (int b = 0; b < grid_.dim(); ++b) {
        if (a == b || cross_(a, b) == 0.0) continue;
        for (std::size_t v = 0; v < n; ++v) {
          const auto sa = central_stencil(grid_, v, a, bc_);
          const auto sb = central_stencil(grid_, v, b, bc_);
          double wa = (sa.plus == v ? sa.wplus : 0.0) + (sa.minus == v ? sa.wminus : 0.0);
          double wb = (sb.plus == v ? sb.wplus : 0.0) + (sb.minus == v ? sb.wminus : 0.0);
          d[v] += cross_(a, b) * wa * wb;
        }
      }
  }
  return d;
}

std::vector<double> face_gradient(const Grid& grid, std::span<const double> u, int axis, bool periodic) {
  std::vector<double> g(grid.size(), 0.0);
  const double inv_h = 1.0 / grid.spacing();
  for (std::size_t v = 0; v < grid.size(); ++v) {
    if (!periodic && grid.coord(v, axis) == grid.n() - 1) continue;
    g[v] = (u[grid.wrap_plus(v, axis)] - u[v]) * inv_h;
  }
  return g;
}

std::vector<double> central_gradient(const Grid& grid, std::span<const double> u, int axis, Boundary bc) {
  std::vector<double> g(grid.size());
  for (std::size_t v = 0; v < grid.size(); ++v) {
    const auto s = central_stencil(grid, v, axis, bc);
    g[v] = s.wplus * u[s.plus] + s.wminus * u[s.minus];
  }
  return g;
}

}  // namespace pnpup
