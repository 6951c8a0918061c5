#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "pnpup/grid.hpp"

namespace pnpup {

enum class Boundary { Periodic, Neumann, Dirichlet };

/// Symmetric cell-centred finite-volume operator
///
///   (A u)_v = sum_faces c_f (u_v - u_nb) / h^2 + d_v u_v + shift_v u_v
///
/// i.e. a discretisation of -div(c grad u) + shift*u. Face coefficients live
/// on the face between voxel v and its +axis neighbour. Homogeneous Dirichlet
/// boundary faces use the ghost value -u (contributing 2c/h^2 to the
/// diagonal); Neumann boundary faces carry no flux.
///
/// Inactive voxels (when a mask is set) are decoupled: all their faces carry
/// zero coefficient and their rows/columns act on zero.
class FluxOperator {
 public:
  FluxOperator(const Grid& grid, Boundary bc, std::vector<char> active = {});

  /// Harmonic face averages of a per-voxel coefficient. Faces touching an
  /// inactive voxel get zero. Dirichlet boundary faces use the voxel value.
  static FluxOperator from_voxel_coefficient(const Grid& grid, std::span<const double> coef,
                                             Boundary bc, std::vector<char> active = {});

  /// Constant-tensor operator -div(T grad u) on a non-periodic or periodic grid.
  /// Off-diagonal entries are discretised with cell-centred central differences
  /// (C_a^T C_b); the operator stays symmetric.
  static FluxOperator from_tensor(const Grid& grid, const Eigen::MatrixXd& tensor, Boundary bc);

  const Grid& grid() const noexcept { return grid_; }
  Boundary boundary() const noexcept { return bc_; }
  std::span<const char> active() const noexcept { return active_; }
  bool is_active(std::size_t v) const noexcept { return active_.empty() || active_[v] != 0; }

  /// Coefficient of the face between v and its +axis neighbour (0 on a
  /// non-periodic upper boundary).
  double face(int axis, std::size_t v) const noexcept { return faces_[axis][v]; }
  std::span<const double> faces(int axis) const noexcept { return faces_[axis]; }

  void add_shift(double value);

  /// Neighbour across the +axis face, or false when that face is a boundary.
  bool plus_neighbor(std::size_t v, int axis, std::size_t& w) const noexcept;

  void apply(std::span<const double> x, std::span<double> y) const;
  std::vector<double> diagonal() const;

  /// Operator has a constant null vector (periodic or all-Neumann, no shift).
  bool singular() const noexcept;

 private:
  Grid grid_;
  Boundary bc_;
  std::vector<char> active_;
  std::vector<std::vector<double>> faces_;
  std::vector<double> boundary_diag_;
  std::vector<double> shift_;
  Eigen::MatrixXd cross_;  // off-diagonal tensor part, empty if none

  void apply_cross(std::span<const double> x, std::span<double> y) const;
};

/// Face-normal difference (u_nb - u_v)/h on the +axis face of each voxel;
/// periodic wraparound. On a non-periodic grid the upper boundary entry is 0.
std::vector<double> face_gradient(const Grid& grid, std::span<const double> u, int axis,
                                  bool periodic = true);

/// Cell-centred central difference along axis with ghost = mirror (Neumann),
/// ghost = -u (Dirichlet) or wraparound (periodic).
std::vector<double> central_gradient(const Grid& grid, std::span<const double> u, int axis,
                                     Boundary bc);

}  // namespace pnpup
