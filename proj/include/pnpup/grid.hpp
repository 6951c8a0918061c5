#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace pnpup {

enum class GridKind { Cell, Macro, Micro };

/// Uniform cell-centred grid on the unit cube [0,1]^dim with n cells per axis.
/// Voxels are stored row-major: axis 0 varies slowest.
class Grid {
 public:
  Grid() = default;
  Grid(int dim, int n, GridKind kind = GridKind::Cell);

  int dim() const noexcept { return dim_; }
  int n() const noexcept { return n_; }
  GridKind kind() const noexcept { return kind_; }
  std::size_t size() const noexcept { return size_; }
  double spacing() const noexcept { return 1.0 / n_; }
  double voxel_volume() const noexcept { return std::pow(spacing(), dim_); }
  std::size_t stride(int axis) const noexcept { return strides_[axis]; }

  int coord(std::size_t v, int axis) const noexcept {
    return static_cast<int>((v / strides_[axis]) % static_cast<std::size_t>(n_));
  }
  double center(std::size_t v, int axis) const noexcept { return (coord(v, axis) + 0.5) * spacing(); }
  std::size_t index(std::span<const int> coords) const noexcept;

  /// Periodic neighbour in the +axis direction.
  std::size_t wrap_plus(std::size_t v, int axis) const noexcept {
    return coord(v, axis) == n_ - 1 ? v - (n_ - 1) * strides_[axis] : v + strides_[axis];
  }
  std::size_t wrap_minus(std::size_t v, int axis) const noexcept {
    return coord(v, axis) == 0 ? v + (n_ - 1) * strides_[axis] : v - strides_[axis];
  }

  bool same_shape(const Grid& other) const noexcept { return dim_ == other.dim_ && n_ == other.n_; }
  friend bool operator==(const Grid& a, const Grid& b) noexcept {
    return a.same_shape(b) && a.kind_ == b.kind_;
  }

 private:
  int dim_ = 0;
  int n_ = 0;
  GridKind kind_ = GridKind::Cell;
  std::size_t size_ = 0;
  std::array<std::size_t, 3> strides_{0, 0, 0};
};

/// One real value per voxel of a grid.
struct ScalarField {
  Grid grid;
  std::vector<double> values;

  ScalarField() = default;
  explicit ScalarField(const Grid& g, double fill = 0.0) : grid(g), values(g.size(), fill) {}
  ScalarField(const Grid& g, std::vector<double> v);

  std::size_t size() const noexcept { return values.size(); }
  double& operator[](std::size_t i) noexcept { return values[i]; }
  double operator[](std::size_t i) const noexcept { return values[i]; }
  bool all_finite() const noexcept;
};

// Discrete reductions with voxel-volume weights. An empty mask means "all voxels".
double integrate(const Grid& grid, std::span<const double> f, std::span<const char> mask = {});
double mean(std::span<const double> f, std::span<const char> mask = {});
void subtract_mean(std::span<double> f, std::span<const char> mask = {});
double l2_norm(const Grid& grid, std::span<const double> f, std::span<const char> mask = {});
double max_abs(std::span<const double> f, std::span<const char> mask = {});

}  // namespace pnpup
