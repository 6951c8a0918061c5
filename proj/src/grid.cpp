#include "pnpup/grid.hpp"

#include <algorithm>
#include <string>

#include "pnpup/error.hpp"

namespace pnpup {

Grid::Grid(int dim, int n, GridKind kind) : dim_(dim), n_(n), kind_(kind) {
  if (dim < 1 || dim > 3) throw InputError("grid dimension must be 1, 2 or 3, got " + std::to_string(dim));
  if (n < 1) throw InputError("grid resolution must be positive, got " + std::to_string(n));
  size_ = 1;
  for (int a = dim - 1; a >= 0; --a) {
    strides_[a] = size_;
    size_ *= static_cast<std::size_t>(n);
  }
}

std::size_t Grid::index(std::span<const int> coords) const noexcept {
  std::size_t v = 0;
  for (int a = 0; a < dim_; ++a) v += static_cast<std::size_t>(coords[a]) * strides_[a];
  return v;
}

ScalarField::ScalarField(const Grid& g, std::vector<double> v) : grid(g), values(std::move(v)) {
  if (values.size() != grid.size())
    throw InputError("field has " + std::to_string(values.size()) + " values, grid has " +
                     std::to_string(grid.size()) + " voxels");
}

bool ScalarField::all_finite() const noexcept {
  return std::all_of(values.begin(), values.end(), [](double x) { return std::isfinite(x); });
}

namespace {
inline bool take(std::span<const char> mask, std::size_t i) { return mask.empty() || mask[i] != 0; }
}  // namespace

double integrate(const Grid& grid, std::span<const double> f, std::span<const char> mask) {
  long double s = 0;
  for (std::size_t i = 0; i < f.size(); ++i)
    if (take(mask, i)) s += f[i];
  return static_cast<double>(s) * grid.voxel_volume();
}

double mean(std::span<const double> f, std::span<const char> mask) {
  long double s = 0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < f.size(); ++i)
    if (take(mask, i)) {
      s += f[i];
      ++count;
    }
  return count ? static_cast<double>(s / count) : 0.0;
}

void subtract_mean(std::span<double> f, std::span<const char> mask) {
  const double m = mean(f, mask);
  for (std::size_t i = 0; i < f.size(); ++i)
    if (take(mask, i)) f[i] -= m;
}

double l2_norm(const Grid& grid, std::span<const double> f, std::span<const char> mask) {
  long double s = 0;
  for (std::size_t i = 0; i < f.size(); ++i)
    if (take(mask, i)) s += static_cast<long double>(f[i]) * f[i];
  return std::sqrt(static_cast<double>(s) * grid.voxel_volume());
}

double max_abs(std::span<const double> f, std::span<const char> mask) {
  double m = 0;
  for (std::size_t i = 0; i < f.size(); ++i)
    if (take(mask, i)) m = std::max(m, std::abs(f[i]));
  return m;
}

}  // namespace pnpup
