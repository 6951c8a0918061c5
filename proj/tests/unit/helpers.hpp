#pragma once

#include <cmath>
#include <random>
#include <span>
#include <vector>

#include "pnpup/grid.hpp"

namespace testing {

inline std::vector<double> random_vector(std::size_t n, unsigned seed, double lo = -1.0, double hi = 1.0) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = dist(rng);
  return v;
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double max_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

/// Voxel index of (i, j) on a 2D grid (axis 0 slowest).
inline std::size_t at(const pnpup::Grid& g, int i, int j) {
  return static_cast<std::size_t>(i) * g.stride(0) + static_cast<std::size_t>(j) * g.stride(1);
}

}  // namespace testing
