#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pnpup/grid.hpp"

namespace pnpup {

enum class CellKind { Full, Laminate, Disc, Checkerboard, Mask };

/// Declarative description of the fluid region of the reference cell.
struct GeometrySpec {
  CellKind kind = CellKind::Full;
  int dim = 2;
  double fraction = 0.5;  // laminate: fluid volume fraction
  int axis = 0;           // laminate: layers are normal to this axis
  double radius = 0.25;   // disc/sphere: radius of the centred solid inclusion
  std::filesystem::path mask_path;
};

struct PermittivityParams {
  double lambda = 1.0;  // dimensionless Debye length
  double alpha = 1.0;   // solid/fluid permittivity ratio

  double fluid_value() const noexcept { return lambda * lambda; }
};

/// Voxelised periodic reference cell [0,1]^N. fluid_mask[v] != 0 marks the
/// electrolyte region; the mask is one period of a periodic tiling.
class UnitCell {
 public:
  UnitCell(GeometrySpec spec, Grid grid, std::vector<char> fluid_mask);

  const GeometrySpec& spec() const noexcept { return spec_; }
  const Grid& grid() const noexcept { return grid_; }
  int dim() const noexcept { return grid_.dim(); }
  int resolution() const noexcept { return grid_.n(); }
  const std::vector<char>& fluid_mask() const noexcept { return mask_; }
  bool is_fluid(std::size_t v) const noexcept { return mask_[v] != 0; }
  bool all_fluid() const noexcept;

  /// FNV-1a digest of (dim, m, mask); stable across platforms.
  std::uint64_t geometry_hash() const noexcept;

 private:
  GeometrySpec spec_;
  Grid grid_;
  std::vector<char> mask_;
};

/// Rasterise spec by voxel-centre membership. Requires m >= 4.
UnitCell build_unit_cell(const GeometrySpec& spec, int m);

/// Mask file: first line "N m", then m^N entries 0/1 in row-major order.
UnitCell load_mask_file(const std::filesystem::path& path);

double porosity(const UnitCell& cell);

/// lambda^2 on fluid voxels, alpha on solid voxels.
ScalarField permittivity_field(const UnitCell& cell, const PermittivityParams& params);

/// Number of face-connected fluid components, with periodic wraparound.
int fluid_components(const UnitCell& cell);

const char* to_string(CellKind kind);
CellKind parse_cell_kind(const std::string& name);

}  // namespace pnpup
