#include "pnpup/unitcell.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>

#include "pnpup/error.hpp"

namespace pnpup {

UnitCell::UnitCell(GeometrySpec spec, Grid grid, std::vector<char> fluid_mask)
    : spec_(std::move(spec)), grid_(grid), mask_(std::move(fluid_mask)) {
  if (mask_.size() != grid_.size()) throw InputError("fluid mask size does not match the cell grid");
  if (std::none_of(mask_.begin(), mask_.end(), [](char c) { return c != 0; }))
    throw InputError("unit cell has an empty fluid region (porosity 0)");
  for (auto& c : mask_) c = c ? 1 : 0;
}

bool UnitCell::all_fluid() const noexcept {
  return std::all_of(mask_.begin(), mask_.end(), [](char c) { return c != 0; });
}

std::uint64_t UnitCell::geometry_hash() const noexcept {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&](std::uint64_t byte) {
    h ^= byte;
    h *= 1099511628211ULL;
  };
  mix(static_cast<std::uint64_t>(grid_.dim()));
  for (int s = 0; s < 32; s += 8) mix((static_cast<std::uint32_t>(grid_.n()) >> s) & 0xff);
  for (char c : mask_) mix(static_cast<std::uint64_t>(c));
  return h;
}

UnitCell build_unit_cell(const GeometrySpec& spec, int m) {
  if (m < 4) throw InputError("cell resolution must be at least 4, got " + std::to_string(m));
  if (spec.kind == CellKind::Mask) {
    UnitCell cell = load_mask_file(spec.mask_path);
    if (cell.resolution() != m || cell.dim() != spec.dim)
      throw InputError("mask file " + spec.mask_path.string() + " is " + std::to_string(cell.dim()) +
                       "D with m=" + std::to_string(cell.resolution()) + ", expected " +
                       std::to_string(spec.dim) + "D with m=" + std::to_string(m));
    return cell;
  }
  Grid grid(spec.dim, m, GridKind::Cell);
  std::vector<char> mask(grid.size(), 1);
  switch (spec.kind) {
    case CellKind::Full:
      break;
    case CellKind::Laminate: {
      if (spec.axis < 0 || spec.axis >= spec.dim) throw InputError("laminate axis out of range");
      if (!(spec.fraction > 0.0 && spec.fraction <= 1.0))
        throw InputError("laminate fluid fraction must lie in (0, 1]");
      for (std::size_t v = 0; v < grid.size(); ++v) mask[v] = grid.center(v, spec.axis) < spec.fraction;
      break;
    }
    case CellKind::Disc: {
      if (!(spec.radius >= 0.0)) throw InputError("inclusion radius must be non-negative");
      for (std::size_t v = 0; v < grid.size(); ++v) {
        double r2 = 0;
        for (int a = 0; a < spec.dim; ++a) {
          const double d = grid.center(v, a) - 0.5;
          r2 += d * d;
        }
        mask[v] = r2 > spec.radius * spec.radius;
      }
      break;
    }
    case CellKind::Checkerboard: {
      for (std::size_t v = 0; v < grid.size(); ++v) {
        int parity = 0;
        for (int a = 0; a < spec.dim; ++a) parity += grid.center(v, a) < 0.5 ? 0 : 1;
        mask[v] = parity % 2 == 0;
      }
      break;
    }
    case CellKind::Mask:
      break;
  }
  return UnitCell(spec, grid, std::move(mask));
}

UnitCell load_mask_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open mask file " + path.string());
  int dim = 0, m = 0;
  if (!(in >> dim >> m)) throw InputError("mask file " + path.string() + ": bad header, expected 'N m'");
  Grid grid(dim, m, GridKind::Cell);
  if (m < 4) throw InputError("mask file " + path.string() + ": resolution must be at least 4");
  std::vector<char> mask(grid.size());
  for (std::size_t v = 0; v < grid.size(); ++v) {
    int x;
    if (!(in >> x) || (x != 0 && x != 1))
      throw InputError("mask file " + path.string() + ": entry " + std::to_string(v) + " is missing or not 0/1");
    mask[v] = static_cast<char>(x);
  }
  GeometrySpec spec;
  spec.kind = CellKind::Mask;
  spec.dim = dim;
  spec.mask_path = path;
  return UnitCell(spec, grid, std::move(mask));
}

double porosity(const UnitCell& cell) {
  const auto& mask = cell.fluid_mask();
  const auto fluid = std::count_if(mask.begin(), mask.end(), [](char c) { return c != 0; });
  return static_cast<double>(fluid) / static_cast<double>(mask.size());
}

ScalarField permittivity_field(const UnitCell& cell, const PermittivityParams& params) {
  if (!(params.lambda > 0.0) || !(params.alpha > 0.0))
    throw InputError("permittivity parameters require lambda > 0 and alpha > 0");
  ScalarField eps(cell.grid());
  const double fluid = params.fluid_value();
  for (std::size_t v = 0; v < eps.size(); ++v) eps[v] = cell.is_fluid(v) ? fluid : params.alpha;
  return eps;
}

int fluid_components(const UnitCell& cell) {
  const Grid& g = cell.grid();
  std::vector<int> label(g.size(), -1);
  std::vector<std::size_t> stack;
  int count = 0;
  for (std::size_t seed = 0; seed < g.size(); ++seed) {
    if (!cell.is_fluid(seed) || label[seed] >= 0) continue;
    label[seed] = count;
    stack.push_back(seed);
    while (!stack.empty()) {
      const std::size_t v = stack.back();
      stack.pop_back();
      for (int a = 0; a < g.dim(); ++a)
        for (std::size_t w : {g.wrap_plus(v, a), g.wrap_minus(v, a)})
          if (cell.is_fluid(w) && label[w] < 0) {
            label[w] = count;
            stack.push_back(w);
          }
    }
    ++count;
  }
  return count;
}

const char* to_string(CellKind kind) {
  switch (kind) {
    case CellKind::Full: return "full";
    case CellKind::Laminate: return "laminate";
    case CellKind::Disc: return "disc";
    case CellKind::Checkerboard: return "checkerboard";
    case CellKind::Mask: return "mask";
  }
  return "unknown";
}

CellKind parse_cell_kind(const std::string& name) {
  if (name == "full") return CellKind::Full;
  if (name == "laminate") return CellKind::Laminate;
  if (name == "disc" || name == "sphere") return CellKind::Disc;
  if (name == "checkerboard") return CellKind::Checkerboard;
  if (name == "mask") return CellKind::Mask;
  throw InputError("unsupported cell kind '" + name + "'");
}

}  // namespace pnpup
