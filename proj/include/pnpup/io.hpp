#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "pnpup/grid.hpp"
#include "pnpup/macropnp.hpp"
#include "pnpup/upscale.hpp"

namespace pnpup {

/// 64-bit FNV-1a digest, rendered as 16 lowercase hex digits by hash_hex.
std::uint64_t fnv1a(std::string_view bytes) noexcept;
std::string hash_hex(std::uint64_t h);

/// Writes to a sibling temporary file, then renames over `path`.
void atomic_write(const std::filesystem::path& path, std::string_view content);
std::string read_text(const std::filesystem::path& path);

/// Grid dump: "field <name> N m", then one value per line (row-major, %.17g).
std::string format_grid_dump(const std::string& name, const Grid& grid, std::span<const double> values);
void write_grid_dump(const std::filesystem::path& path, const std::string& name, const ScalarField& field);
void write_grid_dump(const std::filesystem::path& path, const std::string& name, const Grid& grid,
                     std::span<const double> values);
struct GridDump {
  std::string name;
  ScalarField field;
};
GridDump read_grid_dump(const std::filesystem::path& path, GridKind kind = GridKind::Cell);

/// JSON document with keys p, eps0, M, Hhat, provenance (matrices as nested
/// row arrays). `config_hash` is stored inside provenance when non-empty.
std::string tensors_to_json(const EffectiveTensors& tensors, const std::string& config_hash = {});
EffectiveTensors tensors_from_json(const std::string& text);
EffectiveTensors read_tensors(const std::filesystem::path& path);

inline constexpr const char* kDiagnosticsHeader = "t,mass1,mass2,charge,free_energy,picard_iters,loceq_dev";
std::string format_diagnostics_csv(const std::vector<DiagnosticsRow>& rows);

struct ValidationRow {
  double s = 0.0;
  double err_phi = 0.0;        // macro-only potential vs DNS
  double err_n1 = 0.0, err_n2 = 0.0;  // reconstructed densities vs DNS, fluid voxels
  double err_phi_recon = 0.0;  // reconstructed potential vs DNS
};
inline constexpr const char* kValidationHeader = "s,err_phi_L2,err_n1_L2,err_n2_L2,err_phi_recon_L2";
std::string format_validation_csv(const std::vector<ValidationRow>& rows);

/// Shortest round-trip decimal form of a double.
std::string format_double(double x);

}  // namespace pnpup
