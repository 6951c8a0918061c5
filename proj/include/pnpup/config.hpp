#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "pnpup/cellcorrect.hpp"
#include "pnpup/macropnp.hpp"
#include "pnpup/microdns.hpp"
#include "pnpup/unitcell.hpp"

namespace pnpup {

/// Validated run configuration. Plain-text format:
///
///   [physics]
///   lambda = 1.0      # comment
///   macro.dt = 1e-3   # dotted keys work inside or outside sections
struct RunConfig {
  std::filesystem::path source;

  GeometrySpec geometry;
  int cell_resolution = 32;
  PermittivityParams physics;

  SolverOptions solver;
  bool second_order = true;

  MacroConfig macro;
  std::string macro_init = "dipole";
  double macro_amplitude = 1.0;

  std::vector<double> micro_s;
  std::size_t micro_budget = std::size_t{1} << 20;
  MicroConfig micro;

  std::filesystem::path output_dir = "out";
  double validation_threshold = 0.1;

  std::string canonical;  // "key=value" lines with every default resolved
  std::string hash;       // FNV-1a of `canonical`
};

struct ConfigKey {
  const char* name;
  const char* default_value;  // nullptr: required
  const char* help;
};
/// Every recognised key with its default, in canonical order.
const std::vector<ConfigKey>& config_keys();

/// Throws ConfigError listing every violation, each prefixed by its line.
RunConfig parse_config(std::string_view text, const std::filesystem::path& base_dir = {},
                       const std::string& source_name = "<config>");
RunConfig load_config(const std::filesystem::path& path);

/// Parses "1/2", "0.25" or "1/8" style scale ratios; throws InputError unless
/// 1/s is a positive integer.
double parse_scale_ratio(std::string_view token);

}  // namespace pnpup
