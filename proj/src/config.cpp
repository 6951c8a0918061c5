#include "pnpup/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <map>
#include <optional>

#include "pnpup/error.hpp"
#include "pnpup/io.hpp"

namespace pnpup {

namespace fs = std::filesystem;

const std::vector<ConfigKey>& config_keys() {
  static const std::vector<ConfigKey> keys = {
      {"cell.kind", nullptr, "full | laminate | disc (alias sphere) | checkerboard | mask"},
      {"cell.dim", "2", "spatial dimension N (1..3)"},
      {"cell.resolution", "32", "voxels per axis m of the reference cell"},
      {"cell.fraction", "0.5", "laminate fluid fraction"},
      {"cell.axis", "0", "laminate layer normal"},
      {"cell.radius", "0.25", "radius of the centred solid inclusion"},
      {"cell.mask_path", "", "mask file (kind = mask), relative to the config file"},
      {"physics.lambda", "1", "dimensionless Debye length"},
      {"physics.alpha", "1", "solid permittivity"},
      {"solver.tol", "1e-10", "relative residual of cell problems"},
      {"solver.max_iter", "0", "CG cap for cell problems (0: 50 m)"},
      {"solver.second_order", "true", "compute the second-order potential correctors"},
      {"solver.picard_tol", "1e-10", "Picard increment tolerance"},
      {"solver.picard_max_iter", "50", "Picard iteration cap per step"},
      {"solver.linear_tol", "1e-12", "relative residual of transport solves"},
      {"solver.poisson_tol", "1e-10", "relative residual of Poisson solves"},
      {"macro.resolution", "64", "macro voxels per axis"},
      {"macro.dt", "1e-3", "time step"},
      {"macro.T", "1e-2", "final time"},
      {"macro.bc", "academic", "academic | neumann"},
      {"macro.drift", "upwind", "upwind | central"},
      {"macro.init", "dipole", "zero | eigenmode | asymmetric | dipole"},
      {"macro.amplitude", "1", "amplitude of the initial densities"},
      {"macro.lambda2", "", "free-energy coefficient (default lambda^2)"},
      {"macro.loceq_window", "4", "block size of the local-equilibrium diagnostic"},
      {"micro.s", "1/2, 1/4", "scale ratios, each the reciprocal of an integer"},
      {"micro.budget", "1048576", "maximum fine-grid voxels"},
      {"micro.dt", "", "DNS time step (default macro.dt)"},
      {"micro.T", "", "DNS final time (default macro.T)"},
      {"micro.bc", "", "DNS boundary variant (default macro.bc)"},
      {"output.directory", "out", "default output directory"},
      {"output.snapshot_times", "", "comma-separated macro snapshot times"},
      {"output.validation_threshold", "0.1", "max reconstruction error at the smallest s"},
  };
  return keys;
}

namespace {

struct BadValue {
  std::string message;
};

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto comma = s.find(',', start);
    std::string item = trim(s.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
    if (!item.empty()) out.push_back(item);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

double to_real(const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(v)) throw BadValue{"expected a real number, got '" + s + "'"};
  return v;
}

long long to_int(const std::string& s) {
  char* end = nullptr;
  const long long v = std::strtoll(s.c_str(), &end, 10);
  if (s.empty() || end != s.c_str() + s.size()) throw BadValue{"expected an integer, got '" + s + "'"};
  return v;
}

bool to_bool(const std::string& s) {
  std::string l = s;
  std::transform(l.begin(), l.end(), l.begin(), [](unsigned char c) { return std::tolower(c); });
  if (l == "true" || l == "yes" || l == "on" || l == "1") return true;
  if (l == "false" || l == "no" || l == "off" || l == "0") return false;
  throw BadValue{"expected a boolean, got '" + s + "'"};
}

double positive(const std::string& s) {
  const double v = to_real(s);
  if (!(v > 0)) throw BadValue{"must be > 0, got " + s};
  return v;
}

long long int_in(const std::string& s, long long lo, long long hi) {
  const long long v = to_int(s);
  if (v < lo || v > hi) throw BadValue{"must lie in [" + std::to_string(lo) + ", " + std::to_string(hi) + "], got " + s};
  return v;
}

std::string choice(const std::string& s, std::initializer_list<const char*> options) {
  std::string l = s;
  std::transform(l.begin(), l.end(), l.begin(), [](unsigned char c) { return std::tolower(c); });
  for (const char* o : options)
    if (l == o) return l;
  std::string msg = "must be one of";
  for (const char* o : options) msg += std::string(" ") + o;
  throw BadValue{msg + ", got '" + s + "'"};
}

MacroBoundary to_boundary(const std::string& s) {
  return choice(s, {"academic", "neumann"}) == "academic" ? MacroBoundary::Academic : MacroBoundary::Neumann;
}

const char* boundary_name(MacroBoundary b) { return b == MacroBoundary::Academic ? "academic" : "neumann"; }

using Setter = std::function<std::string(RunConfig&, const std::string&, const fs::path&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"cell.kind",
       [](RunConfig& c, const std::string& v, const fs::path&) {
         try {
           c.geometry.kind = parse_cell_kind(v);
         } catch (const Error& e) {
           throw BadValue{e.what()};
         }
         return std::string(to_string(c.geometry.kind));
       }},
      {"cell.dim",
       [](RunConfig& c, const std::string& v, const fs::path&) {
         c.geometry.dim = static_cast<int>(int_in(v, 1, 3));
         c.macro.dim = c.geometry.dim;
         return std::to_string(c.geometry.dim);
       }},
      {"cell.resolution",
       [](RunConfig& c, const std::string& v, const fs::path&) {
         c.cell_resolution = static_cast<int>(int_in(v, 4, 4096));
         return std::to_string(c.cell_resolution);
       }},
      {"cell.fraction",
       [](RunConfig& c, const std::string& v, const fs::path&) {
         const double f = to_real(v);
         if (!(f > 0 && f <= 1)) throw BadValue{"must lie in (0, 1], got " + v};
         c.geometry.fraction = f;
         return format_double(f);
       }},
      {"cell.axis",
       [](RunConfig& c, const std::string& v, const fs::path&) {
         c.geometry.axis = static_cast<int>(int_in(v, 0, 2));
         return std::to_string(c.geometry.axis);
       }},
      {"cell.radius",
       [](RunConfig& c, const std::string& v, const fs::path&) {
         const double r = to_real(v);
         if (!(r >= 0)) throw BadValue{"must be >= 0, got " + v};
         c.geometry.radius = r;
         return format_double(r);
       }},
      {"cell.mask_path",
       [](RunConfig& c, const std::string& v, const fs::path& base) {
         if (v.empty()) return std::string();
         fs::path p(v);
         if (p.is_relative() && !base.empty()) p = base / p;
         if (!fs::exists(p)) throw BadValue{"file not found: " + p.string()};
         c.geometry.mask_path = p;
         return p.lexically_normal().generic_string();
       }},
      {"physics.lambda",
       [](RunConfig& c, const std::string& v, const fs::path&) {
         c.physics.lambda = positive(v);
         return format_double(c.physics.lambda);
       }},
      {"physics.alpha",
       [](RunConfig& c, const std::string& v, const fs::path&) {
         c.physics.alpha = positive(v);
         return format_double(c.physics.alpha);
       }},
      {"solver.tol",
       [](RunConfig& c, const std::string& v, const fs::path&) {
         c.solver.tol = positive(v);
         if (c.solver.tol > 1e-2) throw BadValue{"must be <= 1e-2, got " + v};
         return format_double(c.solver.tol);
       }},
      {"solver.max_iter",
       [](RunConfig& c, const std::string& v, const fs::path&) {
         c.solver.max_iter = static_cast<int>(int_in(v, 0, 100000000));
         return std::to_string(c.solver.max_iter);
       }},
      {"solver.second_order",
       [](RunConfig& c, const std::string& v, const fs::path&) {
         c.second_order = to_bool(v);
         return std::string(c.second_order ? "true" : "false");
       }},
      {"solver.picard_tol",
       [](RunConfig& c, const std::string& v, const fs::path&) {
         const double t = positive(v);
         c.macro.picard.tol = c.micro.picard.tol = t;
         return format_double(t);
       }},
      {"solver.picard_max_iter",
       [](RunConfig& c, const std::string& v, const fs::path&) {
         const int n = static_cast<int>(int_in(v, 1, 100000));
         c.macro.picard.max_iter = c.micro.picard.max_iter = n;
         return std::to_string(n);
       }},
      {"solver.linear_tol",
       [](RunConfig& c, const std::string& v, const fs::path&) {
         const double t = positive(v);
         c.macro.picard.linear_tol = c.micro.picard.linear_tol = t;
         return format_double(t);
       }},
      {"solver.poisson_tol",
       [](RunConfig& c, const std::string& v, const fs::path&) {
         const double t = positive(v);
         c.macro.poisson_tol = c.micro.poisson_tol = t;
         return format_double(t);
       }},
      {"macro.resolution",
       [](RunConfig& c, const std::string& v, const fs::path&) {
         c.macro.resolution = static_cast<int>(int_in(v, 4, 8192));
         return std::to_string(c.macro.resolution);
       }},
      {"macro.dt",
       [](RunConfig& c, const std::string& v, const fs::path&) {
         c.macro.dt = positive(v);
         return format_double(c.macro.dt);
       }},
      {"macro.T",
       [](RunConfig& c, const std::string& v, const fs::path&) {
         c.macro.T = positive(v);
         return format_double(c.macro.T);
       }},
      {"macro.bc",
       [](RunConfig& c, const std::string& v, const fs::path&) {
         c.macro.bc = to_boundary(v);
         return std::string(boundary_name(c.macro.bc));
       }},
      {"macro.drift",
       [](RunConfig& c, const std::string& v, const fs::path&) {
         const auto d = choice(v, {"upwind", "central"});
         c.macro.drift = c.micro.drift = d == "upwind" ? DriftScheme::Upwind : DriftScheme::Central;
         return d;
       }},
      {"macro.init",
       [](RunConfig& c, const std::string& v, const fs::path&) {
         c.macro_init = choice(v, {"zero", "eigenmode", "asymmetric", "dipole"});
         return c.macro_init;
       }},
      {"macro.amplitude",
       [](RunConfig& c, const std::string& v, const fs::path&) {
         const double a = to_real(v);
         if (a < 0) throw BadValue{"must be >= 0, got " + v};
         c.macro_amplitude = a;
         return format_double(a);
       }},
      {"macro.lambda2",
       [](RunConfig& c, const std::string& v, const fs::path&) {
         c.macro.lambda2 = v.empty() ? c.physics.fluid_value() : positive(v);
         return format_double(c.macro.lambda2);
       }},
      {"macro.loceq_window",
       [](RunConfig& c, const std::string& v, const fs::path&) {
         c.macro.loceq_window = static_cast<int>(int_in(v, 1, 4096));
         return std::to_string(c.macro.loceq_window);
       }},
      {"micro.s",
       [](RunConfig& c, const std::string& v, const fs::path&) {
         c.micro_s.clear();
         std::string canon;
         for (const auto& tok : split_list(v)) {
           try {
             c.micro_s.push_back(parse_scale_ratio(tok));
           } catch (const Error& e) {
             throw BadValue{e.what()};
           }
           canon += (canon.empty() ? "1/" : ",1/") + std::to_string(static_cast<long long>(std::lround(1.0 / c.micro_s.back())));
         }
         if (c.micro_s.empty()) throw BadValue{"needs at least one scale ratio"};
         return canon;
       }},
      {"micro.budget",
       [](RunConfig& c, const std::string& v, const fs::path&) {
         c.micro_budget = static_cast<std::size_t>(int_in(v, 1, 1LL << 34));
         return std::to_string(c.micro_budget);
       }},
      {"micro.dt",
       [](RunConfig& c, const std::string& v, const fs::path&) {
         c.micro.dt = v.empty() ? c.macro.dt : positive(v);
         return format_double(c.micro.dt);
       }},
      {"micro.T",
       [](RunConfig& c, const std::string& v, const fs::path&) {
         c.micro.T = v.empty() ? c.macro.T : positive(v);
         return format_double(c.micro.T);
       }},
      {"micro.bc",
       [](RunConfig& c, const std::string& v, const fs::path&) {
         c.micro.bc = v.empty() ? c.macro.bc : to_boundary(v);
         return std::string(boundary_name(c.micro.bc));
       }},
      {"output.directory",
       [](RunConfig& c, const std::string& v, const fs::path&) {
         if (v.empty()) throw BadValue{"must not be empty"};
         c.output_dir = v;
         return v;
       }},
      {"output.snapshot_times",
       [](RunConfig& c, const std::string& v, const fs::path&) {
         c.macro.snapshot_times.clear();
         std::string canon;
         for (const auto& tok : split_list(v)) {
           const double t = to_real(tok);
           if (t < 0) throw BadValue{"snapshot times must be >= 0, got " + tok};
           c.macro.snapshot_times.push_back(t);
           canon += (canon.empty() ? "" : ",") + format_double(t);
         }
         std::sort(c.macro.snapshot_times.begin(), c.macro.snapshot_times.end());
         return canon;
       }},
      {"output.validation_threshold",
       [](RunConfig& c, const std::string& v, const fs::path&) {
         c.validation_threshold = positive(v);
         return format_double(c.validation_threshold);
       }},
  };
  return table;
}

struct Entry {
  std::string value;
  int line;
};

}  // namespace

double parse_scale_ratio(std::string_view token) {
  const std::string t = trim(token);
  double s = 0;
  try {
    const auto slash = t.find('/');
    if (slash == std::string::npos) {
      s = to_real(t);
    } else {
      const double num = to_real(trim(t.substr(0, slash)));
      const double den = to_real(trim(t.substr(slash + 1)));
      if (den == 0) throw BadValue{};
      s = num / den;
    }
  } catch (const BadValue&) {
    throw InputError("scale ratio '" + t + "' is not a number");
  }
  if (!(s > 0 && s <= 1)) throw InputError("scale ratio '" + t + "' must lie in (0, 1]");
  const double inv = 1.0 / s;
  if (std::abs(inv - std::round(inv)) > 1e-9 * inv)
    throw InputError("scale ratio '" + t + "' is not the reciprocal of an integer");
  return 1.0 / std::round(inv);
}

RunConfig parse_config(std::string_view text, const fs::path& base_dir, const std::string& source_name) {
  std::vector<std::pair<int, std::string>> violations;
  auto at = [&](int line, const std::string& msg) {
    violations.emplace_back(line, source_name + ":" + std::to_string(line) + ": " + msg);
  };

  std::map<std::string, Entry> entries;
  std::string section;
  int line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto nl = text.find('\n', pos);
    std::string_view raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;

    std::string line(raw);
    for (std::size_t i = 0; i < line.size(); ++i) {
      if ((line[i] == '#' || line[i] == ';') && (i == 0 || line[i - 1] == ' ' || line[i - 1] == '\t')) {
        line.resize(i);
        break;
      }
    }
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        at(line_no, "malformed section header '" + line + "'");
        continue;
      }
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      at(line_no, "expected 'key = value', got '" + line + "'");
      continue;
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    if (key.empty()) {
      at(line_no, "empty key");
      continue;
    }
    if (key.find('.') == std::string::npos) {
      if (section.empty()) {
        at(line_no, "key '" + key + "' outside a section");
        continue;
      }
      key = section + "." + key;
    }
    if (!setters().count(key)) {
      at(line_no, "unknown key '" + key + "'");
      continue;
    }
    auto [it, inserted] = entries.emplace(key, Entry{value, line_no});
    if (!inserted) {
      at(line_no, "duplicate key '" + key + "' (first set on line " + std::to_string(it->second.line) + ", again on line " +
                      std::to_string(line_no) + ")");
    }
  }

  RunConfig cfg;
  cfg.source = source_name;
  for (const auto& key : config_keys()) {
    const auto it = entries.find(key.name);
    std::string value;
    int line = 0;
    if (it != entries.end()) {
      value = it->second.value;
      line = it->second.line;
    } else if (key.default_value) {
      value = key.default_value;
    } else {
      at(line_no, std::string("missing required key '") + key.name + "'");
      continue;
    }
    try {
      const std::string canon = setters().at(key.name)(cfg, value, base_dir);
      cfg.canonical += std::string(key.name) + "=" + canon + "\n";
    } catch (const BadValue& e) {
      if (line > 0)
        at(line, std::string(key.name) + ": " + e.message);
      else
        violations.emplace_back(0, source_name + ": default of " + key.name + ": " + e.message);
    }
  }

  auto line_of = [&](const char* key) {
    const auto it = entries.find(key);
    return it == entries.end() ? line_no : it->second.line;
  };
  if (violations.empty()) {
    if (cfg.geometry.kind == CellKind::Mask && cfg.geometry.mask_path.empty())
      at(line_of("cell.kind"), "cell.kind = mask requires cell.mask_path");
    if (cfg.geometry.kind == CellKind::Laminate && cfg.geometry.axis >= cfg.geometry.dim)
      at(line_of("cell.axis"), "cell.axis must be < cell.dim");
    if (cfg.macro.dt > cfg.macro.T)
      at(line_of("macro.dt"), "macro.dt must not exceed macro.T");
    if (cfg.micro.dt > cfg.micro.T) at(line_of("micro.dt"), "micro.dt must not exceed micro.T");
    for (double t : cfg.macro.snapshot_times)
      if (t > cfg.macro.T + 1e-12) {
        at(line_of("output.snapshot_times"), "snapshot time " + format_double(t) + " exceeds macro.T");
        break;
      }
  }
  if (!violations.empty()) {
    std::stable_sort(violations.begin(), violations.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<std::string> messages;
    for (auto& v : violations) messages.push_back(std::move(v.second));
    throw ConfigError(std::move(messages));
  }

  cfg.solver.threads = 1;
  cfg.hash = hash_hex(fnv1a(cfg.canonical));
  return cfg;
}

RunConfig load_config(const fs::path& path) {
  std::string text;
  try {
    text = read_text(path);
  } catch (const Error& e) {
    throw ConfigError({e.what()});
  }
  auto cfg = parse_config(text, path.parent_path(), path.string());
  cfg.source = path;
  return cfg;
}

}  // namespace pnpup
