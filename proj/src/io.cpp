#include "pnpup/io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "pnpup/error.hpp"

namespace pnpup {

namespace fs = std::filesystem;
using nlohmann::json;

std::uint64_t fnv1a(std::string_view bytes) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hash_hex(std::uint64_t h) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) out[i] = digits[h & 0xf];
  return out;
}

std::string format_double(double x) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, x);
  if (ec != std::errc()) throw Error(ErrorKind::Input, "format_double: conversion failed");
  return std::string(buf, end);
}

void atomic_write(const fs::path& path, std::string_view content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::Input, "cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw Error(ErrorKind::Input, "write failed: " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw Error(ErrorKind::Input, "rename to " + path.string() + " failed: " + ec.message());
  }
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string format_grid_dump(const std::string& name, const Grid& grid, std::span<const double> values) {
  if (values.size() != grid.size()) throw InputError("grid dump: value count does not match grid");
  if (name.empty() || name.find_first_of(" \t\n") != std::string::npos)
    throw InputError("grid dump: field name must be a single token");
  std::string out = "field " + name + " " + std::to_string(grid.dim()) + " " + std::to_string(grid.n()) + "\n";
  out.reserve(out.size() + values.size() * 24);
  for (double v : values) {
    out += format_double(v);
    out += '\n';
  }
  return out;
}

void write_grid_dump(const fs::path& path, const std::string& name, const Grid& grid,
                     std::span<const double> values) {
  atomic_write(path, format_grid_dump(name, grid, values));
}

void write_grid_dump(const fs::path& path, const std::string& name, const ScalarField& field) {
  write_grid_dump(path, name, field.grid, field.values);
}

GridDump read_grid_dump(const fs::path& path, GridKind kind) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read " + path.string());
  std::string tag, name;
  int dim = 0, n = 0;
  if (!(in >> tag >> name >> dim >> n) || tag != "field")
    throw InputError(path.string() + ": expected header 'field <name> N m'");
  if (dim < 1 || dim > 3 || n < 1) throw InputError(path.string() + ": bad grid shape in header");
  Grid grid(dim, n, kind);
  std::vector<double> values(grid.size());
  for (auto& v : values)
    if (!(in >> v)) throw InputError(path.string() + ": truncated value list");
  std::string extra;
  if (in >> extra) throw InputError(path.string() + ": trailing data after " + std::to_string(grid.size()) + " values");
  return {name, ScalarField(grid, std::move(values))};
}

namespace {

json matrix_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

Eigen::MatrixXd matrix_from(const json& j, int dim, const char* key) {
  if (!j.is_array() || static_cast<int>(j.size()) != dim)
    throw InputError(std::string("tensors: '") + key + "' must be a " + std::to_string(dim) + "x" +
                     std::to_string(dim) + " array");
  Eigen::MatrixXd m(dim, dim);
  for (int r = 0; r < dim; ++r) {
    if (!j[r].is_array() || static_cast<int>(j[r].size()) != dim)
      throw InputError(std::string("tensors: row ") + std::to_string(r) + " of '" + key + "' has wrong length");
    for (int c = 0; c < dim; ++c) m(r, c) = j[r][c].get<double>();
  }
  return m;
}

}  // namespace

std::string tensors_to_json(const EffectiveTensors& t, const std::string& config_hash) {
  json prov = {
      {"geometry_hash", hash_hex(t.provenance.geometry_hash)},
      {"cell_kind", t.provenance.cell_kind},
      {"resolution", t.provenance.resolution},
      {"solver_tol", t.provenance.solver_tol},
      {"lambda", t.provenance.lambda},
      {"alpha", t.provenance.alpha},
  };
  if (!config_hash.empty()) prov["config_hash"] = config_hash;
  json doc = {
      {"dim", t.dim}, {"p", t.porosity}, {"eps0", matrix_json(t.eps0)},
      {"M", matrix_json(t.M)}, {"Hhat", matrix_json(t.Hhat)}, {"provenance", prov},
  };
  return doc.dump(2) + "\n";
}

EffectiveTensors tensors_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw InputError(std::string("tensors: malformed JSON: ") + e.what());
  }
  for (const char* key : {"p", "eps0", "M", "Hhat"})
    if (!doc.contains(key)) throw InputError(std::string("tensors: missing key '") + key + "'");
  EffectiveTensors t;
  try {
    t.dim = doc.contains("dim") ? doc["dim"].get<int>() : static_cast<int>(doc["eps0"].size());
    if (t.dim < 1 || t.dim > 3) throw InputError("tensors: dimension must be 1, 2 or 3");
    t.porosity = doc["p"].get<double>();
    t.eps0 = matrix_from(doc["eps0"], t.dim, "eps0");
    t.M = matrix_from(doc["M"], t.dim, "M");
    t.Hhat = matrix_from(doc["Hhat"], t.dim, "Hhat");
    if (doc.contains("provenance")) {
      const auto& p = doc["provenance"];
      auto& tp = t.provenance;
      if (p.contains("geometry_hash"))
        tp.geometry_hash = std::stoull(p["geometry_hash"].get<std::string>(), nullptr, 16);
      tp.cell_kind = p.value("cell_kind", "");
      tp.resolution = p.value("resolution", 0);
      tp.solver_tol = p.value("solver_tol", 0.0);
      tp.lambda = p.value("lambda", 0.0);
      tp.alpha = p.value("alpha", 0.0);
    }
  } catch (const json::exception& e) {
    throw InputError(std::string("tensors: ") + e.what());
  }
  if (!(t.porosity > 0.0 && t.porosity <= 1.0)) throw InputError("tensors: porosity must lie in (0, 1]");
  return t;
}

EffectiveTensors read_tensors(const fs::path& path) { return tensors_from_json(read_text(path)); }

std::string format_diagnostics_csv(const std::vector<DiagnosticsRow>& rows) {
  std::string out = std::string(kDiagnosticsHeader) + "\n";
  for (const auto& r : rows) {
    out += format_double(r.t) + "," + format_double(r.mass1) + "," + format_double(r.mass2) + "," +
           format_double(r.charge) + "," + format_double(r.free_energy) + "," + std::to_string(r.picard_iters) +
           "," + format_double(r.loceq_dev) + "\n";
  }
  return out;
}

std::string format_validation_csv(const std::vector<ValidationRow>& rows) {
  std::string out = std::string(kValidationHeader) + "\n";
  for (const auto& r : rows) {
    out += format_double(r.s) + "," + format_double(r.err_phi) + "," + format_double(r.err_n1) + "," +
           format_double(r.err_n2) + "," + format_double(r.err_phi_recon) + "\n";
  }
  return out;
}

}  // namespace pnpup
