#include "pnpup/pipeline.hpp"

#include <cstdio>
#include <ostream>

#include <json.hpp>

#include "parallel.hpp"
#include "pnpup/microdns.hpp"
#include "pnpup/upscale.hpp"

namespace pnpup {

namespace fs = std::filesystem;
using nlohmann::json;

const char* to_string(Command c) {
  switch (c) {
    case Command::Cell: return "cell";
    case Command::Upscale: return "upscale";
    case Command::Macro: return "macro";
    case Command::Micro: return "micro";
    case Command::Validate: return "validate";
  }
  return "unknown";
}

Command parse_command(const std::string& name) {
  for (Command c : {Command::Cell, Command::Upscale, Command::Macro, Command::Micro, Command::Validate})
    if (name == to_string(c)) return c;
  throw InputError("unknown command '" + name + "'");
}

int exit_code(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Input:
    case ErrorKind::Config: return kExitConfig;
    case ErrorKind::Solver: return kExitSolver;
    case ErrorKind::Validation: return kExitValidation;
  }
  return kExitSolver;
}

fs::path default_output(const RunConfig& cfg, Command command) {
  switch (command) {
    case Command::Cell: return cfg.output_dir / "cell";
    case Command::Upscale: return cfg.output_dir / "tensors.json";
    case Command::Macro: return cfg.output_dir / "macro";
    case Command::Micro: return cfg.output_dir / "micro";
    case Command::Validate: return cfg.output_dir / "report.csv";
  }
  return cfg.output_dir;
}

std::string error_record(Command command, ErrorKind kind, const std::string& message,
                         const std::vector<std::string>& violations) {
  json rec = {{"status", "error"},   {"kind", to_string(kind)}, {"exit_code", exit_code(kind)},
              {"command", to_string(command)}, {"message", message}};
  if (!violations.empty()) rec["violations"] = violations;
  return rec.dump();
}

namespace {

bool writes_directory(Command c) { return c == Command::Cell || c == Command::Macro || c == Command::Micro; }

/// Collects written artifacts for the provenance record.
class ArtifactWriter {
 public:
  ArtifactWriter(const RunConfig& cfg, Command command, PipelineResult& result)
      : cfg_(cfg), command_(command), result_(result) {}

  void write(const fs::path& path, const std::string& content) {
    atomic_write(path, content);
    result_.files.push_back(path);
    records_.push_back({{"path", path.filename().generic_string()}, {"fnv1a", hash_hex(fnv1a(content))}});
  }
  void write_relative(const fs::path& root, const fs::path& rel, const std::string& content) {
    atomic_write(root / rel, content);
    result_.files.push_back(root / rel);
    records_.push_back({{"path", rel.generic_string()}, {"fnv1a", hash_hex(fnv1a(content))}});
  }
  void finish(const fs::path& provenance_path) {
    json config = json::array();
    std::size_t start = 0;
    for (auto nl = cfg_.canonical.find('\n'); nl != std::string::npos; nl = cfg_.canonical.find('\n', start)) {
      config.push_back(cfg_.canonical.substr(start, nl - start));
      start = nl + 1;
    }
    json doc = {{"tool", "pnp-upscale"}, {"version", "0.1.0"}, {"command", to_string(command_)},
                {"config_hash", cfg_.hash}, {"config", config},   {"files", records_}};
    const std::string text = doc.dump(2) + "\n";
    atomic_write(provenance_path, text);
    result_.files.push_back(provenance_path);
  }

 private:
  const RunConfig& cfg_;
  Command command_;
  PipelineResult& result_;
  json records_ = json::array();
};

struct Logger {
  const RunOptions& opts;
  template <typename... Args>
  void operator()(const Args&... args) const {
    if (!opts.verbose || !opts.log) return;
    ((*opts.log) << ... << args) << '\n';
  }
};

UnitCell make_cell(const RunConfig& cfg) {
  if (cfg.geometry.kind == CellKind::Mask) {
    auto cell = load_mask_file(cfg.geometry.mask_path);
    if (cell.dim() != cfg.geometry.dim)
      throw InputError("mask file dimension " + std::to_string(cell.dim()) + " does not match cell.dim = " +
                       std::to_string(cfg.geometry.dim));
    return cell;
  }
  return build_unit_cell(cfg.geometry, cfg.cell_resolution);
}

SolverOptions cell_solver(const RunConfig& cfg, const RunOptions& opts) {
  SolverOptions s = cfg.solver;
  s.threads = std::max(1, opts.threads);
  return s;
}

std::string mask_values_dump(const UnitCell& cell) {
  std::vector<double> v(cell.grid().size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = cell.is_fluid(i) ? 1.0 : 0.0;
  return format_grid_dump("fluid_mask", cell.grid(), v);
}

std::string time_label(double t) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "t%.6g", t);
  return buf;
}

std::string micro_label(double s) { return "s1_" + std::to_string(std::lround(1.0 / s)); }

void log_tensors(const Logger& log, const EffectiveTensors& t) {
  log("porosity ", format_double(t.porosity));
  for (int i = 0; i < t.dim; ++i) {
    std::string row;
    for (int j = 0; j < t.dim; ++j) row += " " + format_double(t.eps0(i, j));
    log("eps0[", i, "]", row);
  }
}

void run_cell(const RunConfig& cfg, const RunOptions& opts, const fs::path& out, PipelineResult& result) {
  const Logger log{opts};
  const auto cell = make_cell(cfg);
  log("cell ", to_string(cell.spec().kind), " N=", cell.dim(), " m=", cell.resolution(), " porosity ",
      porosity(cell));
  const auto hom = homogenize(cell, cfg.physics, cell_solver(cfg, opts), cfg.second_order);
  log_tensors(log, hom.tensors);
  ArtifactWriter w(cfg, Command::Cell, result);
  const int N = cell.dim();
  w.write_relative(out, "kappa.txt", format_grid_dump("kappa", hom.kappa.grid, hom.kappa.values));
  w.write_relative(out, "fluid_mask.txt", mask_values_dump(cell));
  for (int k = 0; k < N; ++k) {
    const auto xi_name = "xi3_" + std::to_string(k);
    const auto eta_name = "eta_" + std::to_string(k);
    w.write_relative(out, xi_name + ".txt",
                     format_grid_dump(xi_name, hom.correctors.xi3[k].grid, hom.correctors.xi3[k].values));
    w.write_relative(out, eta_name + ".txt",
                     format_grid_dump(eta_name, hom.correctors.eta[k].grid, hom.correctors.eta[k].values));
  }
  if (hom.correctors.has_zeta())
    for (int k = 0; k < N; ++k)
      for (int l = 0; l < N; ++l) {
        const auto name = "zeta3_" + std::to_string(k) + std::to_string(l);
        const auto& z = hom.correctors.zeta(k, l);
        w.write_relative(out, name + ".txt", format_grid_dump(name, z.grid, z.values));
      }
  w.write_relative(out, "tensors.json", tensors_to_json(hom.tensors, cfg.hash));
  w.finish(out / "provenance.json");
}

void run_upscale(const RunConfig& cfg, const RunOptions& opts, const fs::path& out, PipelineResult& result) {
  const Logger log{opts};
  const auto cell = make_cell(cfg);
  const auto hom = homogenize(cell, cfg.physics, cell_solver(cfg, opts), false);
  log_tensors(log, hom.tensors);
  const auto diag = diagnose(hom.tensors, hom.kappa);
  log("symmetry defect ", diag.symmetry_defect, ", eigenvalues [", diag.eig_min, ", ", diag.eig_max,
      "], bounds [", diag.reuss, ", ", diag.voigt, "]");
  ArtifactWriter w(cfg, Command::Upscale, result);
  w.write(out, tensors_to_json(hom.tensors, cfg.hash));
  fs::path prov = out;
  prov.replace_extension(".provenance.json");
  w.finish(prov);
}

EffectiveTensors macro_tensors(const RunConfig& cfg, const RunOptions& opts) {
  EffectiveTensors t;
  if (!opts.tensors.empty()) {
    t = read_tensors(opts.tensors);
  } else {
    t = homogenize(make_cell(cfg), cfg.physics, cell_solver(cfg, opts), false).tensors;
  }
  if (t.dim != cfg.macro.dim)
    throw InputError("tensor dimension " + std::to_string(t.dim) + " does not match cell.dim = " +
                     std::to_string(cfg.macro.dim));
  return t;
}

void run_macro_command(const RunConfig& cfg, const RunOptions& opts, const fs::path& out, PipelineResult& result) {
  const Logger log{opts};
  const auto tensors = macro_tensors(cfg, opts);
  const Grid grid(cfg.macro.dim, cfg.macro.resolution, GridKind::Macro);
  auto run = run_macro(cfg.macro, tensors, initial_state(grid, cfg.macro_init, cfg.macro_amplitude),
                       [&](const DiagnosticsRow& r) {
                         log("t=", r.t, " mass1=", r.mass1, " mass2=", r.mass2, " F=", r.free_energy,
                             " picard=", r.picard_iters);
                       });
  ArtifactWriter w(cfg, Command::Macro, result);
  w.write_relative(out, "diagnostics.csv", format_diagnostics_csv(run.rows));
  auto dump_state = [&](const fs::path& dir, const MacroState& s) {
    w.write_relative(out, dir / "u1.txt", format_grid_dump("u1", s.grid, s.u1));
    w.write_relative(out, dir / "u2.txt", format_grid_dump("u2", s.grid, s.u2));
    w.write_relative(out, dir / "u3.txt", format_grid_dump("u3", s.grid, s.u3));
  };
  for (const auto& s : run.snapshots) dump_state(fs::path("snapshots") / time_label(s.t), s);
  dump_state("final", run.final_state);
  w.finish(out / "provenance.json");
}

MacroState micro_seed(const RunConfig& cfg) {
  return initial_state(Grid(cfg.macro.dim, cfg.macro.resolution, GridKind::Macro), cfg.macro_init,
                       cfg.macro_amplitude);
}

void run_micro_command(const RunConfig& cfg, const RunOptions& opts, const fs::path& out, PipelineResult& result) {
  const Logger log{opts};
  const auto cell = make_cell(cfg);
  const auto seed = micro_seed(cfg);
  std::vector<MicroDomain> domains;
  for (double s : cfg.micro_s) domains.push_back(assemble_micro_domain(cell, cfg.physics, s, cfg.micro_budget));
  const auto runs = detail::parallel_map(static_cast<int>(domains.size()), opts.threads, [&](int i) {
    auto init = micro_initial_state(domains[i], seed, cfg.micro, cfg.micro.bc);
    return run_micro(domains[i], std::move(init), cfg.micro);
  });
  ArtifactWriter w(cfg, Command::Micro, result);
  for (std::size_t i = 0; i < domains.size(); ++i) {
    const auto& dom = domains[i];
    const auto& run = runs[i];
    const fs::path dir = micro_label(dom.s);
    log("s=", dom.s, " fine grid ", dom.grid.n(), "^", dom.grid.dim(), " steps ", run.mass1.size());
    const auto& st = run.final_state;
    w.write_relative(out, dir / "nplus.txt", format_grid_dump("nplus", st.grid, st.nplus));
    w.write_relative(out, dir / "nminus.txt", format_grid_dump("nminus", st.grid, st.nminus));
    w.write_relative(out, dir / "phi.txt", format_grid_dump("phi", st.grid, st.phi));
    std::string csv = "step,mass1,mass2,picard_iters\n";
    for (std::size_t k = 0; k < run.mass1.size(); ++k)
      csv += std::to_string(k + 1) + "," + format_double(run.mass1[k]) + "," + format_double(run.mass2[k]) + "," +
             std::to_string(run.picard_iters[k]) + "\n";
    w.write_relative(out, dir / "mass.csv", csv);
  }
  w.finish(out / "provenance.json");
}

void run_validate(const RunConfig& cfg, const RunOptions& opts, const fs::path& out, PipelineResult& result) {
  const Logger log{opts};
  const auto cell = make_cell(cfg);
  const auto hom = homogenize(cell, cfg.physics, cell_solver(cfg, opts), cfg.second_order);
  log_tensors(log, hom.tensors);

  // Macro run on the DNS clock.
  MacroConfig mc = cfg.macro;
  mc.dt = cfg.micro.dt;
  mc.T = cfg.micro.T;
  mc.bc = cfg.micro.bc;
  mc.snapshot_times.clear();
  const auto seed = micro_seed(cfg);
  const auto macro = run_macro(mc, hom.tensors, seed);
  log("macro run finished at t=", macro.final_state.t);

  std::vector<MicroDomain> domains;
  for (double s : cfg.micro_s) domains.push_back(assemble_micro_domain(cell, cfg.physics, s, cfg.micro_budget));
  result.validation = detail::parallel_map(static_cast<int>(domains.size()), opts.threads, [&](int i) {
    const auto& dom = domains[i];
    auto init = micro_initial_state(dom, seed, cfg.micro, cfg.micro.bc);
    const auto dns = run_micro(dom, std::move(init), cfg.micro).final_state;
    const auto rec = reconstruct_two_scale(macro.final_state, hom.correctors, hom.tensors, dom, cfg.micro.bc);
    const auto plain = macro_only(macro.final_state, dom, cfg.micro.bc);
    ValidationRow row;
    row.s = dom.s;
    row.err_phi = compare_fields(dom.grid, dns.phi, plain.phi).l2_rel;
    row.err_n1 = compare_fields(dom.grid, dns.nplus, rec.state.nplus, dom.fluid).l2_rel;
    row.err_n2 = compare_fields(dom.grid, dns.nminus, rec.state.nminus, dom.fluid).l2_rel;
    row.err_phi_recon = compare_fields(dom.grid, dns.phi, rec.state.phi).l2_rel;
    return row;
  });
  for (const auto& r : result.validation)
    log("s=", r.s, " err_phi=", r.err_phi, " err_phi_recon=", r.err_phi_recon, " err_n1=", r.err_n1,
        " err_n2=", r.err_n2);

  ArtifactWriter w(cfg, Command::Validate, result);
  w.write(out, format_validation_csv(result.validation));
  fs::path prov = out;
  prov.replace_extension(".provenance.json");
  w.finish(prov);

  const auto& last = result.validation.back();
  if (!(last.err_phi_recon <= cfg.validation_threshold))
    throw ValidationError("reconstruction error " + format_double(last.err_phi_recon) + " at s = " +
                          format_double(last.s) + " exceeds output.validation_threshold = " +
                          format_double(cfg.validation_threshold));
}

void write_error_file(const fs::path& out, Command command, const std::string& record) {
  const fs::path dir = writes_directory(command) ? out : out.parent_path();
  try {
    atomic_write((dir.empty() ? fs::path(".") : dir) / "error.json", record + "\n");
  } catch (const std::exception&) {
    // The record is still returned to the caller.
  }
}

}  // namespace

PipelineResult run_pipeline(const RunConfig& cfg, Command command, const RunOptions& opts) {
  PipelineResult result;
  const fs::path out = opts.out.empty() ? default_output(cfg, command) : opts.out;
  auto fail = [&](ErrorKind kind, const std::string& message, const std::vector<std::string>& violations = {}) {
    result.exit_code = exit_code(kind);
    result.error_record = error_record(command, kind, message, violations);
    write_error_file(out, command, result.error_record);
  };
  try {
    {
      const fs::path stale = (writes_directory(command) ? out : out.parent_path()) / "error.json";
      std::error_code ec;
      fs::remove(stale, ec);
    }
    switch (command) {
      case Command::Cell: run_cell(cfg, opts, out, result); break;
      case Command::Upscale: run_upscale(cfg, opts, out, result); break;
      case Command::Macro: run_macro_command(cfg, opts, out, result); break;
      case Command::Micro: run_micro_command(cfg, opts, out, result); break;
      case Command::Validate: run_validate(cfg, opts, out, result); break;
    }
  } catch (const ConfigError& e) {
    fail(ErrorKind::Config, e.what(), e.violations());
  } catch (const Error& e) {
    fail(e.kind(), e.what());
  } catch (const std::bad_alloc&) {
    fail(ErrorKind::Solver, "out of memory");
  } catch (const std::exception& e) {
    fail(ErrorKind::Solver, e.what());
  }
  return result;
}

}  // namespace pnpup
