#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <optional>

#include "pnpup/pipeline.hpp"

namespace py = pybind11;
using namespace pnpup;

namespace {

std::vector<py::ssize_t> shape_of(const Grid& g) { return std::vector<py::ssize_t>(g.dim(), g.n()); }

py::array_t<double> to_numpy(const Grid& g, std::span<const double> v) {
  py::array_t<double> a(shape_of(g));
  std::copy(v.begin(), v.end(), a.mutable_data());
  return a;
}

py::array_t<double> stack(const std::vector<ScalarField>& fields) {
  if (fields.empty()) return py::array_t<double>(std::vector<py::ssize_t>{0});
  auto shape = shape_of(fields.front().grid);
  shape.insert(shape.begin(), static_cast<py::ssize_t>(fields.size()));
  py::array_t<double> a(shape);
  double* out = a.mutable_data();
  for (const auto& f : fields) out = std::copy(f.values.begin(), f.values.end(), out);
  return a;
}

std::vector<double> from_numpy(const py::array_t<double, py::array::c_style | py::array::forcecast>& a,
                               const Grid& g, const char* name) {
  if (static_cast<std::size_t>(a.size()) != g.size())
    throw InputError(std::string(name) + " has " + std::to_string(a.size()) + " entries, expected " +
                     std::to_string(g.size()));
  return {a.data(), a.data() + a.size()};
}

UnitCell make_cell(const std::string& kind, int resolution, int dim, double fraction, int axis, double radius,
                   const std::string& mask_path) {
  GeometrySpec spec;
  spec.kind = parse_cell_kind(kind);
  spec.dim = dim;
  spec.fraction = fraction;
  spec.axis = axis;
  spec.radius = radius;
  spec.mask_path = mask_path;
  if (spec.kind == CellKind::Mask) return load_mask_file(spec.mask_path);
  return build_unit_cell(spec, resolution);
}

py::dict tensors_dict(const EffectiveTensors& t) {
  py::dict d;
  d["dim"] = t.dim;
  d["porosity"] = t.porosity;
  d["eps0"] = t.eps0;
  d["M"] = t.M;
  d["Hhat"] = t.Hhat;
  return d;
}

EffectiveTensors tensors_from(const py::dict& d) {
  EffectiveTensors t;
  t.eps0 = d["eps0"].cast<Eigen::MatrixXd>();
  t.dim = static_cast<int>(t.eps0.rows());
  t.porosity = d.contains("porosity") ? d["porosity"].cast<double>() : 1.0;
  t.M = d.contains("M") ? d["M"].cast<Eigen::MatrixXd>() : Eigen::MatrixXd::Identity(t.dim, t.dim);
  t.Hhat = d.contains("Hhat") ? d["Hhat"].cast<Eigen::MatrixXd>() : Eigen::MatrixXd::Zero(t.dim, t.dim);
  for (const auto* m : {&t.eps0, &t.M, &t.Hhat})
    if (m->rows() != t.dim || m->cols() != t.dim) throw InputError("tensors must all be dim x dim");
  return t;
}

MacroBoundary boundary(const std::string& s) {
  if (s == "academic") return MacroBoundary::Academic;
  if (s == "neumann") return MacroBoundary::Neumann;
  throw InputError("bc must be 'academic' or 'neumann', got '" + s + "'");
}

DriftScheme drift(const std::string& s) {
  if (s == "upwind") return DriftScheme::Upwind;
  if (s == "central") return DriftScheme::Central;
  throw InputError("drift must be 'upwind' or 'central', got '" + s + "'");
}

}  // namespace

PYBIND11_MODULE(_pnp_upscale, m) {
  m.doc() = "Periodic homogenization and two-scale simulation of Poisson-Nernst-Planck systems";
  m.attr("__version__") = "0.1.0";

  static py::exception<Error> base(m, "PnpUpscaleError", PyExc_RuntimeError);
  static py::exception<InputError> input(m, "InputError", base.ptr());
  static py::exception<ConfigError> config(m, "ConfigError", base.ptr());
  static py::exception<SolverError> solver(m, "SolverError", base.ptr());
  static py::exception<ValidationError> validation(m, "ValidationError", base.ptr());
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const ConfigError& e) {
      std::string msg = e.what();
      for (const auto& v : e.violations()) msg += "\n  " + v;
      PyErr_SetString(config.ptr(), msg.c_str());
    } catch (const InputError& e) {
      PyErr_SetString(input.ptr(), e.what());
    } catch (const SolverError& e) {
      PyErr_SetString(solver.ptr(), e.what());
    } catch (const ValidationError& e) {
      PyErr_SetString(validation.ptr(), e.what());
    } catch (const Error& e) {
      PyErr_SetString(base.ptr(), e.what());
    }
  });

  m.def(
      "unit_cell",
      [](const std::string& kind, int resolution, int dim, double fraction, int axis, double radius,
         const std::string& mask_path) {
        const auto cell = make_cell(kind, resolution, dim, fraction, axis, radius, mask_path);
        py::array_t<bool> a(shape_of(cell.grid()));
        auto* out = a.mutable_data();
        for (std::size_t v = 0; v < cell.grid().size(); ++v) out[v] = cell.is_fluid(v);
        return a;
      },
      py::arg("kind"), py::arg("resolution") = 32, py::arg("dim") = 2, py::arg("fraction") = 0.5, py::arg("axis") = 0,
      py::arg("radius") = 0.25, py::arg("mask_path") = "", "Fluid mask of a reference cell (True = fluid).");

  m.def(
      "homogenize",
      [](const std::string& kind, int resolution, double lam, double alpha, int dim, double fraction, int axis,
         double radius, const std::string& mask_path, bool second_order, double tol, int threads) {
        const auto cell = make_cell(kind, resolution, dim, fraction, axis, radius, mask_path);
        SolverOptions opts;
        opts.tol = tol;
        opts.threads = threads;
        HomogenizationResult h;
        {
          py::gil_scoped_release release;
          h = homogenize(cell, PermittivityParams{lam, alpha}, opts, second_order);
        }
        auto d = tensors_dict(h.tensors);
        d["kappa"] = to_numpy(h.kappa.grid, h.kappa.values);
        d["xi3"] = stack(h.correctors.xi3);
        d["eta"] = stack(h.correctors.eta);
        d["zeta3"] = stack(h.correctors.zeta3);
        return d;
      },
      py::arg("kind"), py::arg("resolution") = 32, py::arg("lam") = 1.0, py::arg("alpha") = 1.0, py::arg("dim") = 2,
      py::arg("fraction") = 0.5, py::arg("axis") = 0, py::arg("radius") = 0.25, py::arg("mask_path") = "",
      py::arg("second_order") = true, py::arg("tol") = 1e-10, py::arg("threads") = 1,
      "Cell problems and effective tensors. Corrector arrays are stacked along the first axis.");

  m.def(
      "macro_poisson",
      [](const py::array_t<double, py::array::c_style | py::array::forcecast>& charge, const Eigen::MatrixXd& eps0,
         double porosity, double tol) {
        const int dim = static_cast<int>(charge.ndim());
        const Grid g(dim, static_cast<int>(charge.shape(0)), GridKind::Macro);
        const auto c = from_numpy(charge, g, "charge");
        const std::vector<double> zero(g.size(), 0.0);
        return to_numpy(g, solve_macro_poisson(g, c, zero, eps0, porosity, tol).u3);
      },
      py::arg("charge"), py::arg("eps0"), py::arg("porosity") = 1.0, py::arg("tol") = 1e-10,
      "Solves -div(eps0 grad u3) = porosity * charge with no-flux walls; returns the mean-zero potential.");

  m.def(
      "run_macro",
      [](const py::dict& tensors, int resolution, double dt, double T, const std::string& bc, const std::string& init,
         double amplitude, const std::string& scheme, std::optional<double> lambda2,
         std::optional<py::array_t<double>> u1, std::optional<py::array_t<double>> u2) {
        const auto t = tensors_from(tensors);
        MacroConfig cfg;
        cfg.dim = t.dim;
        cfg.resolution = resolution;
        cfg.dt = dt;
        cfg.T = T;
        cfg.bc = boundary(bc);
        cfg.drift = drift(scheme);
        cfg.lambda2 = lambda2.value_or(1.0);
        const Grid g(t.dim, resolution, GridKind::Macro);
        auto state = initial_state(g, init, amplitude);
        if (u1) state.u1 = from_numpy(*u1, g, "u1");
        if (u2) state.u2 = from_numpy(*u2, g, "u2");
        MacroRun run;
        {
          py::gil_scoped_release release;
          run = run_macro(cfg, t, std::move(state));
        }
        const auto& f = run.final_state;
        py::dict d;
        d["t"] = f.t;
        d["u1"] = to_numpy(g, f.u1);
        d["u2"] = to_numpy(g, f.u2);
        d["u3"] = to_numpy(g, f.u3);
        std::vector<double> time, m1, m2, charge, energy, loceq;
        std::vector<int> picard;
        for (const auto& r : run.rows) {
          time.push_back(r.t);
          m1.push_back(r.mass1);
          m2.push_back(r.mass2);
          charge.push_back(r.charge);
          energy.push_back(r.free_energy);
          picard.push_back(r.picard_iters);
          loceq.push_back(r.loceq_dev);
        }
        py::dict diag;
        diag["t"] = py::array(py::cast(time));
        diag["mass1"] = py::array(py::cast(m1));
        diag["mass2"] = py::array(py::cast(m2));
        diag["charge"] = py::array(py::cast(charge));
        diag["free_energy"] = py::array(py::cast(energy));
        diag["picard_iters"] = py::array(py::cast(picard));
        diag["loceq_dev"] = py::array(py::cast(loceq));
        d["diagnostics"] = diag;
        return d;
      },
      py::arg("tensors"), py::arg("resolution") = 64, py::arg("dt") = 1e-3, py::arg("T") = 1e-2,
      py::arg("bc") = "academic", py::arg("init") = "dipole", py::arg("amplitude") = 1.0, py::arg("drift") = "upwind",
      py::arg("lambda2") = py::none(), py::arg("u1") = py::none(), py::arg("u2") = py::none(),
      "Upscaled PNP time integration. `tensors` is a dict as returned by homogenize (eps0 required).");

  m.def(
      "config_hash",
      [](const std::filesystem::path& path) {
        const auto cfg = load_config(path);
        return py::make_tuple(cfg.hash, cfg.canonical);
      },
      py::arg("path"), "Validates a run configuration; returns (hash, canonical listing).");

  m.def(
      "run",
      [](const std::filesystem::path& config_path, const std::string& command, std::optional<std::filesystem::path> out,
         int threads) {
        const auto cfg = load_config(config_path);
        RunOptions opts;
        if (out) opts.out = *out;
        opts.threads = threads;
        PipelineResult r;
        {
          py::gil_scoped_release release;
          r = run_pipeline(cfg, parse_command(command), opts);
        }
        py::dict d;
        d["exit_code"] = r.exit_code;
        std::vector<std::string> files;
        for (const auto& f : r.files) files.push_back(f.string());
        d["files"] = files;
        d["error"] = r.error_record;
        py::list rows;
        for (const auto& v : r.validation) {
          py::dict row;
          row["s"] = v.s;
          row["err_phi_L2"] = v.err_phi;
          row["err_n1_L2"] = v.err_n1;
          row["err_n2_L2"] = v.err_n2;
          row["err_phi_recon_L2"] = v.err_phi_recon;
          rows.append(row);
        }
        d["validation"] = rows;
        return d;
      },
      py::arg("config"), py::arg("command"), py::arg("out") = py::none(), py::arg("threads") = 1,
      "Runs one pipeline command (cell, upscale, macro, micro, validate) and returns its exit code and artifacts.");
}
