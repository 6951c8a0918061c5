// pnp-upscale: cell correctors, effective tensors, upscaled and direct PNP runs.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "pnpup/config.hpp"
#include "pnpup/pipeline.hpp"

namespace {

int report_config_error(const std::string& command, const pnpup::ConfigError& e) {
  std::cerr << pnpup::error_record(pnpup::parse_command(command), pnpup::ErrorKind::Config, e.what(), e.violations())
            << '\n';
  for (const auto& v : e.violations()) std::cerr << "  " << v << '\n';
  return pnpup::kExitConfig;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Periodic homogenization of the Poisson-Nernst-Planck system"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path, out_path, tensors_path;
  int threads = 1;
  bool verbose = false;
  app.add_option("--config", config_path, "Run configuration file")->required()->check(CLI::ExistingFile);
  app.add_option("--out", out_path, "Output directory or file (default from output.directory)");
  app.add_option("--threads", threads, "Worker threads for independent solves")->check(CLI::Range(1, 256));
  app.add_flag("-v,--verbose", verbose, "Progress on stderr");

  app.add_subcommand("cell", "Solve the cell problems and dump correctors and tensors");
  app.add_subcommand("upscale", "Compute the effective tensors (tensors.json)");
  auto* macro = app.add_subcommand("macro", "Run the upscaled PNP system");
  macro->add_option("--tensors", tensors_path, "Precomputed tensors.json")->check(CLI::ExistingFile);
  app.add_subcommand("micro", "Run the direct simulation for each configured s");
  app.add_subcommand("validate", "Compare direct simulation with the two-scale reconstruction");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : pnpup::kExitConfig;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  pnpup::RunConfig cfg;
  try {
    cfg = pnpup::load_config(config_path);
  } catch (const pnpup::ConfigError& e) {
    return report_config_error(command, e);
  }

  pnpup::RunOptions opts;
  opts.out = out_path;
  opts.tensors = tensors_path;
  opts.threads = threads;
  opts.verbose = verbose;
  opts.log = &std::cerr;

  const auto result = pnpup::run_pipeline(cfg, pnpup::parse_command(command), opts);
  if (result.exit_code != pnpup::kExitOk) {
    std::cerr << result.error_record << '\n';
    return result.exit_code;
  }
  if (command == "validate") {
    std::cout << pnpup::format_validation_csv(result.validation);
  }
  if (verbose)
    for (const auto& f : result.files) std::cerr << "wrote " << f.string() << '\n';
  return pnpup::kExitOk;
}
