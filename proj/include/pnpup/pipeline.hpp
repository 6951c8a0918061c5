#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "pnpup/config.hpp"
#include "pnpup/error.hpp"
#include "pnpup/io.hpp"

namespace pnpup {

enum class Command { Cell, Upscale, Macro, Micro, Validate };
const char* to_string(Command c);
Command parse_command(const std::string& name);

/// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitSolver = 3;
inline constexpr int kExitValidation = 4;
int exit_code(ErrorKind kind) noexcept;

struct RunOptions {
  std::filesystem::path out;      // empty: derived from output.directory
  std::filesystem::path tensors;  // macro: precomputed tensors.json
  int threads = 1;
  bool verbose = false;
  std::ostream* log = nullptr;
};

struct PipelineResult {
  int exit_code = kExitOk;
  std::vector<std::filesystem::path> files;  // artifacts written, in order
  std::string error_record;                  // JSON object when exit_code != 0
  std::vector<ValidationRow> validation;     // validate only
};

/// Runs one command end to end. Never throws: failures are mapped to an exit
/// code and a JSON error record (also written as error.json next to the
/// outputs when the output location is writable).
PipelineResult run_pipeline(const RunConfig& cfg, Command command, const RunOptions& opts);

/// Resolved output location of a command (directory or file).
std::filesystem::path default_output(const RunConfig& cfg, Command command);

/// {"status":"error","kind":...,"exit_code":...,"command":...,"message":...,"violations":[...]}
std::string error_record(Command command, ErrorKind kind, const std::string& message,
                         const std::vector<std::string>& violations = {});

}  // namespace pnpup
