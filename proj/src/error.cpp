#include "pnpup/error.hpp"

namespace pnpup {

namespace {
std::string join_violations(const std::vector<std::string>& v) {
  std::string out = "invalid configuration";
  for (const auto& s : v) {
    out += "\n  ";
    out += s;
  }
  return out;
}
}  // namespace

ConfigError::ConfigError(std::vector<std::string> violations)
    : Error(ErrorKind::Config, join_violations(violations)), violations_(std::move(violations)) {}

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Input: return "input";
    case ErrorKind::Config: return "config";
    case ErrorKind::Solver: return "solver";
    case ErrorKind::Validation: return "validation";
  }
  return "unknown";
}

}  // namespace pnpup
