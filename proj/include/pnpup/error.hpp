#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace pnpup {

enum class ErrorKind { Input, Config, Solver, Validation };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Bad geometry, shapes, or arguments handed to a library routine.
class InputError : public Error {
 public:
  explicit InputError(const std::string& what) : Error(ErrorKind::Input, what) {}
};

/// Carries every violation found while loading a run configuration.
class ConfigError : public Error {
 public:
  explicit ConfigError(std::vector<std::string> violations);
  const std::vector<std::string>& violations() const noexcept { return violations_; }

 private:
  std::vector<std::string> violations_;
};

class SolverError : public Error {
 public:
  explicit SolverError(const std::string& what) : Error(ErrorKind::Solver, what) {}
};

class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what) : Error(ErrorKind::Validation, what) {}
};

const char* to_string(ErrorKind kind);

}  // namespace pnpup
