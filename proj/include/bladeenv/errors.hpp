#pragma once

#include <stdexcept>
#include <string>

namespace bladeenv {

/// Invalid argument or violated precondition.
class DomainError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical routine failed (non-convergence, empty polytope, indefinite matrix).
class NumericalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Malformed or schema-invalid pipeline configuration.
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Missing, unreadable or stale upstream artifact.
class ArtifactError : public std::runtime_error {
public:
  ArtifactError(const std::string& stage, const std::string& what);
  const std::string& stage() const noexcept { return stage_; }

private:
  std::string stage_;
};

/// Process exit codes of the command line tool.
enum class ExitCode : int {
  kSuccess = 0,
  kConfigError = 2,
  kArtifactError = 3,
  kNumericalError = 4,
};

}  // namespace bladeenv
