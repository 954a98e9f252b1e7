#pragma once

#include <stdexcept>
#include <string>

namespace rossbytrap {

/// Coarse classification used by the CLI to choose an exit code.
enum class ErrorCategory { Config, Compute, Io };

class Error : public std::runtime_error {
public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}
  ErrorCategory category() const noexcept { return category_; }

private:
  ErrorCategory category_;
};

class ComputeError : public Error {
public:
  explicit ComputeError(const std::string& what) : Error(ErrorCategory::Compute, what) {}
};

#define ROSSBYTRAP_COMPUTE_ERROR(Name)                                   \
  class Name : public ComputeError {                                      \
  public:                                                                 \
    explicit Name(const std::string& what) : ComputeError(#Name ": " + what) {} \
  }

// core symbols
ROSSBYTRAP_COMPUTE_ERROR(Inadmissible);
ROSSBYTRAP_COMPUTE_ERROR(DegenerateRoots);
// ray dynamics
ROSSBYTRAP_COMPUTE_ERROR(ToleranceExceeded);
ROSSBYTRAP_COMPUTE_ERROR(NoReturn);
ROSSBYTRAP_COMPUTE_ERROR(NoTurningPoints);
ROSSBYTRAP_COMPUTE_ERROR(QuadratureFailure);
ROSSBYTRAP_COMPUTE_ERROR(NoClosedOrbit);
ROSSBYTRAP_COMPUTE_ERROR(TableOutOfRange);
ROSSBYTRAP_COMPUTE_ERROR(DegenerateOrbit);
// trapped set
ROSSBYTRAP_COMPUTE_ERROR(NoSignChange);
ROSSBYTRAP_COMPUTE_ERROR(FitFailure);
// spectral / modes
ROSSBYTRAP_COMPUTE_ERROR(ResolutionError);
ROSSBYTRAP_COMPUTE_ERROR(AdmissibilityError);
ROSSBYTRAP_COMPUTE_ERROR(WindowError);

#undef ROSSBYTRAP_COMPUTE_ERROR

class ConfigError : public Error {
public:
  explicit ConfigError(const std::string& what) : Error(ErrorCategory::Config, "ConfigError: " + what) {}
};

class IoError : public Error {
public:
  explicit IoError(const std::string& what) : Error(ErrorCategory::Io, "IoError: " + what) {}
};

class ManifestMismatch : public Error {
public:
  explicit ManifestMismatch(const std::string& what)
      : Error(ErrorCategory::Config, "ManifestMismatch: " + what) {}
};

}  // namespace rossbytrap
