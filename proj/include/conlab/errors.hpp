#pragma once

#include <stdexcept>
#include <string>

namespace conlab {

// Process exit codes used by the CLI.
enum class ExitCode : int { Ok = 0, Config = 2, Numeric = 3, Io = 4 };

/// Base class of every error raised by the library. `kind()` is a stable
/// identifier that ends up in the CLI's machine-readable error report.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, ExitCode code, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)), code_(code) {}

  const std::string& kind() const noexcept { return kind_; }
  ExitCode exit_code() const noexcept { return code_; }

 private:
  std::string kind_;
  ExitCode code_;
};

#define CONLAB_DEFINE_ERROR(Name, Code)                 \
  class Name : public Error {                           \
   public:                                              \
    explicit Name(const std::string& what)              \
        : Error(#Name, ExitCode::Code, what) {}         \
  }

CONLAB_DEFINE_ERROR(ConfigError, Config);
CONLAB_DEFINE_ERROR(GraphFormatError, Config);
CONLAB_DEFINE_ERROR(DuplicateEdgeError, Config);
CONLAB_DEFINE_ERROR(IoError, Io);
CONLAB_DEFINE_ERROR(ConnectivityError, Numeric);
CONLAB_DEFINE_ERROR(DomainError, Numeric);
CONLAB_DEFINE_ERROR(StepsizeError, Numeric);
CONLAB_DEFINE_ERROR(DimensionError, Numeric);
CONLAB_DEFINE_ERROR(HistoryUnderflowError, Numeric);
CONLAB_DEFINE_ERROR(NonFiniteError, Numeric);
CONLAB_DEFINE_ERROR(NoSolutionError, Numeric);
CONLAB_DEFINE_ERROR(DegenerateTrajectoryError, Numeric);
CONLAB_DEFINE_ERROR(DegenerateDensityError, Numeric);

#undef CONLAB_DEFINE_ERROR

}  // namespace conlab
