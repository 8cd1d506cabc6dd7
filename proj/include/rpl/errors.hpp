#pragma once

#include <stdexcept>
#include <string>

namespace rpl {

/// Base class of every error raised by the library. The CLI maps the
/// subclasses onto process exit codes (see cli/run.hpp).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// geometry
class InvalidCurveError : public Error { using Error::Error; };
class PerturbationTooLargeError : public Error { using Error::Error; };
class DegreeTooLowError : public Error { using Error::Error; };

// mesh
class ResolutionError : public Error { using Error::Error; };

// solvers
class DomainError : public Error { using Error::Error; };
class ConvergenceError : public Error { using Error::Error; };
class BracketError : public Error { using Error::Error; };

// shape derivatives
class NormalizationError : public Error { using Error::Error; };
class WrongProblemError : public Error { using Error::Error; };

// validation
class FdInstabilityError : public Error { using Error::Error; };

// cli
class ConfigError : public Error { using Error::Error; };

}  // namespace rpl
