#pragma once

#include <stdexcept>
#include <string>

namespace concord {

enum class ErrorKind {
  dimension,
  validation,
  parameter,
  state,
  lookup,
  configuration,
  feasibility,
  size,
  io,
  fit,
};

const char* to_string(ErrorKind kind) noexcept;

/// Base class for every error raised by the engine. The kind drives the CLI exit code.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

#define CONCORD_DEFINE_ERROR(Name, Kind) \
  class Name : public Error {            \
   public:                               \
    explicit Name(const std::string& what) : Error(ErrorKind::Kind, what) {} \
  };

CONCORD_DEFINE_ERROR(DimensionError, dimension)
CONCORD_DEFINE_ERROR(ValidationError, validation)
CONCORD_DEFINE_ERROR(ParameterError, parameter)
CONCORD_DEFINE_ERROR(StateError, state)
CONCORD_DEFINE_ERROR(LookupError, lookup)
CONCORD_DEFINE_ERROR(ConfigurationError, configuration)
CONCORD_DEFINE_ERROR(FeasibilityError, feasibility)
CONCORD_DEFINE_ERROR(SizeError, size)
CONCORD_DEFINE_ERROR(IoError, io)
CONCORD_DEFINE_ERROR(FitError, fit)

#undef CONCORD_DEFINE_ERROR

}  // namespace concord
