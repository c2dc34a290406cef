#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace loopshape {

enum class ErrorCode {
  InvalidArgument,
  DomainMismatch,
  AboveNyquist,
  OutsideFrdRange,
  PoleArgument,
  OrderOutOfRange,
  UnsupportedOrder,
  IterationBudget,
  DegenerateInterpolation,
  ComplexResidue,
  InvalidSpec,
  InsufficientGrid,
  ImproperTransferFunction,
  BilinearSingularity,
  FrdPlantUnsupported,
  VersionUnsupported,
  SchemaViolation,
  MalformedRow,
  NonMonotoneFrequencies,
  MixedColumnSchemas,
};

std::string_view error_name(ErrorCode code);

/// Module that raises a given error, used in CLI and HTTP error bodies.
std::string_view error_module(ErrorCode code);

/// Every domain failure in the library is reported through this type. The
/// code carries the machine-readable name; what() carries the detail.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail)
      : std::runtime_error(detail), code_(code) {}

  ErrorCode code() const noexcept { return code_; }
  std::string_view name() const noexcept { return error_name(code_); }

 private:
  ErrorCode code_;
};

/// SchemaViolation with a JSON-pointer-like path to the offending field.
class SchemaError : public Error {
 public:
  SchemaError(std::string path, const std::string& detail)
      : Error(ErrorCode::SchemaViolation, path + ": " + detail),
        path_(std::move(path)) {}

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

/// MalformedRow with the 1-based line number in the source text.
class RowError : public Error {
 public:
  RowError(ErrorCode code, std::size_t line, const std::string& detail)
      : Error(code, "line " + std::to_string(line) + ": " + detail),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace loopshape
