#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pfcalc {

enum class ErrorKind {
  InvalidName,
  DuplicateCategory,
  MultipleRoots,
  CycleDetected,
  DuplicateEdge,
  UnknownCategory,
  Unreachable,
  UnknownInstance,
  MissingEdgeProbability,
  MissingGamma,
  RootProfileForbidden,
  OutOfRangeProbability,
  InconsistentProbabilities,
  DegenerateBound,
  InfeasibleTarget,
  SyntaxError,
  InvalidArgument,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Every failure raised by the library. `location` names the offending
/// input element (a category, an edge, a JSON pointer, or "line:col").
class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, std::string message, std::string location = {});

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& location() const noexcept { return location_; }

private:
  ErrorKind kind_;
  std::string location_;
};

}  // namespace pfcalc
