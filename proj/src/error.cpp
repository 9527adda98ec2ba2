#include "pfcalc/error.hpp"

namespace pfcalc {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidName: return "InvalidName";
    case ErrorKind::DuplicateCategory: return "DuplicateCategory";
    case ErrorKind::MultipleRoots: return "MultipleRoots";
    case ErrorKind::CycleDetected: return "CycleDetected";
    case ErrorKind::DuplicateEdge: return "DuplicateEdge";
    case ErrorKind::UnknownCategory: return "UnknownCategory";
    case ErrorKind::Unreachable: return "Unreachable";
    case ErrorKind::UnknownInstance: return "UnknownInstance";
    case ErrorKind::MissingEdgeProbability: return "MissingEdgeProbability";
    case ErrorKind::MissingGamma: return "MissingGamma";
    case ErrorKind::RootProfileForbidden: return "RootProfileForbidden";
    case ErrorKind::OutOfRangeProbability: return "OutOfRangeProbability";
    case ErrorKind::InconsistentProbabilities: return "InconsistentProbabilities";
    case ErrorKind::DegenerateBound: return "DegenerateBound";
    case ErrorKind::InfeasibleTarget: return "InfeasibleTarget";
    case ErrorKind::SyntaxError: return "SyntaxError";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

namespace {

std::string compose(ErrorKind kind, const std::string& message,
                    const std::string& location) {
  std::string out(to_string(kind));
  if (!location.empty()) {
    out += " at ";
    out += location;
  }
  out += ": ";
  out += message;
  return out;
}

}  // namespace

Error::Error(ErrorKind kind, std::string message, std::string location)
    : std::runtime_error(compose(kind, message, location)),
      kind_(kind),
      location_(std::move(location)) {}

}  // namespace pfcalc
