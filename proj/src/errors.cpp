#include "lgeom/errors.hpp"

namespace lgeom {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::InvalidChart: return "InvalidChart";
    case ErrorKind::NegativeTau: return "NegativeTau";
    case ErrorKind::NotApplicable: return "NotApplicable";
    case ErrorKind::ToleranceNotMet: return "ToleranceNotMet";
    case ErrorKind::ChartEscape: return "ChartEscape";
    case ErrorKind::UnresolvedCluster: return "UnresolvedCluster";
    case ErrorKind::ConjugateEndpoint: return "ConjugateEndpoint";
    case ErrorKind::QuadratureFailure: return "QuadratureFailure";
    case ErrorKind::EigensolverFailure: return "EigensolverFailure";
    case ErrorKind::NonMonotoneTau: return "NonMonotoneTau";
    case ErrorKind::StepTooSmall: return "StepTooSmall";
    case ErrorKind::InvalidConfig: return "InvalidConfig";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& what)
    : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

}  // namespace lgeom
