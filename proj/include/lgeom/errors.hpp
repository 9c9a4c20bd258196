#pragma once

#include <stdexcept>
#include <string>

namespace lgeom {

enum class ErrorKind {
  InvalidArgument,
  InvalidChart,
  NegativeTau,
  NotApplicable,
  ToleranceNotMet,
  ChartEscape,
  UnresolvedCluster,
  ConjugateEndpoint,
  QuadratureFailure,
  EigensolverFailure,
  NonMonotoneTau,
  StepTooSmall,
  InvalidConfig,
};

const char* to_string(ErrorKind kind);

/// Single exception type for the library; callers branch on kind().
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what);
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace lgeom
