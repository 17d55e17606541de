#pragma once

#include <stdexcept>
#include <string>

namespace eucal {

enum class ErrorKind {
  DepthAtInfinity,
  DegenerateGeometry,
  NoValidPoints,
  SingularSeed,
  InfeasibleSeed,
  EmptyCandidateSet,
  DegenerateObservation,
  Domain,
  NoCandidate,
  InfeasibleNetwork,
  GenerationFailure,
  DimensionMismatch,
  Parse,
  InvalidArgument,
  NonConvergence,
};

const char* to_string(ErrorKind kind);

/// Base error for everything the library throws. The kind lets callers (the
/// CLI in particular) map failures to exit codes without string matching.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Degenerate stereo geometry at a specific point index.
class DegeneratePointError : public Error {
 public:
  DegeneratePointError(int point_index, const std::string& what)
      : Error(ErrorKind::DegenerateGeometry, what), point_index_(point_index) {}

  int point_index() const noexcept { return point_index_; }

 private:
  int point_index_;
};

}  // namespace eucal
