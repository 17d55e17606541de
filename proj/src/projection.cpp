#include "eucal/projection.hpp"

#include <cmath>
#include <string>

namespace eucal {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::DepthAtInfinity: return "depth-at-infinity";
    case ErrorKind::DegenerateGeometry: return "degenerate-geometry";
    case ErrorKind::NoValidPoints: return "no-valid-points";
    case ErrorKind::SingularSeed: return "singular-seed";
    case ErrorKind::InfeasibleSeed: return "infeasible-seed";
    case ErrorKind::EmptyCandidateSet: return "empty-candidate-set";
    case ErrorKind::DegenerateObservation: return "degenerate-observation";
    case ErrorKind::Domain: return "domain";
    case ErrorKind::NoCandidate: return "no-candidate";
    case ErrorKind::InfeasibleNetwork: return "infeasible-network";
    case ErrorKind::GenerationFailure: return "generation-failure";
    case ErrorKind::DimensionMismatch: return "dimension-mismatch";
    case ErrorKind::Parse: return "parse";
    case ErrorKind::InvalidArgument: return "invalid-argument";
    case ErrorKind::NonConvergence: return "non-convergence";
  }
  return "unknown";
}

StereoRig::StereoRig(double baseline_mm) : baseline(baseline_mm) {
  if (!(baseline_mm > 0.0) || !std::isfinite(baseline_mm)) {
    throw Error(ErrorKind::InvalidArgument,
                "stereo baseline must be positive, got " + std::to_string(baseline_mm));
  }
}

CameraModel StereoRig::left(double f1) const { return {f1, Mat3::Identity(), Vec3::Zero()}; }

CameraModel StereoRig::right(double f2) const {
  return {f2, Mat3::Identity(), Vec3(-baseline, 0.0, 0.0)};
}

ObservationSet::ObservationSet(int cameras, int points)
    : cameras_(cameras), points_(points) {
  if (cameras < 0 || points < 0) {
    throw Error(ErrorKind::InvalidArgument, "observation grid dimensions must be non-negative");
  }
  data_.resize(static_cast<std::size_t>(cameras) * points);
}

Projection project(const CameraModel& camera, const WorldPoint& point, double depth_epsilon) {
  const Vec3 p = camera.R * point.vec() + camera.t;
  if (std::abs(p.z()) < depth_epsilon) {
    throw Error(ErrorKind::DepthAtInfinity, "point projects to infinity (depth " +
                                                std::to_string(p.z()) + " mm)");
  }
  return {{camera.f * p.x() / p.z(), camera.f * p.y() / p.z()}, p.z()};
}

Feasibility feasibility(int cameras, int points) {
  const long long value = static_cast<long long>(cameras - 2) * (2LL * points - 7);
  // Below two cameras the product can turn positive again; those inputs are
  // outside the domain of the rule.
  return {cameras >= 2 && points >= 0 && value >= 1, value - 1};
}

}  // namespace eucal
