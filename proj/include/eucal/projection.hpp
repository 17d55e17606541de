#pragma once

#include "eucal/types.hpp"

namespace eucal {

inline constexpr double kDefaultDepthEpsilon = 1e-9;  // mm

/// Forward projection of a world point. Throws DepthAtInfinity when the
/// point lies on the camera plane (|depth| < depth_epsilon).
Projection project(const CameraModel& camera, const WorldPoint& point,
                   double depth_epsilon = kDefaultDepthEpsilon);

struct Feasibility {
  bool feasible = false;
  long long slack = 0;  // (M-2)(2N-7) - 1
};

/// Counting condition for a unique solution: (M-2)(2N-7) >= 1, which holds
/// exactly when M >= 3 and N >= 4.
Feasibility feasibility(int cameras, int points);

}  // namespace eucal
