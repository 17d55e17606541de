#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

#include "eucal/stereo.hpp"
#include "eucal/types.hpp"

namespace eucal {

using Vec7 = Eigen::Matrix<double, 7, 1>;
using DesignMatrix = Eigen::Matrix<double, Eigen::Dynamic, 7>;

/// Linear system for one monocular camera. Expanding the projection with
/// Z_j = f1 * X_j / x_1j gives, per point,
///
///   x_ij = a1 X + a2 Y + a3 W + a4 - a5 x_ij X - a6 x_ij Y - a7 x_ij W
///
/// with W = X / x_1j, and the same in y with beta. Rows of ax are
/// [X, Y, W, 1, -x X, -x Y, -x W]; ay swaps in y_ij.
struct DesignSystem {
  DesignMatrix ax;
  DesignMatrix ay;
  Eigen::VectorXd bx;
  Eigen::VectorXd by;
};

/// alpha = (f r1, f r2, f f1 r3, f tX, r7, r8, f1 r9) / tZ
/// beta  = (f r4, f r5, f f1 r6, f tY, r7, r8, f1 r9) / tZ
/// The last three entries are shared.
struct CombinedParameters {
  Vec7 alpha;
  Vec7 beta;
};

inline constexpr double kMinLeftAbscissa = 1e-8;  // pixels

/// camera is the 0-based index of a monocular camera (>= 2). base holds
/// one stereo estimate per point.
DesignSystem build_design_system(const ObservationSet& obs, int camera,
                                 std::span<const StereoPointEstimate> base,
                                 double min_left_abscissa = kMinLeftAbscissa);

CombinedParameters pack_parameters(const CameraModel& camera, double f1);

/// Inverts the packing. Both signs of tZ are tried; a candidate survives
/// when the implied matrix is a proper rotation up to `loose_tolerance`
/// (max |R R^T - I| entry), and is then projected onto SO(3). Throws
/// NoCandidate when neither sign survives.
std::vector<CameraModel> extract_camera_parameters(const Vec7& alpha, const Vec7& beta,
                                                   double f1, double loose_tolerance = 0.5);

}  // namespace eucal
