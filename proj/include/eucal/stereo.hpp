#pragma once

#include <vector>

#include "eucal/types.hpp"

namespace eucal {

enum class StereoBranch {
  Primary,   // cross-ratio closed form
  Fallback,  // x-disparity form, used when the point sits near Y = 0
};

/// Baseline-scaled stereo estimate of one point. X and Y do not depend on
/// f1; depth is Z = f1 * z_per_f1.
struct StereoPointEstimate {
  double X = 0.0;
  double Y = 0.0;
  double z_per_f1 = 0.0;  // mm per pixel of f1
  StereoBranch branch = StereoBranch::Primary;

  WorldPoint at(double f1) const { return {X, Y, f1 * z_per_f1}; }
};

enum class RatioAggregate { Mean, Median };

struct FocalRatio {
  double rho = 1.0;  // f2 / f1
  std::vector<double> per_point_ratios;
  double dispersion = 0.0;  // population standard deviation of the ratios
};

struct StereoTolerances {
  /// |x1 y2 - x2 y1| / (|x1 y2| + |x2 y1|) below this selects the fallback.
  double relative_denominator = 1e-8;
  /// Same relative test for the fallback denominator rho x1 - x2.
  double fallback_denominator = 1e-12;
  /// Points with |y1| below this (pixels) do not vote for the focal ratio.
  double min_ratio_y = 1e-8;
};

StereoPointEstimate triangulate_xy(const ImagePoint& left, const ImagePoint& right,
                                   double baseline, double rho,
                                   const StereoTolerances& tol = {});

FocalRatio estimate_focal_ratio(const ObservationSet& obs,
                                RatioAggregate aggregate = RatioAggregate::Mean,
                                const StereoTolerances& tol = {});

/// Triangulates every point from the stereo pair (cameras 0 and 1).
/// Throws DegeneratePointError naming the lowest failing point index.
std::vector<StereoPointEstimate> triangulate_stereo(const ObservationSet& obs, double baseline,
                                                    double rho,
                                                    const StereoTolerances& tol = {});

std::vector<WorldPoint> reconstruct_cloud(const ObservationSet& obs, const StereoRig& rig,
                                          double f1, double rho,
                                          const StereoTolerances& tol = {});

/// Same, estimating the focal ratio from the observations first.
std::vector<WorldPoint> reconstruct_cloud(const ObservationSet& obs, const StereoRig& rig,
                                          double f1);

}  // namespace eucal
