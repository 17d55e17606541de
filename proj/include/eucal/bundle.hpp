#pragma once

#include "eucal/lm.hpp"
#include "eucal/solver.hpp"

namespace eucal {

struct BundleConfig {
  LmOptions lm;
  /// Reprojection RMS (pixels) treated as an exact fit: no refinement.
  double zero_residual_px = 1e-9;
};

struct DriftReport {
  double input_baseline = 0.0;      // mm
  double recovered_baseline = 0.0;  // distance between stereo optical centers, mm
  double baseline_drift = 0.0;      // |recovered - input|, mm
  Vec3 extent_before = Vec3::Zero();
  Vec3 extent_after = Vec3::Zero();
  double rms_before = 0.0;  // pixels, all cameras
  double rms_after = 0.0;
  int iterations = 0;
  bool converged = false;
};

struct BundleOutcome {
  /// All cameras and points after refinement. The stereo pair is no longer
  /// tied to its rig; objective_value holds the sum of squared reprojection
  /// errors and residuals hold per-point reprojection residuals of the
  /// monocular cameras.
  CalibrationResult result;
  DriftReport drift;
};

/// Conventional bundle adjustment over every camera (f, R, t) and every
/// point with nothing held fixed, so the baseline constraint is dropped.
/// Non-convergence is reported through drift.converged with the best state.
BundleOutcome refine_unconstrained_ba(const CalibrationResult& result, const ObservationSet& obs,
                                      const BundleConfig& config = {});

}  // namespace eucal
