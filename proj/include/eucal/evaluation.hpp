#pragma once

#include <optional>
#include <span>
#include <vector>

#include "eucal/solver.hpp"
#include "eucal/synthetic.hpp"
#include "eucal/types.hpp"

namespace eucal {

struct CameraErrorStats {
  double rms = 0.0;
  double mean = 0.0;
  double max = 0.0;
  int count = 0;   // entries in the aggregates
  int behind = 0;  // entries excluded because the point is not in front
};

struct ReprojectionReport {
  int cameras = 0;
  int points = 0;
  /// Pixel error per (camera, point), camera-major; NaN when the point is
  /// on or behind the camera plane.
  std::vector<double> errors;
  std::vector<CameraErrorStats> per_camera;
  double overall_rms = 0.0;
  int behind = 0;

  double error(int camera, int point) const {
    return errors[static_cast<std::size_t>(camera) * points + point];
  }
  /// RMS pooled over both stereo cameras.
  double stereo_rms() const;
  /// Largest per-camera RMS among the monocular cameras.
  double worst_monocular_rms() const;
};

ReprojectionReport reprojection_errors(std::span<const CameraModel> cameras,
                                       std::span<const WorldPoint> cloud,
                                       const ObservationSet& obs);

/// Uses the result's cameras (stereo pair at its fixed poses with f1 and
/// rho f1) and cloud. The rig must match the result's baseline.
ReprojectionReport reprojection_errors(const CalibrationResult& result, const StereoRig& rig,
                                       const ObservationSet& obs);

struct ScaleReport {
  Vec3 extent = Vec3::Zero();  // axis-aligned box in the camera-1 frame, mm
  std::optional<double> recovered_baseline;
  std::optional<Vec3> ratios;        // extent / reference extent
  std::optional<double> scale_error;  // geometric mean of ratios minus 1
};

Vec3 bounding_extent(std::span<const WorldPoint> cloud);

ScaleReport scale_report(std::span<const WorldPoint> cloud,
                         std::optional<Vec3> reference_extent = std::nullopt,
                         std::optional<double> recovered_baseline = std::nullopt);

/// Distance between the optical centers of cameras 0 and 1.
double stereo_separation(std::span<const CameraModel> cameras);

struct ParameterErrors {
  std::vector<double> focal_relative;   // per camera
  std::vector<double> rotation_deg;     // per camera, geodesic
  std::vector<double> translation_mm;   // per camera, |t_est - t_true|
  double cloud_rms_mm = 0.0;
  double cloud_relative_rms = 0.0;      // cloud_rms / rms |X_true|

  double max_focal_relative() const;
  double max_rotation_deg() const;
  double max_translation_mm() const;
};

ParameterErrors parameter_errors(std::span<const CameraModel> cameras,
                                 std::span<const WorldPoint> cloud, const GroundTruth& truth);
ParameterErrors parameter_errors(const CalibrationResult& result, const GroundTruth& truth);

}  // namespace eucal
