#pragma once

#include <cstdint>
#include <vector>

#include "eucal/types.hpp"

namespace eucal {

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

/// Scene recipe for ground-truth generation. Lengths in millimeters,
/// focal lengths and image sizes in pixels, angles in degrees.
struct SceneSpec {
  int cameras = 4;
  int points = 57;
  double baseline = 125.0;
  Vec3 box = Vec3(98.0, 168.0, 75.0);  // X x Y x Z extents of the point envelope
  /// Envelope center. Default X is the stereo midpoint.
  Vec3 box_center = Vec3(62.5, 0.0, 600.0);
  double max_rotation_deg = 45.0;  // monocular camera rotation angle bound
  Range distance{450.0, 800.0};    // monocular camera to envelope center
  double lateral_jitter = 40.0;    // optical-axis offset of monocular cameras
  Range stereo_focal{800.0, 1200.0};
  Range monocular_focal{800.0, 1600.0};
  double image_width = 1280.0;
  double image_height = 1024.0;
  double noise_sigma = 0.0;
  std::uint64_t seed = 1;
  double y_margin = 1.0;           // |Y| >= margin unless degenerate points requested
  double x_margin = 1.0;           // |X| >= margin keeps x_1j away from zero
  int degenerate_points = 0;       // points placed exactly on Y = 0
  /// |tZ| of each monocular camera must exceed this fraction of its
  /// distance to the envelope center.
  double tz_fraction = 0.1;
  int max_attempts = 1000;

  void validate() const;
};

struct GroundTruth {
  SceneSpec spec;
  std::vector<CameraModel> cameras;  // 0, 1 = stereo pair
  std::vector<WorldPoint> points;
  ObservationSet clean;
  ObservationSet noisy;
};

/// Deterministic given spec.seed. Throws GenerationFailure when rejection
/// sampling runs out of attempts.
GroundTruth generate(const SceneSpec& spec);

/// Adds i.i.d. N(0, sigma^2) to every coordinate.
ObservationSet add_noise(const ObservationSet& obs, double sigma, std::uint64_t seed);

/// Noiseless observations of `points` in `cameras`.
ObservationSet observe(const std::vector<CameraModel>& cameras,
                       const std::vector<WorldPoint>& points);

}  // namespace eucal
