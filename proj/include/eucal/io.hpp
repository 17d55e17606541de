#pragma once

// File formats:
//   correspondences  CSV  camera_id,point_id,x,y   (1-based ids; cameras 1, 2
//                                                   are the stereo pair)
//   calibration      JSON schema_version 1, see calibration_to_json
//   ground truth     JSON schema_version 1, see ground_truth_to_json
//   point cloud      ASCII PLY, float x y z in millimeters
//   reprojection     CSV  camera_id,point_id,error_px

#include <iosfwd>
#include <optional>
#include <span>
#include <string>

#include "eucal/bundle.hpp"
#include "eucal/evaluation.hpp"
#include "eucal/solver.hpp"
#include "eucal/synthetic.hpp"

namespace eucal::io {

inline constexpr int kSchemaVersion = 1;

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

/// Reads a complete correspondence grid. Point ids must cover 1..N and
/// camera ids 1..M. When `principal_point` is set, raw corner-origin pixels
/// are shifted to principal-point-centered coordinates. Errors name
/// `source` and the offending line.
ObservationSet read_correspondences(std::istream& in, const std::string& source,
                                    std::optional<Vec2> principal_point = std::nullopt);
ObservationSet read_correspondences_file(const std::string& path,
                                         std::optional<Vec2> principal_point = std::nullopt);
void write_correspondences(std::ostream& out, const ObservationSet& obs);

std::string calibration_to_json(const CalibrationResult& result, bool include_cloud = false);
/// Rejects rotations that are not orthonormal within 1e-6. The cloud is
/// filled only when the file carries points_mm.
CalibrationResult calibration_from_json(const std::string& text);

std::string scene_spec_to_json(const SceneSpec& spec);
/// Starts from `base` and overrides every key present in the document.
SceneSpec scene_spec_from_json(const std::string& text, SceneSpec base = {});

std::string ground_truth_to_json(const GroundTruth& truth);
/// Cameras, points and spec; clean observations are recomputed and the
/// noisy set is left equal to them.
GroundTruth ground_truth_from_json(const std::string& text);

void write_ply(std::ostream& out, std::span<const WorldPoint> cloud, double baseline, double f1);

void write_reprojection_csv(std::ostream& out, const ReprojectionReport& report);

std::string drift_to_json(const DriftReport& drift);

struct EvaluationSummary {
  ReprojectionReport reprojection;
  ScaleReport scale;
  double scale_tolerance = 0.01;
  std::optional<ParameterErrors> parameters;
};

std::string summary_to_json(const EvaluationSummary& summary);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace eucal::io
