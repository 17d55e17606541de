#include "eucal/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "eucal/kernels.hpp"
#include "eucal/rotation.hpp"

namespace eucal {
namespace {

CameraErrorStats stats_of(std::span<const double> errors) {
  CameraErrorStats s;
  double sum = 0.0, sum_sq = 0.0;
  for (double e : errors) {
    if (std::isnan(e)) {
      ++s.behind;
      continue;
    }
    ++s.count;
    sum += e;
    sum_sq += e * e;
    s.max = std::max(s.max, e);
  }
  if (s.count > 0) {
    s.mean = sum / s.count;
    s.rms = std::sqrt(sum_sq / s.count);
  }
  return s;
}

}  // namespace

double ReprojectionReport::stereo_rms() const {
  double sum_sq = 0.0;
  int count = 0;
  for (int i = 0; i < std::min(cameras, 2); ++i) {
    sum_sq += per_camera[i].rms * per_camera[i].rms * per_camera[i].count;
    count += per_camera[i].count;
  }
  return count ? std::sqrt(sum_sq / count) : 0.0;
}

double ReprojectionReport::worst_monocular_rms() const {
  double worst = 0.0;
  for (int i = 2; i < cameras; ++i) worst = std::max(worst, per_camera[i].rms);
  return worst;
}

ReprojectionReport reprojection_errors(std::span<const CameraModel> cameras,
                                       std::span<const WorldPoint> cloud,
                                       const ObservationSet& obs) {
  ReprojectionReport rep;
  rep.cameras = obs.cameras();
  rep.points = obs.points();
  rep.errors = kernels::reprojection_parallel(cameras, cloud, obs);
  double sum_sq = 0.0;
  int count = 0;
  for (int i = 0; i < rep.cameras; ++i) {
    const CameraErrorStats s = stats_of(
        std::span<const double>(rep.errors).subspan(static_cast<std::size_t>(i) * rep.points,
                                                    rep.points));
    sum_sq += s.rms * s.rms * s.count;
    count += s.count;
    rep.behind += s.behind;
    rep.per_camera.push_back(s);
  }
  rep.overall_rms = count ? std::sqrt(sum_sq / count) : 0.0;
  return rep;
}

ReprojectionReport reprojection_errors(const CalibrationResult& result, const StereoRig& rig,
                                       const ObservationSet& obs) {
  std::vector<CameraModel> cams = result.cameras;
  if (cams.size() >= 2) {
    cams[0] = rig.left(result.f1);
    cams[1] = rig.right(result.rho.rho * result.f1);
  }
  return reprojection_errors(cams, result.cloud, obs);
}

Vec3 bounding_extent(std::span<const WorldPoint> cloud) {
  if (cloud.empty()) throw Error(ErrorKind::InvalidArgument, "empty point cloud");
  Vec3 lo = cloud.front().vec(), hi = lo;
  for (const auto& p : cloud) {
    lo = lo.cwiseMin(p.vec());
    hi = hi.cwiseMax(p.vec());
  }
  return hi - lo;
}

ScaleReport scale_report(std::span<const WorldPoint> cloud, std::optional<Vec3> reference_extent,
                         std::optional<double> recovered_baseline) {
  ScaleReport rep;
  rep.extent = bounding_extent(cloud);
  rep.recovered_baseline = recovered_baseline;
  if (reference_extent) {
    const Vec3 ratios = rep.extent.cwiseQuotient(*reference_extent);
    rep.ratios = ratios;
    rep.scale_error = std::cbrt(ratios.x() * ratios.y() * ratios.z()) - 1.0;
  }
  return rep;
}

double stereo_separation(std::span<const CameraModel> cameras) {
  if (cameras.size() < 2) throw Error(ErrorKind::DimensionMismatch, "need two stereo cameras");
  return (cameras[0].center() - cameras[1].center()).norm();
}

double ParameterErrors::max_focal_relative() const {
  return focal_relative.empty() ? 0.0
                                : *std::max_element(focal_relative.begin(), focal_relative.end());
}
double ParameterErrors::max_rotation_deg() const {
  return rotation_deg.empty() ? 0.0 : *std::max_element(rotation_deg.begin(), rotation_deg.end());
}
double ParameterErrors::max_translation_mm() const {
  return translation_mm.empty() ? 0.0
                                : *std::max_element(translation_mm.begin(), translation_mm.end());
}

ParameterErrors parameter_errors(std::span<const CameraModel> cameras,
                                 std::span<const WorldPoint> cloud, const GroundTruth& truth) {
  if (cameras.size() != truth.cameras.size() || cloud.size() != truth.points.size()) {
    throw Error(ErrorKind::DimensionMismatch,
                "calibration and ground truth disagree on camera or point count");
  }
  ParameterErrors pe;
  for (std::size_t i = 0; i < cameras.size(); ++i) {
    const CameraModel& e = cameras[i];
    const CameraModel& t = truth.cameras[i];
    pe.focal_relative.push_back(std::abs(e.f - t.f) / t.f);
    pe.rotation_deg.push_back(geodesic_deg(e.R, t.R));
    pe.translation_mm.push_back((e.t - t.t).norm());
  }
  double err_sq = 0.0, ref_sq = 0.0;
  for (std::size_t j = 0; j < cloud.size(); ++j) {
    err_sq += (cloud[j].vec() - truth.points[j].vec()).squaredNorm();
    ref_sq += truth.points[j].vec().squaredNorm();
  }
  const double n = static_cast<double>(cloud.size());
  pe.cloud_rms_mm = std::sqrt(err_sq / n);
  pe.cloud_relative_rms = ref_sq > 0.0 ? std::sqrt(err_sq / ref_sq) : 0.0;
  return pe;
}

ParameterErrors parameter_errors(const CalibrationResult& result, const GroundTruth& truth) {
  return parameter_errors(result.cameras, result.cloud, truth);
}

}  // namespace eucal
