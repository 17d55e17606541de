#include <cmath>
#include <numbers>

#include <Eigen/Geometry>
#include <gtest/gtest.h>

#include "eucal/evaluation.hpp"

namespace eucal {
namespace {

CalibrationResult result_from_truth(const GroundTruth& g) {
  CalibrationResult r;
  r.baseline = g.spec.baseline;
  r.f1 = g.cameras[0].f;
  r.rho.rho = g.cameras[1].f / g.cameras[0].f;
  r.cameras = g.cameras;
  r.branches.resize(g.cameras.size());
  r.cloud = g.points;
  return r;
}

std::vector<WorldPoint> unit_cube() {
  std::vector<WorldPoint> c;
  for (int k = 0; k < 8; ++k) c.push_back({double(k & 1), double((k >> 1) & 1), double(k >> 2)});
  return c;
}

TEST(Scale, UnitCube) {
  const auto s = scale_report(unit_cube());
  EXPECT_EQ(s.extent, Vec3(1, 1, 1));
  EXPECT_FALSE(s.ratios.has_value());
}

TEST(Scale, DoubledCloud) {
  auto cloud = unit_cube();
  for (auto& p : cloud) p = WorldPoint::from(2.0 * p.vec());
  const auto s = scale_report(cloud, Vec3(1, 1, 1), 125.0);
  EXPECT_EQ(*s.ratios, Vec3(2, 2, 2));
  EXPECT_DOUBLE_EQ(*s.scale_error, 1.0);
  EXPECT_EQ(*s.recovered_baseline, 125.0);
}

TEST(Scale, EmptyCloudThrows) { EXPECT_THROW(bounding_extent({}), Error); }

TEST(Reprojection, TruthHasZeroError) {
  const GroundTruth g = generate(SceneSpec{});
  const auto rep = reprojection_errors(result_from_truth(g), StereoRig(125.0), g.clean);
  EXPECT_EQ(rep.behind, 0);
  for (double e : rep.errors) EXPECT_LT(e, 1e-9);
  EXPECT_EQ(rep.per_camera.size(), 4u);
  EXPECT_EQ(rep.per_camera[2].count, 57);
}

TEST(Reprojection, StatisticsAndPooling) {
  const GroundTruth g = generate(SceneSpec{});
  ObservationSet obs = g.clean;
  obs(0, 0).x += 3.0;
  obs(1, 1).y += 4.0;
  obs(3, 2).x += 6.0;
  const auto rep = reprojection_errors(g.cameras, g.points, obs);
  EXPECT_NEAR(rep.error(0, 0), 3.0, 1e-9);
  EXPECT_NEAR(rep.per_camera[3].max, 6.0, 1e-9);
  EXPECT_NEAR(rep.per_camera[3].mean, 6.0 / 57, 1e-9);
  EXPECT_NEAR(rep.per_camera[3].rms, 6.0 / std::sqrt(57.0), 1e-9);
  EXPECT_NEAR(rep.stereo_rms(), 5.0 / std::sqrt(114.0), 1e-9);
  EXPECT_NEAR(rep.worst_monocular_rms(), 6.0 / std::sqrt(57.0), 1e-9);
  EXPECT_NEAR(rep.overall_rms, std::sqrt(61.0 / 228.0), 1e-9);
}

TEST(Reprojection, BehindCameraExcluded) {
  const GroundTruth g = generate(SceneSpec{});
  auto cloud = g.points;
  cloud[0].Z = -cloud[0].Z;
  const auto rep = reprojection_errors(g.cameras, cloud, g.clean);
  EXPECT_TRUE(std::isnan(rep.error(0, 0)));
  EXPECT_EQ(rep.per_camera[0].behind, 1);
  EXPECT_EQ(rep.per_camera[0].count, 56);
  EXPECT_GE(rep.behind, 1);
}

TEST(Parameters, TruthGivesZeros) {
  const GroundTruth g = generate(SceneSpec{});
  const auto e = parameter_errors(result_from_truth(g), g);
  EXPECT_EQ(e.max_focal_relative(), 0.0);
  EXPECT_NEAR(e.max_rotation_deg(), 0.0, 1e-12);
  EXPECT_EQ(e.max_translation_mm(), 0.0);
  EXPECT_EQ(e.cloud_rms_mm, 0.0);
}

TEST(Parameters, OneDegreeRotation) {
  const GroundTruth g = generate(SceneSpec{});
  auto cams = g.cameras;
  cams[2].R = Eigen::AngleAxisd(std::numbers::pi / 180.0, Vec3::UnitZ()).toRotationMatrix() * cams[2].R;
  const auto e = parameter_errors(cams, g.points, g);
  EXPECT_NEAR(e.rotation_deg[2], 1.0, 1e-9);
  EXPECT_EQ(e.rotation_deg[3], 0.0);
}

TEST(Parameters, StereoSeparation) {
  const GroundTruth g = generate(SceneSpec{});
  EXPECT_NEAR(stereo_separation(g.cameras), 125.0, 1e-12);
}

}  // namespace
}  // namespace eucal
