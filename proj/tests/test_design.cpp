#include <Eigen/Geometry>
#include <gtest/gtest.h>

#include "eucal/design.hpp"
#include "eucal/projection.hpp"
#include "eucal/synthetic.hpp"

namespace eucal {
namespace {

CameraModel sample_camera() {
  CameraModel c;
  c.f = 1150.0;
  c.R = Eigen::AngleAxisd(0.6, Vec3(0.2, 1.0, -0.3).normalized()).toRotationMatrix();
  c.t = Vec3(-40.0, 15.0, 620.0);
  return c;
}

TEST(DesignSystem, Shape) {
  SceneSpec spec;
  spec.cameras = 3;
  spec.points = 4;
  const GroundTruth g = generate(spec);
  const auto base = triangulate_stereo(g.clean, spec.baseline, g.cameras[1].f / g.cameras[0].f);
  const auto sys = build_design_system(g.clean, 2, base);
  EXPECT_EQ(sys.ax.rows(), 4);
  EXPECT_EQ(sys.ay.rows(), 4);
  EXPECT_EQ(sys.bx.size(), 4);
}

TEST(DesignSystem, SinglePointRow) {
  ObservationSet obs(3, 1);
  obs(0, 0) = {0.5, 0.5};
  obs(1, 0) = {-0.5, 0.5};
  obs(2, 0) = {0.2, 0.7};
  const std::vector<StereoPointEstimate> base{{1.0, 1.0, 2.0, StereoBranch::Primary}};
  const auto sys = build_design_system(obs, 2, base);
  Vec7 expected;
  expected << 1, 1, 2, 1, -0.2, -0.2, -0.4;
  EXPECT_LE((sys.ax.row(0).transpose() - expected).norm(), 1e-15);
  EXPECT_EQ(sys.bx(0), 0.2);
  EXPECT_EQ(sys.ay(0, 4), -0.7);
}

TEST(DesignSystem, RejectsStereoIndexAndZeroAbscissa) {
  ObservationSet obs(3, 1);
  obs(0, 0) = {0.0, 0.5};
  const std::vector<StereoPointEstimate> base(1);
  EXPECT_THROW(build_design_system(obs, 1, base), Error);
  try {
    build_design_system(obs, 2, base);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DegenerateObservation);
  }
}

// Substituting the true packed parameters reproduces the observations exactly.
TEST(DesignSystem, TruthSatisfiesRows) {
  const GroundTruth g = generate(SceneSpec{});
  const double f1 = g.cameras[0].f;
  const auto base = triangulate_stereo(g.clean, g.spec.baseline, g.cameras[1].f / f1);
  for (int i = 2; i < g.clean.cameras(); ++i) {
    const auto sys = build_design_system(g.clean, i, base);
    const auto p = pack_parameters(g.cameras[i], f1);
    EXPECT_LE((sys.ax * p.alpha - sys.bx).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_LE((sys.ay * p.beta - sys.by).cwiseAbs().maxCoeff(), 1e-9);
  }
}

TEST(Extract, RoundTrip) {
  const CameraModel c = sample_camera();
  const double f1 = 950.0;
  const auto p = pack_parameters(c, f1);
  const auto out = extract_camera_parameters(p.alpha, p.beta, f1);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_NEAR(out[0].f, c.f, 1e-9 * c.f);
  EXPECT_LE((out[0].R - c.R).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_LE((out[0].t - c.t).norm(), 1e-9 * c.t.norm());
}

TEST(Extract, IdentityRotation) {
  CameraModel c;
  c.f = 800.0;
  c.t = Vec3(5.0, -3.0, 400.0);
  const double f1 = 1000.0;
  const auto p = pack_parameters(c, f1);
  EXPECT_DOUBLE_EQ(p.alpha(4), 0.0);
  EXPECT_DOUBLE_EQ(p.alpha(6), f1 / c.t.z());
  const auto out = extract_camera_parameters(p.alpha, p.beta, f1);
  EXPECT_NEAR(out[0].R(2, 2), 1.0, 1e-12);
  EXPECT_NEAR(out[0].R(2, 0), 0.0, 1e-12);
  EXPECT_NEAR(out[0].R(2, 1), 0.0, 1e-12);
}

// Doubling alpha and beta is the same as halving tZ with f, R, tX and tY fixed.
TEST(Extract, ScaledParametersHalveDepth) {
  const CameraModel c = sample_camera();
  const double f1 = 950.0;
  const auto p = pack_parameters(c, f1);
  const auto out = extract_camera_parameters(2.0 * p.alpha, 2.0 * p.beta, f1);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_NEAR(out[0].t.z(), 0.5 * c.t.z(), 1e-9 * c.t.z());
  EXPECT_NEAR(out[0].t.x(), c.t.x(), 1e-9 * c.t.norm());
  EXPECT_NEAR(out[0].t.y(), c.t.y(), 1e-9 * c.t.norm());
  EXPECT_NEAR(out[0].f, c.f, 1e-9 * c.f);
  EXPECT_LE((out[0].R - c.R).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(Extract, NonRotationRejected) {
  Vec7 a = Vec7::Zero(), b = Vec7::Zero();
  EXPECT_THROW(extract_camera_parameters(a, b, 1000.0), Error);
  a << 1, 0, 0, 0, 0, 0, 1;
  b << 5, 0, 0, 0, 0, 0, 1;  // rows 1 and 2 parallel
  EXPECT_THROW(extract_camera_parameters(a, b, 1.0), Error);
}

}  // namespace
}  // namespace eucal
