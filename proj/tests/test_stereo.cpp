#include <cmath>
#include <random>

#include <Eigen/SVD>
#include <gtest/gtest.h>

#include "eucal/kernels.hpp"
#include "eucal/projection.hpp"
#include "eucal/stereo.hpp"
#include "eucal/synthetic.hpp"

namespace eucal {
namespace {

// Independent oracle: homogeneous two-ray DLT triangulation.
Vec3 dlt_two_ray(const CameraModel& a, const ImagePoint& pa, const CameraModel& b,
                 const ImagePoint& pb) {
  Eigen::Matrix4d A;
  int row = 0;
  for (const auto& [c, p] : {std::pair{a, pa}, std::pair{b, pb}}) {
    Eigen::Matrix<double, 3, 4> P;
    P << Vec3(c.f, c.f, 1.0).asDiagonal() * c.R, Vec3(c.f, c.f, 1.0).asDiagonal() * c.t;
    A.row(row++) = p.x * P.row(2) - P.row(0);
    A.row(row++) = p.y * P.row(2) - P.row(1);
  }
  const Eigen::Vector4d h = Eigen::JacobiSVD<Eigen::Matrix4d>(A, Eigen::ComputeFullV).matrixV().col(3);
  return h.head<3>() / h(3);
}

TEST(Triangulate, HandExample) {
  const auto e = triangulate_xy({0.5, 0.5}, {-0.5, 0.5}, 2.0, 1.0);
  EXPECT_EQ(e.branch, StereoBranch::Primary);
  EXPECT_NEAR(e.X, 1.0, 1e-15);
  EXPECT_NEAR(e.Y, 1.0, 1e-15);
  EXPECT_NEAR(e.z_per_f1, 2.0, 1e-15);
}

TEST(Triangulate, FallbackOnZeroY) {
  const auto e = triangulate_xy({0.2, 0.0}, {-0.2, 0.0}, 2.0, 1.0);
  EXPECT_EQ(e.branch, StereoBranch::Fallback);
  EXPECT_NEAR(e.X, 1.0, 1e-15);
  EXPECT_EQ(e.Y, 0.0);
}

TEST(Triangulate, LinearInBaseline) {
  const auto a = triangulate_xy({0.31, -0.12}, {-0.17, -0.15}, 2.0, 1.25);
  const auto b = triangulate_xy({0.31, -0.12}, {-0.17, -0.15}, 4.0, 1.25);
  EXPECT_NEAR(b.X, 2.0 * a.X, 1e-14);
  EXPECT_NEAR(b.Y, 2.0 * a.Y, 1e-14);
  EXPECT_NEAR(b.z_per_f1, 2.0 * a.z_per_f1, 1e-14);
}

TEST(Triangulate, MatchesTwoRayOracle) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const double l = 125.0, f1 = 900.0, f2 = 1100.0;
  const StereoRig rig(l);
  for (int k = 0; k < 500; ++k) {
    WorldPoint p{60 + 50 * u(rng), 80 * u(rng), 600 + 100 * u(rng)};
    if (std::abs(p.Y) < 1.0) p.Y = 1.0;
    const auto a = project(rig.left(f1), p).image;
    const auto b = project(rig.right(f2), p).image;
    const auto e = triangulate_xy(a, b, l, f2 / f1);
    const Vec3 o = dlt_two_ray(rig.left(f1), a, rig.right(f2), b);
    EXPECT_NEAR(e.X, o.x(), 1e-9 * o.norm());
    EXPECT_NEAR(e.Y, o.y(), 1e-9 * o.norm());
    EXPECT_NEAR(e.at(f1).Z, o.z(), 1e-9 * o.norm());
  }
}

ObservationSet rows_with_ratio(const std::vector<double>& ratios) {
  ObservationSet obs(2, static_cast<int>(ratios.size()));
  for (int j = 0; j < obs.points(); ++j) {
    obs(0, j) = {1.0 + j, 2.0 + j};
    obs(1, j) = {-1.0, ratios[j] * (2.0 + j)};
  }
  return obs;
}

TEST(FocalRatio, IdenticalRows) {
  const auto r = estimate_focal_ratio(rows_with_ratio({1, 1, 1, 1}));
  EXPECT_DOUBLE_EQ(r.rho, 1.0);
  EXPECT_DOUBLE_EQ(r.dispersion, 0.0);
}

TEST(FocalRatio, ConstantSequence) {
  EXPECT_DOUBLE_EQ(estimate_focal_ratio(rows_with_ratio({2, 2, 2})).rho, 2.0);
}

TEST(FocalRatio, MedianAggregate) {
  const auto r = estimate_focal_ratio(rows_with_ratio({1, 5, 2}), RatioAggregate::Median);
  EXPECT_DOUBLE_EQ(r.rho, 2.0);
}

TEST(FocalRatio, SyntheticRig) {
  SceneSpec spec;
  spec.stereo_focal = {800.0, 800.0};
  GroundTruth g = generate(spec);
  // Overwrite the right camera focal so f2 = 1000 exactly.
  g.cameras[1].f = 1000.0;
  const auto obs = observe(g.cameras, g.points);
  EXPECT_NEAR(estimate_focal_ratio(obs).rho, 1.25, 1e-12);
}

TEST(Reconstruct, SinglePoint) {
  ObservationSet obs(2, 1);
  obs(0, 0) = {0.5, 0.5};
  obs(1, 0) = {-0.5, 0.5};
  const auto cloud = reconstruct_cloud(obs, StereoRig(2.0), 1.0);
  EXPECT_NEAR(cloud[0].X, 1.0, 1e-15);
  EXPECT_NEAR(cloud[0].Y, 1.0, 1e-15);
  EXPECT_NEAR(cloud[0].Z, 2.0, 1e-15);
  const auto doubled = reconstruct_cloud(obs, StereoRig(2.0), 2.0);
  EXPECT_EQ(doubled[0].X, cloud[0].X);
  EXPECT_EQ(doubled[0].Y, cloud[0].Y);
  EXPECT_NEAR(doubled[0].Z, 4.0, 1e-15);
}

TEST(Reconstruct, SyntheticSceneMatchesTruth) {
  const GroundTruth g = generate(SceneSpec{});
  const auto cloud = reconstruct_cloud(g.clean, StereoRig(g.spec.baseline), g.cameras[0].f);
  for (std::size_t j = 0; j < cloud.size(); ++j) {
    const Vec3 t = g.points[j].vec();
    EXPECT_LE((cloud[j].vec() - t).norm(), 1e-9 * t.norm());
  }
}

TEST(Reconstruct, LeftCameraReprojectsExactly) {
  SceneSpec spec;
  spec.noise_sigma = 0.5;
  const GroundTruth g = generate(spec);
  const double f1 = 1000.0;
  const auto cloud = reconstruct_cloud(g.noisy, StereoRig(g.spec.baseline), f1);
  const CameraModel left = StereoRig(g.spec.baseline).left(f1);
  for (int j = 0; j < g.noisy.points(); ++j) {
    const auto p = project(left, cloud[j]).image;
    EXPECT_NEAR(p.x, g.noisy(0, j).x, 1e-12 * (1.0 + std::abs(p.x)));
    EXPECT_NEAR(p.y, g.noisy(0, j).y, 1e-12 * (1.0 + std::abs(p.y)));
  }
}

TEST(Reconstruct, DegeneratePointIsNamed) {
  ObservationSet obs(2, 3);
  obs(0, 0) = {0.5, 0.5};
  obs(1, 0) = {-0.5, 0.5};
  obs(0, 1) = {0.5, 0.5};
  obs(1, 1) = {-0.5, 0.5};
  obs(0, 2) = {0.3, 0.0};
  obs(1, 2) = {0.3, 0.0};
  try {
    triangulate_stereo(obs, 2.0, 1.0);
    FAIL();
  } catch (const DegeneratePointError& e) {
    EXPECT_EQ(e.point_index(), 2);
  }
}

TEST(Kernels, TriangulationSerialEqualsParallel) {
  SceneSpec spec;
  spec.points = 2000;
  spec.noise_sigma = 0.3;
  const GroundTruth g = generate(spec);
  const double rho = estimate_focal_ratio(g.noisy).rho;
  const auto a = kernels::triangulate_serial(g.noisy, 125.0, rho, {});
  const auto b = kernels::triangulate_parallel(g.noisy, 125.0, rho, {});
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t j = 0; j < a.size(); ++j) {
    EXPECT_EQ(a[j].X, b[j].X);
    EXPECT_EQ(a[j].Y, b[j].Y);
    EXPECT_EQ(a[j].z_per_f1, b[j].z_per_f1);
    EXPECT_EQ(a[j].branch, b[j].branch);
  }
}

}  // namespace
}  // namespace eucal
