#include "eucal/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace eucal::kernels {
namespace {

double reprojection_entry(const CameraModel& cam, const WorldPoint& p, const ImagePoint& o) {
  const Vec3 q = cam.R * p.vec() + cam.t;
  if (!(q.z() > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  return std::hypot(cam.f * q.x() / q.z() - o.x, cam.f * q.y() / q.z() - o.y);
}

void check_reprojection_inputs(std::span<const CameraModel> cameras,
                               std::span<const WorldPoint> cloud, const ObservationSet& obs) {
  if (static_cast<int>(cameras.size()) != obs.cameras() ||
      static_cast<int>(cloud.size()) != obs.points()) {
    throw Error(ErrorKind::DimensionMismatch,
                "cameras/cloud do not match the observation grid");
  }
}

[[noreturn]] void throw_degenerate(int j) {
  throw DegeneratePointError(j, "degenerate stereo geometry at point " + std::to_string(j + 1) +
                                    ": zero disparity");
}

}  // namespace

std::vector<StereoPointEstimate> triangulate_serial(const ObservationSet& obs, double baseline,
                                                    double rho, const StereoTolerances& tol) {
  std::vector<StereoPointEstimate> out(static_cast<std::size_t>(obs.points()));
  for (int j = 0; j < obs.points(); ++j) {
    try {
      out[j] = triangulate_xy(obs(0, j), obs(1, j), baseline, rho, tol);
    } catch (const Error&) {
      throw_degenerate(j);
    }
  }
  return out;
}

std::vector<StereoPointEstimate> triangulate_parallel(const ObservationSet& obs, double baseline,
                                                      double rho, const StereoTolerances& tol) {
  const int n = obs.points();
  std::vector<StereoPointEstimate> out(static_cast<std::size_t>(n));
  int first_bad = n;
#pragma omp parallel for reduction(min : first_bad)
  for (int j = 0; j < n; ++j) {
    try {
      out[j] = triangulate_xy(obs(0, j), obs(1, j), baseline, rho, tol);
    } catch (const Error&) {
      first_bad = std::min(first_bad, j);
    }
  }
  if (first_bad < n) throw_degenerate(first_bad);
  return out;
}

std::vector<double> reprojection_serial(std::span<const CameraModel> cameras,
                                        std::span<const WorldPoint> cloud,
                                        const ObservationSet& obs) {
  check_reprojection_inputs(cameras, cloud, obs);
  const int m = obs.cameras(), n = obs.points();
  std::vector<double> out(static_cast<std::size_t>(m) * n);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) out[static_cast<std::size_t>(i) * n + j] =
        reprojection_entry(cameras[i], cloud[j], obs(i, j));
  return out;
}

std::vector<double> reprojection_parallel(std::span<const CameraModel> cameras,
                                          std::span<const WorldPoint> cloud,
                                          const ObservationSet& obs) {
  check_reprojection_inputs(cameras, cloud, obs);
  const int m = obs.cameras(), n = obs.points();
  std::vector<double> out(static_cast<std::size_t>(m) * n);
#pragma omp parallel for collapse(2)
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) out[static_cast<std::size_t>(i) * n + j] =
        reprojection_entry(cameras[i], cloud[j], obs(i, j));
  return out;
}

}  // namespace eucal::kernels
