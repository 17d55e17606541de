#include "eucal/design.hpp"

#include <cmath>
#include <string>

#include "eucal/rotation.hpp"

namespace eucal {

DesignSystem build_design_system(const ObservationSet& obs, int camera,
                                 std::span<const StereoPointEstimate> base,
                                 double min_left_abscissa) {
  const int n = obs.points();
  if (camera < 2 || camera >= obs.cameras()) {
    throw Error(ErrorKind::DimensionMismatch,
                "design systems exist for monocular cameras only, got index " +
                    std::to_string(camera));
  }
  if (static_cast<int>(base.size()) != n) {
    throw Error(ErrorKind::DimensionMismatch, "stereo estimates do not match the point count");
  }
  DesignSystem sys{DesignMatrix(n, 7), DesignMatrix(n, 7), Eigen::VectorXd(n),
                   Eigen::VectorXd(n)};
  for (int j = 0; j < n; ++j) {
    if (std::abs(obs(0, j).x) <= min_left_abscissa) {
      throw Error(ErrorKind::DegenerateObservation,
                  "point " + std::to_string(j + 1) + " has x_1j ~ 0 in the left stereo camera");
    }
    const auto& e = base[j];
    const ImagePoint& p = obs(camera, j);
    sys.ax.row(j) << e.X, e.Y, e.z_per_f1, 1.0, -p.x * e.X, -p.x * e.Y, -p.x * e.z_per_f1;
    sys.ay.row(j) << e.X, e.Y, e.z_per_f1, 1.0, -p.y * e.X, -p.y * e.Y, -p.y * e.z_per_f1;
    sys.bx(j) = p.x;
    sys.by(j) = p.y;
  }
  return sys;
}

CombinedParameters pack_parameters(const CameraModel& c, double f1) {
  const Mat3& R = c.R;
  const double inv_tz = 1.0 / c.t.z();
  CombinedParameters p;
  p.alpha << c.f * R(0, 0), c.f * R(0, 1), c.f * f1 * R(0, 2), c.f * c.t.x(), R(2, 0), R(2, 1),
      f1 * R(2, 2);
  p.beta << c.f * R(1, 0), c.f * R(1, 1), c.f * f1 * R(1, 2), c.f * c.t.y(), R(2, 0), R(2, 1),
      f1 * R(2, 2);
  p.alpha *= inv_tz;
  p.beta *= inv_tz;
  return p;
}

std::vector<CameraModel> extract_camera_parameters(const Vec7& alpha, const Vec7& beta,
                                                   double f1, double loose_tolerance) {
  if (!(f1 > 0.0)) throw Error(ErrorKind::Domain, "f1 must be positive");
  // Shared third-row block; average the two estimates.
  const Vec3 c = 0.5 * (alpha.tail<3>() + beta.tail<3>());
  const Vec3 q3(c(0), c(1), c(2) / f1);            // row3 / tZ
  const Vec3 q1(alpha(0), alpha(1), alpha(2) / f1);  // f row1 / tZ
  const Vec3 q2(beta(0), beta(1), beta(2) / f1);     // f row2 / tZ
  const double n3 = q3.norm();
  std::vector<CameraModel> out;
  if (!(n3 > 0.0) || !std::isfinite(n3)) {
    throw Error(ErrorKind::NoCandidate, "third rotation row vanishes");
  }
  for (double sign : {1.0, -1.0}) {
    const double tz = sign / n3;
    const double f = 0.5 * (q1.norm() + q2.norm()) * std::abs(tz);
    if (!(f > 0.0)) continue;
    Mat3 M;
    M.row(0) = (q1 * tz / f).transpose();
    M.row(1) = (q2 * tz / f).transpose();
    M.row(2) = (q3 * tz).transpose();
    if (!M.allFinite() || M.determinant() <= 0.0 ||
        orthonormality_error(M) > loose_tolerance) {
      continue;
    }
    CameraModel cam;
    cam.f = f;
    cam.R = nearest_rotation(M);
    cam.t = Vec3(alpha(3) * tz / f, beta(3) * tz / f, tz);
    out.push_back(cam);
  }
  if (out.empty()) {
    throw Error(ErrorKind::NoCandidate, "packed parameters do not describe a proper rotation");
  }
  return out;
}

}  // namespace eucal
