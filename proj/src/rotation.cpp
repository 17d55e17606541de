#include "eucal/rotation.hpp"

#include <cmath>
#include <numbers>

#include <Eigen/Geometry>
#include <Eigen/SVD>

namespace eucal {
namespace {

double clamped_sqrt(double v, double clamp) {
  if (v < 0.0 && v >= -clamp) return 0.0;
  return std::sqrt(v);  // NaN for infeasible radicands, filtered later
}

bool accept(const Mat3& R, const RotationTolerances& tol) {
  if (!R.allFinite()) return false;
  return orthonormality_error(R) <= tol.orthonormal &&
         std::abs(R.determinant() - 1.0) <= tol.orthonormal;
}

Mat3 from_rows(const Vec3& row1, const Vec3& row2) {
  Mat3 R;
  R.row(0) = row1.transpose();
  R.row(1) = row2.transpose();
  R.row(2) = row1.cross(row2).transpose();
  return R;
}

// |r1| = 1 forces r2 = r4 = 0; the lower-right block is then any 2D
// rotation (r1 = 1) or reflection (r1 = -1). Emit the two axis-aligned
// members, keyed by the sign of r5.
RotationCandidateSet gimbal_candidates(const RotationSeed& seed, const RotationTolerances& tol) {
  RotationCandidateSet out;
  const double s1 = seed.r1 >= 0.0 ? 1.0 : -1.0;
  for (int r5_sign : {1, -1}) {
    Mat3 R = Mat3::Zero();
    R(0, 0) = seed.r1;
    R(0, 1) = seed.r2;
    R(1, 0) = seed.r4;
    R(1, 1) = r5_sign;
    R(2, 2) = r5_sign * s1;
    if (accept(R, tol)) out.candidates.push_back({R, {r5_sign, 1, 1}});
  }
  return out;
}

}  // namespace

BranchLabel BranchLabel::from_index(int index) {
  return {index & 4 ? -1 : 1, index & 2 ? -1 : 1, index & 1 ? -1 : 1};
}

std::string BranchLabel::str() const {
  std::string s;
  for (int v : {r5, r3, r6}) s += v < 0 ? '-' : '+';
  return s;
}

BranchLabel BranchLabel::parse(const std::string& text) {
  if (text.size() != 3) throw Error(ErrorKind::Parse, "branch label must have 3 signs: " + text);
  std::array<int, 3> v{};
  for (int k = 0; k < 3; ++k) {
    if (text[k] == '+') v[k] = 1;
    else if (text[k] == '-') v[k] = -1;
    else throw Error(ErrorKind::Parse, "bad branch label: " + text);
  }
  return {v[0], v[1], v[2]};
}

double r5_discriminant(const RotationSeed& s) {
  const double a = s.r1 * s.r1, b = s.r2 * s.r2, c = s.r4 * s.r4;
  return 1.0 - 2.0 * a - b - c + a * b + a * c + b * c + a * a;
}

double complete_r5(const RotationSeed& seed, int sign, const RotationTolerances& tol) {
  const double den = 1.0 - seed.r1 * seed.r1;
  if (std::abs(den) <= tol.singular) {
    throw Error(ErrorKind::SingularSeed, "|r1| = 1: use the gimbal completion");
  }
  double disc = r5_discriminant(seed);
  if (disc < -tol.clamp) {
    throw Error(ErrorKind::InfeasibleSeed, "negative discriminant, seed is not part of a rotation");
  }
  disc = std::max(disc, 0.0);
  return (-seed.r1 * seed.r2 * seed.r4 + (sign < 0 ? -1.0 : 1.0) * std::sqrt(disc)) / den;
}

RotationCandidateSet enumerate_rotations(const RotationSeed& seed, const RotationTolerances& tol) {
  RotationCandidateSet out;
  if (std::abs(1.0 - seed.r1 * seed.r1) <= tol.singular) {
    out = gimbal_candidates(seed, tol);
  } else if (r5_discriminant(seed) >= -tol.clamp) {
    const double r3_abs = clamped_sqrt(1.0 - seed.r1 * seed.r1 - seed.r2 * seed.r2, tol.clamp);
    for (int index = 0; index < 8; ++index) {
      const BranchLabel label = BranchLabel::from_index(index);
      const double r5 = complete_r5(seed, label.r5, tol);
      const double r6_abs = clamped_sqrt(1.0 - seed.r4 * seed.r4 - r5 * r5, tol.clamp);
      const Vec3 row1(seed.r1, seed.r2, label.r3 * r3_abs);
      const Vec3 row2(seed.r4, r5, label.r6 * r6_abs);
      const Mat3 R = from_rows(row1, row2);
      if (!accept(R, tol)) continue;
      bool duplicate = false;
      for (const auto& c : out.candidates) duplicate = duplicate || c.R == R;
      if (!duplicate) out.candidates.push_back({R, label});
    }
  }
  if (out.candidates.empty()) {
    throw Error(ErrorKind::EmptyCandidateSet, "no proper rotation matches the seed");
  }
  return out;
}

Mat3 rotation_exp(const Vec3& omega) {
  const double angle = omega.norm();
  if (angle < 1e-12) {
    Mat3 K;
    K << 0, -omega.z(), omega.y(), omega.z(), 0, -omega.x(), -omega.y(), omega.x(), 0;
    return Mat3::Identity() + K + 0.5 * K * K;
  }
  return Eigen::AngleAxisd(angle, omega / angle).toRotationMatrix();
}

Vec3 rotation_log(const Mat3& R) {
  const Eigen::AngleAxisd aa(R);
  return aa.angle() * aa.axis();
}

Mat3 nearest_rotation(const Mat3& M) {
  Eigen::JacobiSVD<Mat3> svd(M, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 D = Mat3::Identity();
  D(2, 2) = (svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0 ? -1.0 : 1.0;
  return svd.matrixU() * D * svd.matrixV().transpose();
}

double orthonormality_error(const Mat3& R) {
  return (R * R.transpose() - Mat3::Identity()).cwiseAbs().maxCoeff();
}

double geodesic_deg(const Mat3& a, const Mat3& b) {
  const Mat3 d = a * b.transpose();
  // atan2 form stays accurate for tiny angles where acos((tr - 1) / 2) does not.
  const Vec3 v(d(2, 1) - d(1, 2), d(0, 2) - d(2, 0), d(1, 0) - d(0, 1));
  const double angle = std::atan2(0.5 * v.norm(), 0.5 * (d.trace() - 1.0));
  return angle * 180.0 / std::numbers::pi;
}

}  // namespace eucal
