#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Core>
#include <Eigen/LU>

#include "eucal/error.hpp"

namespace eucal {

using Mat3 = Eigen::Matrix3d;
using Vec3 = Eigen::Vector3d;
using Vec2 = Eigen::Vector2d;

/// Image coordinates in pixels, origin at the principal point.
struct ImagePoint {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const ImagePoint&, const ImagePoint&) = default;
};

/// World coordinates in millimeters. The world frame is the frame of
/// stereo camera 1.
struct WorldPoint {
  double X = 0.0;
  double Y = 0.0;
  double Z = 0.0;

  Vec3 vec() const { return {X, Y, Z}; }
  static WorldPoint from(const Vec3& v) { return {v.x(), v.y(), v.z()}; }

  friend bool operator==(const WorldPoint&, const WorldPoint&) = default;
};

/// Zero-skew pinhole camera with a single focal length. Maps world points
/// via s * [x y 1]^T = diag(f, f, 1) [R | t] [X Y Z 1]^T.
struct CameraModel {
  double f = 1.0;               // pixels
  Mat3 R = Mat3::Identity();    // world -> camera
  Vec3 t = Vec3::Zero();        // millimeters

  /// Camera center in world coordinates.
  Vec3 center() const { return -R.transpose() * t; }
};

/// Stereo pair with parallel optical axes. Camera 1 sits at the origin,
/// camera 2 at [baseline 0 0]^T, both with identity rotation.
struct StereoRig {
  double baseline = 1.0;  // millimeters

  explicit StereoRig(double baseline_mm);

  CameraModel left(double f1) const;
  CameraModel right(double f2) const;
};

/// Complete M x N grid of image observations. Camera and point indices
/// are 0-based here; the file formats use 1-based ids.
class ObservationSet {
 public:
  ObservationSet() = default;
  ObservationSet(int cameras, int points);

  int cameras() const noexcept { return cameras_; }
  int points() const noexcept { return points_; }

  const ImagePoint& operator()(int camera, int point) const {
    return data_[static_cast<std::size_t>(camera) * points_ + point];
  }
  ImagePoint& operator()(int camera, int point) {
    return data_[static_cast<std::size_t>(camera) * points_ + point];
  }

  const std::vector<ImagePoint>& data() const noexcept { return data_; }

  friend bool operator==(const ObservationSet&, const ObservationSet&) = default;

 private:
  int cameras_ = 0;
  int points_ = 0;
  std::vector<ImagePoint> data_;
};

struct Projection {
  ImagePoint image;
  double depth = 0.0;  // s_ij, millimeters
};

}  // namespace eucal
