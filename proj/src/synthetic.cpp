#include "eucal/synthetic.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <string>

#include "eucal/rotation.hpp"

namespace eucal {
namespace {

constexpr std::uint64_t kNoiseStream = 0x9E3779B97F4A7C15ULL;

bool in_image(const SceneSpec& spec, const CameraModel& cam, const WorldPoint& p) {
  const Vec3 q = cam.R * p.vec() + cam.t;
  if (!(q.z() > 0.0)) return false;
  const double x = cam.f * q.x() / q.z(), y = cam.f * q.y() / q.z();
  return std::abs(x) <= 0.5 * spec.image_width && std::abs(y) <= 0.5 * spec.image_height;
}

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

Vec3 unit_vector(std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vec3 v;
  do {
    v = Vec3(normal(rng), normal(rng), normal(rng));
  } while (v.norm() < 1e-12);
  return v.normalized();
}

void require(bool ok, const std::string& field) {
  if (!ok) throw Error(ErrorKind::InvalidArgument, "invalid scene spec: " + field);
}

}  // namespace

void SceneSpec::validate() const {
  require(cameras >= 3, "cameras (M >= 3 needed for calibration)");
  require(points >= 4, "points (N >= 4 needed for calibration)");
  require(baseline > 0.0 && std::isfinite(baseline), "baseline-mm must be positive");
  require((box.array() > 0.0).all() && box.allFinite(), "box-mm extents must be positive");
  require(box_center.allFinite(), "box center");
  require(max_rotation_deg >= 0.0 && max_rotation_deg <= 180.0, "max rotation angle");
  require(distance.lo > 0.0 && distance.hi >= distance.lo, "monocular distance range");
  require(lateral_jitter >= 0.0, "lateral jitter");
  require(stereo_focal.lo > 0.0 && stereo_focal.hi >= stereo_focal.lo, "stereo focal range");
  require(monocular_focal.lo > 0.0 && monocular_focal.hi >= monocular_focal.lo,
          "monocular focal range");
  require(image_width > 0.0 && image_height > 0.0, "image size");
  require(noise_sigma >= 0.0 && std::isfinite(noise_sigma), "noise-px must be >= 0");
  require(y_margin >= 0.0 && x_margin >= 0.0, "degeneracy margins");
  require(degenerate_points >= 0 && degenerate_points <= points, "degenerate point count");
  require(tz_fraction >= 0.0, "tz fraction");
  require(max_attempts >= 1, "max attempts");
}

ObservationSet observe(const std::vector<CameraModel>& cameras,
                       const std::vector<WorldPoint>& points) {
  ObservationSet obs(static_cast<int>(cameras.size()), static_cast<int>(points.size()));
  for (int i = 0; i < obs.cameras(); ++i) {
    for (int j = 0; j < obs.points(); ++j) {
      const Vec3 q = cameras[i].R * points[j].vec() + cameras[i].t;
      obs(i, j) = {cameras[i].f * q.x() / q.z(), cameras[i].f * q.y() / q.z()};
    }
  }
  return obs;
}

ObservationSet add_noise(const ObservationSet& obs, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0)) throw Error(ErrorKind::InvalidArgument, "noise sigma must be >= 0");
  ObservationSet out = obs;
  if (sigma == 0.0) return out;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, sigma);
  for (int i = 0; i < out.cameras(); ++i) {
    for (int j = 0; j < out.points(); ++j) {
      out(i, j).x += normal(rng);
      out(i, j).y += normal(rng);
    }
  }
  return out;
}

GroundTruth generate(const SceneSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  GroundTruth gt;
  gt.spec = spec;

  const StereoRig rig(spec.baseline);
  gt.cameras.push_back(rig.left(uniform(rng, spec.stereo_focal.lo, spec.stereo_focal.hi)));
  gt.cameras.push_back(rig.right(uniform(rng, spec.stereo_focal.lo, spec.stereo_focal.hi)));

  const Vec3 lo = spec.box_center - 0.5 * spec.box;
  const Vec3 hi = spec.box_center + 0.5 * spec.box;
  int attempts = 0;
  while (static_cast<int>(gt.points.size()) < spec.points) {
    if (++attempts > spec.max_attempts * spec.points) {
      throw Error(ErrorKind::GenerationFailure,
                  "could not place points visible to the stereo pair; check box and focal ranges");
    }
    WorldPoint p{uniform(rng, lo.x(), hi.x()), uniform(rng, lo.y(), hi.y()),
                 uniform(rng, lo.z(), hi.z())};
    const bool degenerate = static_cast<int>(gt.points.size()) < spec.degenerate_points;
    if (degenerate) p.Y = 0.0;
    else if (std::abs(p.Y) < spec.y_margin) continue;
    if (std::abs(p.X) < spec.x_margin) continue;
    if (!in_image(spec, gt.cameras[0], p) || !in_image(spec, gt.cameras[1], p)) continue;
    gt.points.push_back(p);
  }

  const double max_angle = spec.max_rotation_deg * std::numbers::pi / 180.0;
  for (int i = 2; i < spec.cameras; ++i) {
    bool placed = false;
    for (int a = 0; a < spec.max_attempts && !placed; ++a) {
      const Mat3 R = rotation_exp(unit_vector(rng) * uniform(rng, 0.0, max_angle));
      const double distance = uniform(rng, spec.distance.lo, spec.distance.hi);
      const Vec3 offset(uniform(rng, -spec.lateral_jitter, spec.lateral_jitter),
                        uniform(rng, -spec.lateral_jitter, spec.lateral_jitter), 0.0);
      const Vec3 center =
          spec.box_center - distance * R.transpose().col(2) + R.transpose() * offset;
      CameraModel cam{uniform(rng, spec.monocular_focal.lo, spec.monocular_focal.hi), R,
                      -R * center};
      if (std::abs(cam.t.z()) < spec.tz_fraction * distance) continue;
      placed = true;
      for (const auto& p : gt.points) placed = placed && in_image(spec, cam, p);
      if (placed) gt.cameras.push_back(cam);
    }
    if (!placed) {
      throw Error(ErrorKind::GenerationFailure,
                  "could not place monocular camera " + std::to_string(i + 1) +
                      " seeing every point; widen the distance range or image size");
    }
  }

  gt.clean = observe(gt.cameras, gt.points);
  gt.noisy = add_noise(gt.clean, spec.noise_sigma, spec.seed ^ kNoiseStream);
  return gt;
}

}  // namespace eucal
