#include "eucal/stereo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "eucal/kernels.hpp"

namespace eucal {

StereoPointEstimate triangulate_xy(const ImagePoint& left, const ImagePoint& right,
                                   double baseline, double rho, const StereoTolerances& tol) {
  const double x1 = left.x, y1 = left.y, x2 = right.x, y2 = right.y;
  const double a = x1 * y2;
  const double b = x2 * y1;
  const double den = a - b;
  const double mag = std::abs(a) + std::abs(b);

  StereoPointEstimate est;
  if (mag > 0.0 && std::abs(den) > tol.relative_denominator * mag) {
    est.X = x1 * y2 * baseline / den;
    est.Y = y1 * y2 * baseline / den;
    est.z_per_f1 = y2 * baseline / den;  // X / x1 without dividing by x1
    est.branch = StereoBranch::Primary;
    return est;
  }

  // On the Y = 0 plane only the x-disparity carries depth:
  // x1 = f1 X / Z and x2 = rho f1 (X - l) / Z.
  const double fden = rho * x1 - x2;
  const double fmag = std::abs(rho * x1) + std::abs(x2);
  if (!(fmag > 0.0) || std::abs(fden) <= tol.fallback_denominator * fmag) {
    throw Error(ErrorKind::DegenerateGeometry,
                "zero disparity: point at infinity or on the baseline");
  }
  est.X = baseline * rho * x1 / fden;
  est.z_per_f1 = baseline * rho / fden;
  // Y / Z = y1 / f1 holds for any point; it vanishes on the Y = 0 plane.
  est.Y = y1 * est.z_per_f1;
  est.branch = StereoBranch::Fallback;
  return est;
}

FocalRatio estimate_focal_ratio(const ObservationSet& obs, RatioAggregate aggregate,
                                const StereoTolerances& tol) {
  if (obs.cameras() < 2) {
    throw Error(ErrorKind::DimensionMismatch, "focal ratio needs both stereo cameras");
  }
  FocalRatio out;
  for (int j = 0; j < obs.points(); ++j) {
    const double y1 = obs(0, j).y;
    if (std::abs(y1) > tol.min_ratio_y) out.per_point_ratios.push_back(obs(1, j).y / y1);
  }
  const auto& r = out.per_point_ratios;
  if (r.empty()) {
    throw Error(ErrorKind::NoValidPoints,
                "no point has a usable left-camera ordinate for the focal ratio");
  }
  const double mean = std::accumulate(r.begin(), r.end(), 0.0) / static_cast<double>(r.size());
  double var = 0.0;
  for (double v : r) var += (v - mean) * (v - mean);
  out.dispersion = std::sqrt(var / static_cast<double>(r.size()));

  if (aggregate == RatioAggregate::Mean) {
    out.rho = mean;
  } else {
    std::vector<double> sorted = r;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    out.rho = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
  }
  if (!(out.rho > 0.0)) {
    throw Error(ErrorKind::NoValidPoints, "focal ratio estimate is not positive");
  }
  return out;
}

std::vector<StereoPointEstimate> triangulate_stereo(const ObservationSet& obs, double baseline,
                                                    double rho, const StereoTolerances& tol) {
  return kernels::triangulate_parallel(obs, baseline, rho, tol);
}

std::vector<WorldPoint> reconstruct_cloud(const ObservationSet& obs, const StereoRig& rig,
                                          double f1, double rho, const StereoTolerances& tol) {
  if (!(f1 > 0.0)) {
    throw Error(ErrorKind::Domain, "f1 must be positive");
  }
  const auto est = triangulate_stereo(obs, rig.baseline, rho, tol);
  std::vector<WorldPoint> cloud;
  cloud.reserve(est.size());
  for (const auto& e : est) cloud.push_back(e.at(f1));
  return cloud;
}

std::vector<WorldPoint> reconstruct_cloud(const ObservationSet& obs, const StereoRig& rig,
                                          double f1) {
  return reconstruct_cloud(obs, rig, f1, estimate_focal_ratio(obs).rho);
}

}  // namespace eucal
