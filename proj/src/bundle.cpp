#include "eucal/bundle.hpp"

#include <cmath>

#include "eucal/evaluation.hpp"
#include "eucal/rotation.hpp"

namespace eucal {
namespace {

struct BundleState {
  std::vector<CameraModel> cameras;
  std::vector<Vec3> points;
};

class BundleProblem {
 public:
  explicit BundleProblem(const ObservationSet& obs) : obs_(obs) {}

  Eigen::VectorXd residuals(const BundleState& s) const {
    const int m = obs_.cameras(), n = obs_.points();
    Eigen::VectorXd r(2 * m * n);
    for (int i = 0; i < m; ++i) {
      const CameraModel& c = s.cameras[i];
      for (int j = 0; j < n; ++j) {
        const Vec3 u = c.R * s.points[j] + c.t;
        const int row = 2 * (i * n + j);
        r(row) = c.f * u.x() / u.z() - obs_(i, j).x;
        r(row + 1) = c.f * u.y() / u.z() - obs_(i, j).y;
      }
    }
    return r;
  }

  // Columns: 7 per camera (df, w0, w1, w2, dtX, dtY, dtZ), then 3 per point.
  Eigen::MatrixXd jacobian(const BundleState& s) const {
    const int m = obs_.cameras(), n = obs_.points();
    Eigen::MatrixXd J = Eigen::MatrixXd::Zero(2 * m * n, 7 * m + 3 * n);
    for (int i = 0; i < m; ++i) {
      const CameraModel& c = s.cameras[i];
      for (int j = 0; j < n; ++j) {
        const Vec3 q = c.R * s.points[j];
        const Vec3 u = q + c.t;
        const double iz = 1.0 / u.z();
        Eigen::Matrix<double, 2, 3> du;
        du << c.f * iz, 0.0, -c.f * u.x() * iz * iz, 0.0, c.f * iz, -c.f * u.y() * iz * iz;
        Mat3 dq_dw;
        dq_dw << 0.0, q.z(), -q.y(), -q.z(), 0.0, q.x(), q.y(), -q.x(), 0.0;
        const int row = 2 * (i * n + j);
        J(row, 7 * i) = u.x() * iz;
        J(row + 1, 7 * i) = u.y() * iz;
        J.block<2, 3>(row, 7 * i + 1) = du * dq_dw;
        J.block<2, 3>(row, 7 * i + 4) = du;
        J.block<2, 3>(row, 7 * m + 3 * j) = du * c.R;
      }
    }
    return J;
  }

  BundleState apply(const BundleState& s, const Eigen::VectorXd& d) const {
    const int m = obs_.cameras(), n = obs_.points();
    BundleState out = s;
    for (int i = 0; i < m; ++i) {
      CameraModel& c = out.cameras[i];
      c.f += d(7 * i);
      c.R = nearest_rotation(rotation_exp(d.segment<3>(7 * i + 1)) * c.R);
      c.t += d.segment<3>(7 * i + 4);
    }
    for (int j = 0; j < n; ++j) out.points[j] += d.segment<3>(7 * m + 3 * j);
    return out;
  }

  bool valid(const BundleState& s) const {
    for (const auto& c : s.cameras) {
      if (!(c.f > 0.0)) return false;
      for (const auto& p : s.points) {
        if (!((c.R * p + c.t).z() > 0.0)) return false;
      }
    }
    return true;
  }

 private:
  const ObservationSet& obs_;
};

std::vector<WorldPoint> to_cloud(const std::vector<Vec3>& points) {
  std::vector<WorldPoint> cloud;
  cloud.reserve(points.size());
  for (const auto& p : points) cloud.push_back(WorldPoint::from(p));
  return cloud;
}

}  // namespace

BundleOutcome refine_unconstrained_ba(const CalibrationResult& result, const ObservationSet& obs,
                                      const BundleConfig& config) {
  const int m = obs.cameras(), n = obs.points();
  if (static_cast<int>(result.cameras.size()) != m || static_cast<int>(result.cloud.size()) != n) {
    throw Error(ErrorKind::DimensionMismatch, "calibration does not match the observation grid");
  }
  BundleState start;
  start.cameras = result.cameras;
  for (const auto& p : result.cloud) start.points.push_back(p.vec());

  const BundleProblem problem(obs);
  LmOptions opt = config.lm;
  // 0.5 |r|^2 at the exact-fit threshold.
  opt.zero_cost = 0.5 * config.zero_residual_px * config.zero_residual_px * (m * n);
  const auto lm = levenberg_marquardt(problem, start, opt);

  BundleOutcome out;
  DriftReport& d = out.drift;
  d.input_baseline = result.baseline;
  d.recovered_baseline = stereo_separation(lm.state.cameras);
  d.baseline_drift = std::abs(d.recovered_baseline - d.input_baseline);
  d.extent_before = bounding_extent(result.cloud);
  const auto cloud_after = to_cloud(lm.state.points);
  d.extent_after = bounding_extent(cloud_after);
  d.rms_before = std::sqrt(2.0 * lm.accepted_costs.front() / (m * n));
  d.rms_after = std::sqrt(2.0 * lm.cost / (m * n));
  d.iterations = lm.iterations;
  d.converged = lm.converged;

  CalibrationResult& r = out.result;
  r.baseline = result.baseline;
  r.cameras = lm.state.cameras;
  r.f1 = r.cameras[0].f;
  r.rho = result.rho;
  r.rho.rho = r.cameras[1].f / r.cameras[0].f;
  r.branches = result.branches;
  r.cloud = cloud_after;
  const Eigen::VectorXd res = problem.residuals(lm.state);
  for (int i = 2; i < m; ++i) {
    std::vector<Vec2> rows(n);
    for (int j = 0; j < n; ++j) rows[j] = res.segment<2>(2 * (i * n + j));
    r.residuals.push_back(std::move(rows));
  }
  r.objective_value = 2.0 * lm.cost;
  r.diagnostics.converged = lm.converged;
  r.diagnostics.iterations = lm.iterations;
  r.diagnostics.final_damping = lm.damping;
  r.diagnostics.initialization = "unconstrained_ba";
  r.diagnostics.refinement_costs = lm.accepted_costs;
  return out;
}

}  // namespace eucal
