#include "eucal/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include <Eigen/Geometry>
#include <Eigen/QR>
#include <Eigen/SVD>

#include "eucal/kernels.hpp"
#include "eucal/projection.hpp"

namespace eucal {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kMinAbsTz = 1e-12;  // baseline units

// Unweighted residual rows and their derivatives for one camera.
// Column 0 is d/df1, columns 1..7 are (df, w0, w1, w2, dtX, dtY, dtZ).
struct CameraBlock {
  Eigen::VectorXd r;
  Eigen::MatrixXd J;
};

CameraBlock reprojection_block(const ObservationSet& obs, int camera,
                               const std::vector<StereoPointEstimate>& base, double f1,
                               const CameraModel& cam, bool with_jacobian) {
  const int n = obs.points();
  CameraBlock b;
  b.r.resize(2 * n);
  if (with_jacobian) b.J.setZero(2 * n, 8);
  const Mat3& R = cam.R;
  const double f = cam.f;
  for (int j = 0; j < n; ++j) {
    const auto& e = base[j];
    const Vec3 q = R * Vec3(e.X, e.Y, f1 * e.z_per_f1);
    const Vec3 u = q + cam.t;
    const double is = 1.0 / u.z();
    const double px = f * u.x() * is, py = f * u.y() * is;
    const ImagePoint& o = obs(camera, j);
    b.r(j) = px - o.x;
    b.r(n + j) = py - o.y;
    if (!with_jacobian) continue;

    const double w = e.z_per_f1;
    const Eigen::RowVector3d dqx(0.0, q.z(), -q.y());
    const Eigen::RowVector3d dqy(-q.z(), 0.0, q.x());
    const Eigen::RowVector3d dqz(q.y(), -q.x(), 0.0);

    auto rx = b.J.row(j);
    rx(0) = (f * R(0, 2) - px * R(2, 2)) * w * is;
    rx(1) = u.x() * is;
    rx.segment<3>(2) = (f * dqx - px * dqz) * is;
    rx(5) = f * is;
    rx(6) = 0.0;
    rx(7) = -px * is;

    auto ry = b.J.row(n + j);
    ry(0) = (f * R(1, 2) - py * R(2, 2)) * w * is;
    ry(1) = u.y() * is;
    ry.segment<3>(2) = (f * dqy - py * dqz) * is;
    ry(5) = 0.0;
    ry(6) = f * is;
    ry(7) = -py * is;
  }
  return b;
}

CameraBlock algebraic_block(const ObservationSet& obs, int camera,
                            const std::vector<StereoPointEstimate>& base, double f1,
                            const CameraModel& cam, bool with_jacobian) {
  const int n = obs.points();
  CameraBlock b;
  b.r.resize(2 * n);
  if (with_jacobian) b.J.setZero(2 * n, 8);
  const Mat3& R = cam.R;
  const double f = cam.f, tx = cam.t.x(), ty = cam.t.y(), tz = cam.t.z();
  const double itz = 1.0 / tz;
  for (int j = 0; j < n; ++j) {
    const auto& e = base[j];
    const Vec3 P(e.X, e.Y, f1 * e.z_per_f1);
    const Vec3 q = R * P;
    const ImagePoint& o = obs(camera, j);
    const double gx = f * (q.x() + tx) - o.x * q.z();
    const double gy = f * (q.y() + ty) - o.y * q.z();
    b.r(j) = gx * itz - o.x;
    b.r(n + j) = gy * itz - o.y;
    if (!with_jacobian) continue;

    const double w = e.z_per_f1;
    // d q / d omega for R <- exp([w]x) R is -[q]x.
    const Eigen::RowVector3d dqx(0.0, q.z(), -q.y());
    const Eigen::RowVector3d dqy(-q.z(), 0.0, q.x());
    const Eigen::RowVector3d dqz(q.y(), -q.x(), 0.0);

    auto rx = b.J.row(j);
    rx(0) = (f * R(0, 2) - o.x * R(2, 2)) * w * itz;
    rx(1) = (q.x() + tx) * itz;
    rx.segment<3>(2) = (f * dqx - o.x * dqz) * itz;
    rx(5) = f * itz;
    rx(6) = 0.0;
    rx(7) = -gx * itz * itz;

    auto ry = b.J.row(n + j);
    ry(0) = (f * R(1, 2) - o.y * R(2, 2)) * w * itz;
    ry(1) = (q.y() + ty) * itz;
    ry.segment<3>(2) = (f * dqy - o.y * dqz) * itz;
    ry(5) = 0.0;
    ry(6) = f * itz;
    ry(7) = -gy * itz * itz;
  }
  return b;
}

CameraBlock camera_block(ResidualKind kind, const ObservationSet& obs, int camera,
                         const std::vector<StereoPointEstimate>& base, double f1,
                         const CameraModel& cam, bool with_jacobian) {
  return kind == ResidualKind::Reprojection
             ? reprojection_block(obs, camera, base, f1, cam, with_jacobian)
             : algebraic_block(obs, camera, base, f1, cam, with_jacobian);
}

CameraModel apply_camera_step(const CameraModel& cam, const Eigen::Ref<const Eigen::VectorXd>& d) {
  CameraModel out;
  out.f = cam.f + d(0);
  out.R = rotation_exp(d.segment<3>(1)) * cam.R;
  // Keep R on SO(3) despite accumulated rounding.
  out.R = nearest_rotation(out.R);
  out.t = cam.t + d.segment<3>(4);
  return out;
}

LmOptions lm_options(const SolverConfig& c) {
  LmOptions o;
  o.max_iterations = c.max_iterations;
  o.relative_decrease = c.objective_tolerance;
  o.stall_steps = c.stall_steps;
  o.initial_damping = c.initial_damping;
  o.damping_increase = c.damping_increase;
  o.damping_decrease = c.damping_decrease;
  return o;
}

// One monocular camera with f1 held fixed; used by the restart search.
class SingleCameraProblem {
 public:
  SingleCameraProblem(const CalibrationProblem& full, const ObservationSet& obs, int k, double f1)
      : full_(full), obs_(obs), k_(k), f1_(f1) {}

  Eigen::VectorXd residuals(const CameraModel& cam) const {
    return weigh(camera_block(full_.kind(), obs_, k_ + 2, full_.base(), f1_, cam, false).r);
  }
  Eigen::MatrixXd jacobian(const CameraModel& cam) const {
    const CameraBlock b = camera_block(full_.kind(), obs_, k_ + 2, full_.base(), f1_, cam, true);
    Eigen::MatrixXd J = b.J.rightCols(7);
    const int n = obs_.points();
    J.topRows(n) *= std::sqrt(full_.lambda(k_));
    J.bottomRows(n) *= std::sqrt(1.0 - full_.lambda(k_));
    return J;
  }
  CameraModel apply(const CameraModel& cam, const Eigen::VectorXd& step) const {
    return apply_camera_step(cam, step);
  }
  bool valid(const CameraModel& cam) const {
    return cam.f > 0.0 && std::abs(cam.t.z()) > kMinAbsTz && full_.cheiral(f1_, cam);
  }

 private:
  Eigen::VectorXd weigh(Eigen::VectorXd r) const {
    const int n = obs_.points();
    r.head(n) *= std::sqrt(full_.lambda(k_));
    r.tail(n) *= std::sqrt(1.0 - full_.lambda(k_));
    return r;
  }

  const CalibrationProblem& full_;
  const ObservationSet& obs_;
  int k_;
  double f1_;
};

struct LinearSolution {
  Vec7 alpha = Vec7::Zero();
  Vec7 beta = Vec7::Zero();
  bool ok = false;
};

// Joint least squares for the 11 free entries (a1..a4, b1..b4, shared
// c5..c7), unweighted, with column equilibration.
LinearSolution solve_linear(const DesignSystem& sys) {
  const int n = static_cast<int>(sys.bx.size());
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(2 * n, 11);
  A.block(0, 0, n, 4) = sys.ax.leftCols(4);
  A.block(0, 8, n, 3) = sys.ax.rightCols(3);
  A.block(n, 4, n, 4) = sys.ay.leftCols(4);
  A.block(n, 8, n, 3) = sys.ay.rightCols(3);
  Eigen::VectorXd b(2 * n);
  b << sys.bx, sys.by;

  LinearSolution out;
  if (2 * n < 11) return out;
  Eigen::VectorXd scale(11);
  for (int c = 0; c < 11; ++c) {
    const double norm = A.col(c).norm();
    if (!(norm > 0.0)) return out;
    scale(c) = 1.0 / norm;
  }
  const Eigen::MatrixXd As = A * scale.asDiagonal();
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(As);
  qr.setThreshold(1e-12);
  if (qr.rank() < 11) return out;
  const Eigen::VectorXd x = scale.asDiagonal() * qr.solve(b);
  out.alpha << x.segment<4>(0), x.segment<3>(8);
  out.beta << x.segment<4>(4), x.segment<3>(8);
  out.ok = x.allFinite();
  return out;
}

struct CameraFit {
  double score = kInf;
  CameraModel camera;
};

struct CellScore {
  double score = kInf;
  std::vector<CameraModel> cameras;
};

CameraFit best_extraction(const CalibrationProblem& problem, int k, const LinearSolution& lin,
                          double f1, double tolerance) {
  CameraFit fit;
  std::vector<CameraModel> candidates;
  try {
    candidates = extract_camera_parameters(lin.alpha, lin.beta, f1, tolerance);
  } catch (const Error&) {
    return fit;
  }
  for (const auto& cam : candidates) {
    if (!problem.cheiral(f1, cam)) continue;
    const double s = problem.camera_objective(k, f1, cam);
    if (s < fit.score) fit = {s, cam};
  }
  return fit;
}

Mat3 random_rotation(std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::Quaterniond q(normal(rng), normal(rng), normal(rng), normal(rng));
  q.normalize();
  return q.toRotationMatrix();
}

// Resection of one camera from the f1-dependent cloud, starting from a
// given rotation: f, f tX, f tY and tZ enter linearly once R is fixed.
bool linear_pose(const ObservationSet& obs, int camera,
                 const std::vector<StereoPointEstimate>& base, double f1, const Mat3& R,
                 CameraModel& out) {
  const int n = obs.points();
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(2 * n, 4);
  Eigen::VectorXd b(2 * n);
  for (int j = 0; j < n; ++j) {
    const Vec3 q = R * base[j].at(f1).vec();
    const ImagePoint& o = obs(camera, j);
    A.row(j) << q.x(), 1.0, 0.0, -o.x;
    b(j) = o.x * q.z();
    A.row(n + j) << q.y(), 0.0, 1.0, -o.y;
    b(n + j) = o.y * q.z();
  }
  const Eigen::Vector4d x = A.colPivHouseholderQr().solve(b);
  if (!x.allFinite() || !(x(0) > 0.0) || std::abs(x(3)) <= kMinAbsTz) return false;
  out.f = x(0);
  out.R = R;
  out.t = Vec3(x(1) / x(0), x(2) / x(0), x(3));
  return true;
}

// Normalized homogeneous DLT resection of one camera from the
// f1-dependent cloud, reduced to f diag(+-1, +-1, 1) R. Both signs of the
// image axes are returned as candidates for linear_pose. Unlike the
// inhomogeneous packed system it has no degenerate solution for shallow
// (nearly planar) clouds.
std::vector<CameraModel> dlt_poses(const ObservationSet& obs, int camera,
                                   const std::vector<StereoPointEstimate>& base, double f1) {
  const int n = obs.points();
  std::vector<CameraModel> out;
  if (n < 6) return out;
  std::vector<Vec3> P(n);
  std::vector<Vec2> p(n);
  Vec3 c3 = Vec3::Zero();
  Vec2 c2 = Vec2::Zero();
  for (int j = 0; j < n; ++j) {
    P[j] = base[j].at(f1).vec();
    p[j] = Vec2(obs(camera, j).x, obs(camera, j).y);
    c3 += P[j];
    c2 += p[j];
  }
  c3 /= n;
  c2 /= n;
  double d3 = 0.0, d2 = 0.0;
  for (int j = 0; j < n; ++j) {
    d3 += (P[j] - c3).norm();
    d2 += (p[j] - c2).norm();
  }
  if (!(d3 > 0.0) || !(d2 > 0.0)) return out;
  const double s3 = std::sqrt(3.0) * n / d3, s2 = std::sqrt(2.0) * n / d2;

  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(2 * n, 12);
  for (int j = 0; j < n; ++j) {
    Eigen::RowVector4d X;
    X << (s3 * (P[j] - c3)).transpose(), 1.0;
    const Vec2 u = s2 * (p[j] - c2);
    A.block<1, 4>(2 * j, 0) = X;
    A.block<1, 4>(2 * j, 8) = -u.x() * X;
    A.block<1, 4>(2 * j + 1, 4) = X;
    A.block<1, 4>(2 * j + 1, 8) = -u.y() * X;
  }
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeFullV);
  const Eigen::VectorXd v = svd.matrixV().col(11);
  Eigen::Matrix<double, 3, 4> Pn;
  for (int r = 0; r < 3; ++r) Pn.row(r) = v.segment<4>(4 * r).transpose();

  Eigen::Matrix4d T3 = Eigen::Matrix4d::Identity();
  T3.topLeftCorner<3, 3>() *= s3;
  T3.topRightCorner<3, 1>() = -s3 * c3;
  Mat3 T2inv = Mat3::Identity();
  T2inv.topLeftCorner<2, 2>() /= s2;
  T2inv.topRightCorner<2, 1>() = c2;
  const Eigen::Matrix<double, 3, 4> Pm = T2inv * Pn * T3;

  Mat3 M = Pm.leftCols<3>();
  const double n3 = M.row(2).norm();
  if (!(n3 > 0.0) || !M.allFinite()) return out;
  M /= n3;
  if (M.determinant() < 0.0) M = -M;
  const double f = 0.5 * (M.row(0).norm() + M.row(1).norm());
  if (!(f > 0.0)) return out;
  for (double sign : {1.0, -1.0}) {
    Mat3 Rs = M;
    Rs.topRows<2>() *= sign / f;
    CameraModel cam;
    if (linear_pose(obs, camera, base, f1, nearest_rotation(Rs), cam)) out.push_back(cam);
  }
  return out;
}

// Places a camera with rotation R and focal length f1 so the cloud lies in
// front of it, its centroid projects onto the image centroid and its
// spread matches the image spread.
CameraModel facing_pose(const ObservationSet& obs, int camera,
                        const std::vector<StereoPointEstimate>& base, double f1, const Mat3& R) {
  const int n = obs.points();
  Vec3 c = Vec3::Zero();
  Vec2 m = Vec2::Zero();
  for (int j = 0; j < n; ++j) {
    c += base[j].at(f1).vec();
    m += Vec2(obs(camera, j).x, obs(camera, j).y);
  }
  c /= n;
  m /= n;
  double spread3 = 0.0, spread2 = 0.0;
  for (int j = 0; j < n; ++j) {
    spread3 = std::max(spread3, (base[j].at(f1).vec() - c).norm());
    spread2 += (Vec2(obs(camera, j).x, obs(camera, j).y) - m).norm();
  }
  spread2 /= n;
  CameraModel cam;
  cam.f = f1;
  cam.R = R;
  const double depth = std::max(f1 * spread3 / std::max(spread2, 1e-12), 2.0 * spread3);
  cam.t = -R * c + Vec3(depth * m.x() / f1, depth * m.y() / f1, depth);
  return cam;
}

// Candidates are refined on `problem` and scored on `scoring`.
CameraFit restart_search(const CalibrationProblem& problem, const CalibrationProblem& scoring,
                         const ObservationSet& obs, int k, double f1, const SolverConfig& config,
                         std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(config.seed),
                    static_cast<std::uint32_t>(config.seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(k)};
  std::mt19937_64 rng(seq);
  const SingleCameraProblem single(problem, obs, k, f1);
  LmOptions opt = lm_options(config);
  opt.max_iterations = std::min(config.max_iterations, 100);
  CameraFit fit;
  for (int r = 0; r < config.restarts; ++r) {
    const Mat3 R0 = random_rotation(rng);
    CameraModel start;
    if (!linear_pose(obs, k + 2, problem.base(), f1, R0, start) || !single.valid(start)) {
      start = facing_pose(obs, k + 2, problem.base(), f1, R0);
      if (!single.valid(start)) continue;
    }
    const auto lm = levenberg_marquardt(single, start, opt);
    const double s = scoring.camera_objective(k, f1, lm.state);
    if (s < fit.score) fit = {s, lm.state};
  }
  return fit;
}

std::vector<double> geometric_grid(double lo, double hi, int count) {
  std::vector<double> g(static_cast<std::size_t>(count));
  if (count == 1) {
    g[0] = std::sqrt(lo * hi);
    return g;
  }
  const double ratio = std::log(hi / lo);
  for (int i = 0; i < count; ++i) g[i] = lo * std::exp(ratio * i / (count - 1));
  g.front() = lo;
  g.back() = hi;
  return g;
}

double observation_diagonal(const ObservationSet& obs) {
  double mx = 0.0, my = 0.0;
  for (const auto& p : obs.data()) {
    mx = std::max(mx, std::abs(p.x));
    my = std::max(my, std::abs(p.y));
  }
  return 2.0 * std::hypot(mx, my);
}

int argmin(const std::vector<CellScore>& cells) {
  int best = -1;
  for (int i = 0; i < static_cast<int>(cells.size()); ++i) {
    if (cells[i].score < kInf && (best < 0 || cells[i].score < cells[best].score)) best = i;
  }
  return best;
}

// Re-examines every sign branch of each converged rotation with the other
// camera parameters held. Returns the branch label of each camera and
// switches cameras to a strictly better cheiral branch.
std::vector<BranchLabel> check_branches(const CalibrationProblem& problem,
                                        NetworkParameters& params, bool allow_switch,
                                        int& switches) {
  std::vector<BranchLabel> labels(params.monocular.size());
  switches = 0;
  for (int k = 0; k < problem.cameras(); ++k) {
    CameraModel& cam = params.monocular[k];
    RotationCandidateSet set;
    try {
      set = enumerate_rotations(RotationSeed::from(cam.R));
    } catch (const Error&) {
      continue;
    }
    // The label of the current rotation is that of its nearest candidate.
    double nearest = kInf;
    for (const auto& c : set.candidates) {
      const double d = (c.R - cam.R).cwiseAbs().maxCoeff();
      if (d < nearest) {
        nearest = d;
        labels[k] = c.label;
      }
    }
    const double current = problem.camera_objective(k, params.f1, cam);
    double best = current;
    const RotationCandidate* winner = nullptr;
    for (const auto& c : set.candidates) {
      CameraModel alt = cam;
      alt.R = c.R;
      if (!problem.cheiral(params.f1, alt)) continue;
      const double s = problem.camera_objective(k, params.f1, alt);
      if (s < best * (1.0 - 1e-9)) {
        best = s;
        winner = &c;
      }
    }
    if (winner && allow_switch) {
      cam.R = winner->R;
      labels[k] = winner->label;
      ++switches;
    }
  }
  return labels;
}

}  // namespace

double SolverConfig::lambda_for(int k) const {
  if (lambda.empty()) return 0.5;
  if (lambda.size() == 1) return lambda.front();
  return lambda.at(static_cast<std::size_t>(k));
}

void SolverConfig::validate(int monocular_cameras) const {
  if (lambda.size() > 1 && static_cast<int>(lambda.size()) != monocular_cameras) {
    throw Error(ErrorKind::InvalidArgument,
                "lambda list has " + std::to_string(lambda.size()) + " entries for " +
                    std::to_string(monocular_cameras) + " monocular cameras");
  }
  for (double l : lambda) {
    if (!(l >= 0.0 && l <= 1.0)) {
      throw Error(ErrorKind::InvalidArgument, "lambda must lie in [0, 1]");
    }
  }
  if (f1_grid.count < 1) throw Error(ErrorKind::InvalidArgument, "f1 grid needs >= 1 cell");
  if ((f1_grid.lo != 0.0 || f1_grid.hi != 0.0) &&
      !(f1_grid.lo > 0.0 && f1_grid.hi >= f1_grid.lo)) {
    throw Error(ErrorKind::InvalidArgument, "f1 grid bounds must be positive and ordered");
  }
  if (max_iterations < 1) throw Error(ErrorKind::InvalidArgument, "max iterations must be >= 1");
  if (!(objective_tolerance >= 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "objective tolerance must be >= 0");
  }
}

NetworkParameters CalibrationResult::parameters() const {
  NetworkParameters p;
  p.f1 = f1;
  p.monocular.assign(cameras.begin() + std::min<std::size_t>(2, cameras.size()), cameras.end());
  return p;
}

CalibrationProblem::CalibrationProblem(const ObservationSet& obs,
                                       std::vector<StereoPointEstimate> base,
                                       std::vector<double> lambda, ResidualKind kind)
    : obs_(&obs), base_(std::move(base)), lambda_(std::move(lambda)), kind_(kind) {
  if (static_cast<int>(base_.size()) != obs.points() ||
      static_cast<int>(lambda_.size()) != obs.cameras() - 2) {
    throw Error(ErrorKind::DimensionMismatch, "calibration problem dimensions disagree");
  }
}

Eigen::VectorXd CalibrationProblem::camera_residuals(int k, double f1,
                                                     const CameraModel& cam) const {
  return camera_block(kind_, *obs_, k + 2, base_, f1, cam, false).r;
}

double CalibrationProblem::camera_objective(int k, double f1, const CameraModel& cam) const {
  const Eigen::VectorXd r = camera_residuals(k, f1, cam);
  const int n = points();
  return lambda_[k] * r.head(n).norm() + (1.0 - lambda_[k]) * r.tail(n).norm();
}

bool CalibrationProblem::cheiral(double f1, const CameraModel& cam) const {
  for (const auto& e : base_) {
    const double depth = cam.R.row(2).dot(e.at(f1).vec()) + cam.t.z();
    if (!(depth > 0.0)) return false;
  }
  return true;
}

Eigen::VectorXd CalibrationProblem::residuals(const NetworkParameters& p) const {
  const int n = points();
  Eigen::VectorXd r(2 * n * cameras());
  for (int k = 0; k < cameras(); ++k) {
    Eigen::VectorXd rk = camera_residuals(k, p.f1, p.monocular[k]);
    rk.head(n) *= std::sqrt(lambda_[k]);
    rk.tail(n) *= std::sqrt(1.0 - lambda_[k]);
    r.segment(2 * n * k, 2 * n) = rk;
  }
  return r;
}

Eigen::MatrixXd CalibrationProblem::jacobian(const NetworkParameters& p) const {
  const int n = points();
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(2 * n * cameras(), parameter_count());
  for (int k = 0; k < cameras(); ++k) {
    CameraBlock b = camera_block(kind_, *obs_, k + 2, base_, p.f1, p.monocular[k], true);
    b.J.topRows(n) *= std::sqrt(lambda_[k]);
    b.J.bottomRows(n) *= std::sqrt(1.0 - lambda_[k]);
    J.block(2 * n * k, 0, 2 * n, 1) = b.J.col(0);
    J.block(2 * n * k, 1 + 7 * k, 2 * n, 7) = b.J.rightCols(7);
  }
  return J;
}

NetworkParameters CalibrationProblem::apply(const NetworkParameters& p,
                                            const Eigen::VectorXd& step) const {
  NetworkParameters out;
  out.f1 = p.f1 + step(0);
  out.monocular.reserve(p.monocular.size());
  for (int k = 0; k < cameras(); ++k) {
    out.monocular.push_back(apply_camera_step(p.monocular[k], step.segment<7>(1 + 7 * k)));
  }
  return out;
}

bool CalibrationProblem::valid(const NetworkParameters& p) const {
  if (!(p.f1 > 0.0) || static_cast<int>(p.monocular.size()) != cameras()) return false;
  for (const auto& cam : p.monocular) {
    if (!(cam.f > 0.0) || !(std::abs(cam.t.z()) > kMinAbsTz) || !cheiral(p.f1, cam)) return false;
  }
  return true;
}

double objective(const ObservationSet& obs, const StereoRig& rig, const NetworkParameters& params,
                 const SolverConfig& config) {
  const int monocular = obs.cameras() - 2;
  if (static_cast<int>(params.monocular.size()) != monocular) {
    throw Error(ErrorKind::DimensionMismatch, "parameter count does not match the network");
  }
  config.validate(monocular);
  if (!(params.f1 > 0.0)) throw Error(ErrorKind::Domain, "f1 must be positive");
  for (const auto& cam : params.monocular) {
    if (!(cam.f > 0.0) || orthonormality_error(cam.R) > 1e-9 || cam.R.determinant() <= 0.0 ||
        !(std::abs(cam.t.z()) > 1e-12)) {
      throw Error(ErrorKind::Domain,
                  "camera parameters outside the domain (f > 0, proper rotation, tZ != 0)");
    }
  }
  const double rho = estimate_focal_ratio(obs, config.ratio_aggregate, config.stereo).rho;
  const auto base = triangulate_stereo(obs, rig.baseline, rho, config.stereo);
  double total = 0.0;
  for (int k = 0; k < monocular; ++k) {
    const DesignSystem sys = build_design_system(obs, k + 2, base);
    const CombinedParameters packed = pack_parameters(params.monocular[k], params.f1);
    const double lambda = config.lambda_for(k);
    total += lambda * (sys.ax * packed.alpha - sys.bx).norm() +
             (1.0 - lambda) * (sys.ay * packed.beta - sys.by).norm();
  }
  return total;
}

CalibrationResult calibrate(const ObservationSet& obs, const StereoRig& rig,
                            const SolverConfig& config) {
  const int m = obs.cameras(), n = obs.points();
  const Feasibility feas = feasibility(m, n);
  if (!feas.feasible) {
    throw Error(ErrorKind::InfeasibleNetwork,
                "infeasible network: (M-2)(2N-7) >= 1 requires M >= 3 cameras and N >= 4 "
                "points, got M = " + std::to_string(m) + ", N = " + std::to_string(n));
  }
  const int monocular = m - 2;
  config.validate(monocular);
  const bool parallel = config.policy == ExecutionPolicy::Parallel;

  const FocalRatio rho = estimate_focal_ratio(obs, config.ratio_aggregate, config.stereo);
  // Work in baseline units; translations are rescaled to millimeters at
  // the end, so f1 and the rotations do not depend on the baseline value.
  auto base = parallel ? kernels::triangulate_parallel(obs, 1.0, rho.rho, config.stereo)
                       : kernels::triangulate_serial(obs, 1.0, rho.rho, config.stereo);
  std::vector<double> lambda(monocular);
  for (int k = 0; k < monocular; ++k) lambda[k] = config.lambda_for(k);
  const CalibrationProblem problem(obs, base, lambda, ResidualKind::Reprojection);
  const CalibrationProblem algebraic(obs, base, lambda, ResidualKind::Algebraic);
  const CalibrationProblem& scoring =
      config.grid_score == GridScore::Reprojection ? problem : algebraic;

  std::vector<LinearSolution> linear(monocular);
  bool linear_ok = true;
  for (int k = 0; k < monocular; ++k) {
    linear[k] = solve_linear(build_design_system(obs, k + 2, problem.base()));
    linear_ok = linear_ok && linear[k].ok;
  }

  double lo = config.f1_grid.lo, hi = config.f1_grid.hi;
  if (lo == 0.0 && hi == 0.0) {
    const double diag =
        config.image_diagonal_px > 0.0 ? config.image_diagonal_px : observation_diagonal(obs);
    lo = 0.2 * diag;
    hi = 5.0 * diag;
  }

  auto score_grid = [&](const std::vector<double>& grid, std::uint64_t stage) {
    const kernels::IndexedScore<CellScore> score = [&](int cell) {
      CellScore out;
      out.score = 0.0;
      const double f1 = grid[cell];
      for (int k = 0; k < monocular; ++k) {
        CameraFit fit;
        if (linear_ok) {
          fit = best_extraction(scoring, k, linear[k], f1, config.extraction_tolerance);
        }
        for (const auto& cam : dlt_poses(obs, k + 2, problem.base(), f1)) {
          if (!problem.cheiral(f1, cam)) continue;
          const double s = scoring.camera_objective(k, f1, cam);
          if (s < fit.score) fit = {s, cam};
        }
        if (!(fit.score < kInf)) {
          fit = restart_search(problem, scoring, obs, k, f1, config, stage * 65536u + cell);
        }
        if (!(fit.score < kInf)) return CellScore{};
        out.score += fit.score;
        out.cameras.push_back(fit.camera);
      }
      return out;
    };
    const int count = static_cast<int>(grid.size());
    return parallel ? kernels::map_parallel(count, score) : kernels::map_serial(count, score);
  };

  const std::vector<double> coarse = geometric_grid(lo, hi, config.f1_grid.count);
  const auto coarse_scores = score_grid(coarse, 1);
  const int cb = argmin(coarse_scores);
  if (cb < 0) {
    throw Error(ErrorKind::NoCandidate, "no f1 grid cell yields a valid camera network");
  }
  const int last = static_cast<int>(coarse.size()) - 1;
  const std::vector<double> fine =
      geometric_grid(coarse[std::max(cb - 1, 0)], coarse[std::min(cb + 1, last)],
                     config.f1_grid.count);
  const auto fine_scores = score_grid(fine, 2);
  const int fb = argmin(fine_scores);

  ConvergenceDiagnostics diag;
  diag.initialization = linear_ok ? "linear" : "resection";
  NetworkParameters start;
  if (fb >= 0 && fine_scores[fb].score <= coarse_scores[cb].score) {
    start = {fine[fb], fine_scores[fb].cameras};
    diag.grid_cell = fb;
  } else {
    start = {coarse[cb], coarse_scores[cb].cameras};
    diag.grid_cell = cb;
  }
  diag.grid_f1 = start.f1;

  const LmOptions opt = lm_options(config);
  auto lm = levenberg_marquardt(problem, start, opt);
  NetworkParameters params = lm.state;
  int switches = 0;
  std::vector<BranchLabel> labels = check_branches(problem, params, true, switches);
  diag.refinement_costs = lm.accepted_costs;
  diag.iterations = lm.iterations;
  if (switches > 0) {
    auto again = levenberg_marquardt(problem, params, opt);
    if (again.cost <= lm.cost) {
      params = again.state;
      lm.converged = again.converged;
      diag.refinement_costs.insert(diag.refinement_costs.end(), again.accepted_costs.begin() + 1,
                                   again.accepted_costs.end());
      diag.iterations += again.iterations;
      lm.damping = again.damping;
      int unused = 0;
      labels = check_branches(problem, params, false, unused);
    } else {
      // The switched branch refined to something worse; keep the original.
      params = lm.state;
      switches = 0;
      labels = check_branches(problem, params, false, switches);
    }
  }
  diag.branch_switches = switches;
  diag.final_damping = lm.damping;
  diag.converged = lm.converged;

  CalibrationResult result;
  result.baseline = rig.baseline;
  result.f1 = params.f1;
  result.rho = rho;
  result.cameras.push_back(rig.left(params.f1));
  result.cameras.push_back(rig.right(rho.rho * params.f1));
  result.branches.assign(2, BranchLabel{});
  for (int k = 0; k < monocular; ++k) {
    CameraModel cam = params.monocular[k];
    const Eigen::VectorXd r = problem.camera_residuals(k, params.f1, cam);
    std::vector<Vec2> rows(n);
    for (int j = 0; j < n; ++j) rows[j] = Vec2(r(j), r(n + j));
    result.residuals.push_back(std::move(rows));
    cam.t *= rig.baseline;
    result.cameras.push_back(cam);
    result.branches.push_back(labels[k]);
  }
  result.cloud = reconstruct_cloud(obs, rig, params.f1, rho.rho, config.stereo);
  result.objective_value = objective(obs, rig, result.parameters(), config);
  result.diagnostics = std::move(diag);
  if (!result.diagnostics.converged) {
    throw NonConvergenceError(std::move(result),
                              "refinement did not converge within " +
                                  std::to_string(config.max_iterations) + " iterations");
  }
  return result;
}

}  // namespace eucal
