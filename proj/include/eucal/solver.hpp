#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "eucal/design.hpp"
#include "eucal/lm.hpp"
#include "eucal/rotation.hpp"
#include "eucal/stereo.hpp"
#include "eucal/types.hpp"

namespace eucal {

enum class ExecutionPolicy { Serial, Parallel };

/// How f1 grid cells and initial camera candidates are ranked.
/// StackedSystem uses the objective() terms; their residuals shrink with
/// depth / tZ, so on noisy data they favor cameras whose focal plane runs
/// through the cloud. Reprojection uses the same weighted norms of pixel
/// residuals.
enum class GridScore { Reprojection, StackedSystem };

struct F1Grid {
  double lo = 0.0;  // pixels; 0 means derive from the image diagonal
  double hi = 0.0;
  int count = 64;
};

struct SolverConfig {
  /// Weight of the x equations per monocular camera, in [0, 1]. Empty means
  /// 0.5 everywhere; a single value is broadcast.
  std::vector<double> lambda;
  F1Grid f1_grid;
  /// Image diagonal used for the default f1 grid; 0 derives it from the
  /// spread of the observations.
  double image_diagonal_px = 0.0;
  int max_iterations = 200;
  double objective_tolerance = 1e-12;
  int stall_steps = 3;
  double initial_damping = 1e-3;
  double damping_increase = 10.0;
  double damping_decrease = 1.0 / 3.0;
  /// Seed for the random restarts used when the linear initialization is
  /// rank deficient (fewer than six points).
  std::uint64_t seed = 0;
  int restarts = 32;
  /// Orthonormality slack allowed when reading a camera out of the linear
  /// solution during the f1 grid search.
  double extraction_tolerance = 0.5;
  GridScore grid_score = GridScore::Reprojection;
  RatioAggregate ratio_aggregate = RatioAggregate::Mean;
  StereoTolerances stereo;
  ExecutionPolicy policy = ExecutionPolicy::Parallel;

  double lambda_for(int monocular_index) const;
  void validate(int monocular_cameras) const;
};

/// Independent unknowns: f1 plus the monocular cameras (index 0 here is
/// camera 3 of the network).
struct NetworkParameters {
  double f1 = 1.0;
  std::vector<CameraModel> monocular;
};

struct ConvergenceDiagnostics {
  bool converged = false;
  int iterations = 0;
  double final_damping = 0.0;
  int grid_cell = -1;      // index into the refined grid
  double grid_f1 = 0.0;
  std::string initialization;  // "linear" or "resection"
  int branch_switches = 0;
  std::vector<double> refinement_costs;  // accepted reprojection costs, 0.5 sum r^2
};

struct CalibrationResult {
  double baseline = 0.0;  // mm
  double f1 = 0.0;
  FocalRatio rho;
  /// All M cameras; entries 0 and 1 are the stereo pair.
  std::vector<CameraModel> cameras;
  /// Rotation branch per camera (stereo entries hold the default label).
  std::vector<BranchLabel> branches;
  std::vector<WorldPoint> cloud;
  /// Unweighted (x, y) reprojection residuals, pixels,
  /// [monocular camera][point].
  std::vector<std::vector<Vec2>> residuals;
  double objective_value = 0.0;
  ConvergenceDiagnostics diagnostics;

  NetworkParameters parameters() const;
};

class NonConvergenceError : public Error {
 public:
  NonConvergenceError(CalibrationResult best, const std::string& what)
      : Error(ErrorKind::NonConvergence, what), best_(std::move(best)) {}
  const CalibrationResult& best() const noexcept { return best_; }

 private:
  CalibrationResult best_;
};

/// Algebraic: rows of the stacked design systems, A_x alpha - b_x, which
/// equal the pixel reprojection error scaled by depth / tZ.
/// Reprojection: projected minus observed pixel coordinates.
enum class ResidualKind { Algebraic, Reprojection };

/// The monocular cameras as a nonlinear least-squares problem in f1 and
/// the camera parameters, with the cloud tied to f1 through the stereo
/// estimates. Residual layout is camera-major: N x-residuals then N
/// y-residuals per camera, scaled by sqrt(lambda) and sqrt(1 - lambda).
/// The step layout is [df1, (df, w0, w1, w2, dtX, dtY, dtZ) per camera],
/// rotations updated as R <- exp([w]x) R.
class CalibrationProblem {
 public:
  CalibrationProblem(const ObservationSet& obs, std::vector<StereoPointEstimate> base,
                     std::vector<double> lambda,
                     ResidualKind kind = ResidualKind::Reprojection);

  int cameras() const { return static_cast<int>(lambda_.size()); }
  int points() const { return obs_->points(); }
  int parameter_count() const { return 1 + 7 * cameras(); }

  Eigen::VectorXd residuals(const NetworkParameters& p) const;
  Eigen::MatrixXd jacobian(const NetworkParameters& p) const;
  NetworkParameters apply(const NetworkParameters& p, const Eigen::VectorXd& step) const;
  bool valid(const NetworkParameters& p) const;

  /// Unweighted residuals of one camera, [x_0..x_{N-1}, y_0..y_{N-1}].
  Eigen::VectorXd camera_residuals(int k, double f1, const CameraModel& cam) const;
  /// lambda |r_x| + (1 - lambda) |r_y| for one camera.
  double camera_objective(int k, double f1, const CameraModel& cam) const;
  /// Every point in front of the camera.
  bool cheiral(double f1, const CameraModel& cam) const;

  const std::vector<StereoPointEstimate>& base() const { return base_; }
  double lambda(int k) const { return lambda_[k]; }
  ResidualKind kind() const { return kind_; }

 private:
  const ObservationSet* obs_;
  std::vector<StereoPointEstimate> base_;
  std::vector<double> lambda_;
  ResidualKind kind_;
};

/// Weighted multi-objective value
///   sum_i lambda_i |A_x a - b_x| + (1 - lambda_i) |A_y b - b_y|
/// with unsquared Euclidean norms, assembled through the stacked design
/// systems.
double objective(const ObservationSet& obs, const StereoRig& rig, const NetworkParameters& params,
                 const SolverConfig& config = {});

/// Full pipeline: focal ratio, stereo triangulation, f1 grid search over
/// linear initializations, joint damped refinement, per-camera branch
/// check, final cloud. Throws InfeasibleNetwork when (M-2)(2N-7) < 1 and
/// NonConvergenceError (carrying the best result) when the refinement
/// runs out of iterations.
CalibrationResult calibrate(const ObservationSet& obs, const StereoRig& rig,
                            const SolverConfig& config = {});

}  // namespace eucal
