// eucal: simulate, calibrate, evaluate and degrade-ba subcommands.
// Exit codes: 0 success, 2 input error, 3 best-effort non-convergence.

#include <cmath>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "eucal/bundle.hpp"
#include "eucal/evaluation.hpp"
#include "eucal/io.hpp"
#include "eucal/projection.hpp"
#include "eucal/solver.hpp"
#include "eucal/stereo.hpp"
#include "eucal/synthetic.hpp"

namespace fs = std::filesystem;
using namespace eucal;

namespace {

constexpr int kOk = 0;
constexpr int kInputError = 2;
constexpr int kBestEffort = 3;

std::vector<double> split_numbers(const std::string& text, char sep, const std::string& flag) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, sep)) {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != item.size() || !std::isfinite(v)) {
      throw Error(ErrorKind::InvalidArgument, flag + ": '" + item + "' is not a number");
    }
    out.push_back(v);
  }
  return out;
}

std::string join(const fs::path& dir, const std::string& name) { return (dir / name).string(); }

fs::path prepare_dir(const std::string& dir) {
  fs::path p(dir);
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw Error(ErrorKind::InvalidArgument, "--out-dir " + dir + ": " + ec.message());
  return p;
}

template <typename Writer>
void write_stream_file(const std::string& path, Writer&& writer) {
  std::ostringstream out;
  writer(out);
  io::write_text_file(path, out.str());
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  std::string spec_file;
  int cameras = 0;
  int points = 0;
  double baseline = 0.0;
  double noise = 0.0;
  std::uint64_t seed = 0;
  std::string box;
  std::string out_dir = ".";
};

int run_simulate(const SimulateArgs& a, const CLI::App& cmd) {
  SceneSpec spec;
  if (!a.spec_file.empty()) spec = io::scene_spec_from_json(io::read_text_file(a.spec_file));
  if (cmd.count("--cameras")) spec.cameras = a.cameras;
  if (cmd.count("--points")) spec.points = a.points;
  if (cmd.count("--baseline-mm")) spec.baseline = a.baseline;
  if (cmd.count("--noise-px")) spec.noise_sigma = a.noise;
  if (cmd.count("--seed")) spec.seed = a.seed;
  if (cmd.count("--box-mm")) {
    const auto v = split_numbers(a.box, 'x', "--box-mm");
    if (v.size() != 3) throw Error(ErrorKind::InvalidArgument, "--box-mm expects AxBxC");
    spec.box = Vec3(v[0], v[1], v[2]);
  }
  const GroundTruth gt = generate(spec);
  const fs::path dir = prepare_dir(a.out_dir);
  io::write_text_file(join(dir, "truth.json"), io::ground_truth_to_json(gt));
  write_stream_file(join(dir, "correspondences_clean.csv"),
                    [&](std::ostream& o) { io::write_correspondences(o, gt.clean); });
  write_stream_file(join(dir, "correspondences.csv"),
                    [&](std::ostream& o) { io::write_correspondences(o, gt.noisy); });
  return kOk;
}

// --------------------------------------------------------------- calibrate

struct CalibrateArgs {
  std::string correspondences;
  double baseline = 0.0;
  std::string lambda;
  std::string f1_grid;
  int max_iters = 200;
  double tol = 1e-12;
  std::uint64_t seed = 0;
  std::string out_dir = ".";
  std::string principal_point;
};

std::optional<Vec2> principal_point(const std::string& text) {
  if (text.empty()) return std::nullopt;
  const auto v = split_numbers(text, ',', "--principal-point");
  if (v.size() != 2) throw Error(ErrorKind::InvalidArgument, "--principal-point expects cx,cy");
  return Vec2(v[0], v[1]);
}

void write_calibration_artifacts(const fs::path& dir, const CalibrationResult& r,
                                 const StereoRig& rig, const ObservationSet& obs) {
  io::write_text_file(join(dir, "calibration.json"), io::calibration_to_json(r));
  write_stream_file(join(dir, "cloud.ply"),
                    [&](std::ostream& o) { io::write_ply(o, r.cloud, r.baseline, r.f1); });
  const ReprojectionReport rep = reprojection_errors(r, rig, obs);
  write_stream_file(join(dir, "reprojection.csv"),
                    [&](std::ostream& o) { io::write_reprojection_csv(o, rep); });
}

int run_calibrate(const CalibrateArgs& a, const CLI::App& cmd) {
  if (!cmd.count("--baseline-mm")) {
    throw Error(ErrorKind::InvalidArgument,
                "--baseline-mm is required: the baseline is required for Euclidean "
                "(scale-true) recovery");
  }
  if (!(a.baseline > 0.0) || !std::isfinite(a.baseline)) {
    throw Error(ErrorKind::InvalidArgument, "--baseline-mm must be positive");
  }
  const ObservationSet obs =
      io::read_correspondences_file(a.correspondences, principal_point(a.principal_point));
  SolverConfig cfg;
  if (!a.lambda.empty()) cfg.lambda = split_numbers(a.lambda, ',', "--lambda");
  if (!a.f1_grid.empty()) {
    const auto v = split_numbers(a.f1_grid, ':', "--f1-grid");
    if (v.size() != 3 || v[2] != std::floor(v[2])) {
      throw Error(ErrorKind::InvalidArgument, "--f1-grid expects lo:hi:n");
    }
    cfg.f1_grid = {v[0], v[1], static_cast<int>(v[2])};
  }
  cfg.max_iterations = a.max_iters;
  cfg.objective_tolerance = a.tol;
  cfg.seed = a.seed;
  const fs::path dir = prepare_dir(a.out_dir);
  const StereoRig rig(a.baseline);
  try {
    const CalibrationResult r = calibrate(obs, rig, cfg);
    write_calibration_artifacts(dir, r, rig, obs);
    return kOk;
  } catch (const NonConvergenceError& e) {
    write_calibration_artifacts(dir, e.best(), rig, obs);
    std::cerr << "warning: " << e.what() << " (best-effort results written)\n";
    return kBestEffort;
  }
}

// ---------------------------------------------------------------- evaluate

struct EvaluateArgs {
  std::string calibration;
  std::string correspondences;
  std::string truth;
  std::string out_dir = ".";
  std::string principal_point;
};

// The stereo cloud is a function of the stereo observations, f1 and the
// focal ratio unless the file carries refined points.
std::vector<WorldPoint> cloud_for(const CalibrationResult& r, const ObservationSet& obs) {
  if (!r.cloud.empty()) return r.cloud;
  return reconstruct_cloud(obs, StereoRig(r.baseline), r.f1, r.rho.rho);
}

void check_consistent(const CalibrationResult& r, const ObservationSet& obs) {
  if (static_cast<int>(r.cameras.size()) != obs.cameras()) {
    throw Error(ErrorKind::DimensionMismatch,
                "calibration has " + std::to_string(r.cameras.size()) +
                    " cameras but correspondences use camera ids 1.." +
                    std::to_string(obs.cameras()));
  }
  if (!r.cloud.empty() && static_cast<int>(r.cloud.size()) != obs.points()) {
    throw Error(ErrorKind::DimensionMismatch,
                "calibration has " + std::to_string(r.cloud.size()) +
                    " points but correspondences have " + std::to_string(obs.points()));
  }
}

int run_evaluate(const EvaluateArgs& a) {
  const CalibrationResult r = io::calibration_from_json(io::read_text_file(a.calibration));
  const ObservationSet obs =
      io::read_correspondences_file(a.correspondences, principal_point(a.principal_point));
  check_consistent(r, obs);
  const std::vector<WorldPoint> cloud = cloud_for(r, obs);

  io::EvaluationSummary summary;
  summary.reprojection = reprojection_errors(r.cameras, cloud, obs);
  std::optional<Vec3> reference;
  std::optional<GroundTruth> truth;
  if (!a.truth.empty()) {
    truth = io::ground_truth_from_json(io::read_text_file(a.truth));
    if (static_cast<int>(truth->cameras.size()) != obs.cameras() ||
        static_cast<int>(truth->points.size()) != obs.points()) {
      throw Error(ErrorKind::DimensionMismatch,
                  "ground truth grid does not match the correspondences");
    }
    reference = bounding_extent(truth->points);
    summary.parameters = parameter_errors(r.cameras, cloud, *truth);
  }
  summary.scale = scale_report(cloud, reference, stereo_separation(r.cameras));

  const fs::path dir = prepare_dir(a.out_dir);
  write_stream_file(join(dir, "reprojection.csv"), [&](std::ostream& o) {
    io::write_reprojection_csv(o, summary.reprojection);
  });
  io::write_text_file(join(dir, "summary.json"), io::summary_to_json(summary));
  return kOk;
}

// ------------------------------------------------------------- degrade-ba

struct DegradeArgs {
  std::string calibration;
  std::string correspondences;
  int max_iters = 200;
  std::string out_dir = ".";
  std::string principal_point;
};

int run_degrade(const DegradeArgs& a) {
  CalibrationResult r = io::calibration_from_json(io::read_text_file(a.calibration));
  const ObservationSet obs =
      io::read_correspondences_file(a.correspondences, principal_point(a.principal_point));
  check_consistent(r, obs);
  r.cloud = cloud_for(r, obs);
  BundleConfig cfg;
  cfg.lm.max_iterations = a.max_iters;
  const BundleOutcome out = refine_unconstrained_ba(r, obs, cfg);

  const fs::path dir = prepare_dir(a.out_dir);
  io::write_text_file(join(dir, "calibration_ba.json"), io::calibration_to_json(out.result, true));
  io::write_text_file(join(dir, "drift.json"), io::drift_to_json(out.drift));
  write_stream_file(join(dir, "cloud_ba.ply"), [&](std::ostream& o) {
    io::write_ply(o, out.result.cloud, out.result.baseline, out.result.f1);
  });
  if (!out.drift.converged) {
    std::cerr << "warning: bundle adjustment did not converge in " << out.drift.iterations
              << " iterations (best-effort results written)\n";
    return kBestEffort;
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Euclidean calibration of a camera network with a known-baseline stereo pair"};
  app.require_subcommand(1);

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Generate a synthetic scene and correspondences");
  simulate->add_option("--spec", sim.spec_file, "Scene spec JSON (flags override it)");
  simulate->add_option("--cameras", sim.cameras, "Number of cameras M (stereo pair included)");
  simulate->add_option("--points", sim.points, "Number of points N");
  simulate->add_option("--baseline-mm", sim.baseline, "Stereo baseline in millimeters");
  simulate->add_option("--noise-px", sim.noise, "Gaussian pixel noise sigma");
  simulate->add_option("--seed", sim.seed, "Random seed");
  simulate->add_option("--box-mm", sim.box, "Point envelope AxBxC in millimeters");
  simulate->add_option("--out-dir", sim.out_dir, "Output directory");

  CalibrateArgs cal;
  auto* calib = app.add_subcommand("calibrate", "Calibrate the network from correspondences");
  calib->add_option("correspondences", cal.correspondences, "Correspondence CSV")->required();
  calib->add_option("--baseline-mm", cal.baseline, "Stereo baseline in millimeters");
  calib->add_option("--lambda", cal.lambda, "x-equation weight, global or comma list per camera");
  calib->add_option("--f1-grid", cal.f1_grid, "f1 search grid lo:hi:n in pixels");
  calib->add_option("--max-iters", cal.max_iters, "Refinement iteration cap");
  calib->add_option("--tol", cal.tol, "Relative objective decrease treated as stalled");
  calib->add_option("--seed", cal.seed, "Seed for the small-N initialization restarts");
  calib->add_option("--out-dir", cal.out_dir, "Output directory");
  calib->add_option("--principal-point", cal.principal_point,
                    "cx,cy to subtract from raw corner-origin pixels");

  EvaluateArgs ev;
  auto* evaluate = app.add_subcommand("evaluate", "Reprojection, scale and parameter reports");
  evaluate->add_option("--calibration", ev.calibration, "Calibration JSON")->required();
  evaluate->add_option("--correspondences", ev.correspondences, "Correspondence CSV")->required();
  evaluate->add_option("--truth", ev.truth, "Ground-truth JSON from simulate");
  evaluate->add_option("--out-dir", ev.out_dir, "Output directory");
  evaluate->add_option("--principal-point", ev.principal_point,
                       "cx,cy to subtract from raw corner-origin pixels");

  DegradeArgs dg;
  auto* degrade =
      app.add_subcommand("degrade-ba", "Refine with unconstrained bundle adjustment, report drift");
  degrade->add_option("--calibration", dg.calibration, "Calibration JSON")->required();
  degrade->add_option("--correspondences", dg.correspondences, "Correspondence CSV")->required();
  degrade->add_option("--max-iters", dg.max_iters, "Iteration cap");
  degrade->add_option("--out-dir", dg.out_dir, "Output directory");
  degrade->add_option("--principal-point", dg.principal_point,
                      "cx,cy to subtract from raw corner-origin pixels");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kInputError;
  }

  try {
    if (*simulate) return run_simulate(sim, *simulate);
    if (*calib) return run_calibrate(cal, *calib);
    if (*evaluate) return run_evaluate(ev);
    return run_degrade(dg);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  }
}
