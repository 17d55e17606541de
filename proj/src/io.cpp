#include "eucal/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <utility>

#include "json.hpp"

namespace eucal::io {
namespace {

using json = nlohmann::ordered_json;

[[noreturn]] void parse_error(const std::string& source, int line, const std::string& what) {
  throw Error(ErrorKind::Parse, source + ":" + std::to_string(line) + ": " + what);
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

template <typename T>
bool parse_number(const std::string& text, T& out) {
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, out);
  return ec == std::errc() && ptr == end;
}

json vec_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

Vec3 vec_from(const json& j, const std::string& what) {
  if (!j.is_array() || j.size() != 3) {
    throw Error(ErrorKind::Parse, what + " must be an array of 3 numbers");
  }
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

json camera_json(int id, const CameraModel& c, const std::optional<BranchLabel>& label) {
  json j;
  j["id"] = id;
  j["f_px"] = c.f;
  json R = json::array();
  for (int r = 0; r < 3; ++r)
    for (int k = 0; k < 3; ++k) R.push_back(c.R(r, k));
  j["R"] = R;
  j["t_mm"] = vec_json(c.t);
  j["branch_label"] = label ? json(label->str()) : json(nullptr);
  return j;
}

CameraModel camera_from(const json& j, const std::string& what) {
  CameraModel c;
  c.f = j.at("f_px").get<double>();
  const json& R = j.at("R");
  if (!R.is_array() || R.size() != 9) {
    throw Error(ErrorKind::Parse, what + ": R must hold 9 numbers (row-major)");
  }
  for (int r = 0; r < 3; ++r)
    for (int k = 0; k < 3; ++k) c.R(r, k) = R[3 * r + k].get<double>();
  c.t = vec_from(j.at("t_mm"), what + ": t_mm");
  if (!(c.f > 0.0)) throw Error(ErrorKind::Parse, what + ": f_px must be positive");
  if ((c.R * c.R.transpose() - Mat3::Identity()).cwiseAbs().maxCoeff() > 1e-6 ||
      c.R.determinant() <= 0.0) {
    throw Error(ErrorKind::Parse, what + ": R is not a proper rotation within 1e-6");
  }
  return c;
}

json points_json(std::span<const WorldPoint> cloud) {
  json a = json::array();
  for (const auto& p : cloud) a.push_back(vec_json(p.vec()));
  return a;
}

std::vector<WorldPoint> points_from(const json& a) {
  std::vector<WorldPoint> out;
  for (const auto& p : a) out.push_back(WorldPoint::from(vec_from(p, "point")));
  return out;
}

json range_json(const Range& r) { return json::array({r.lo, r.hi}); }

Range range_from(const json& j, const std::string& key) {
  if (!j.is_array() || j.size() != 2) {
    throw Error(ErrorKind::InvalidArgument, "invalid scene spec: " + key + " must be [lo, hi]");
  }
  return {j[0].get<double>(), j[1].get<double>()};
}

template <typename F>
auto guarded(const std::string& what, F&& f) {
  try {
    return f();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, what + ": " + e.what());
  }
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

ObservationSet read_correspondences(std::istream& in, const std::string& source,
                                    std::optional<Vec2> principal_point) {
  std::string line;
  int line_no = 0;
  bool header = false;
  std::map<std::pair<int, int>, std::pair<ImagePoint, int>> rows;
  int max_cam = 0, max_pt = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty()) continue;
    if (!header) {
      if (t != "camera_id,point_id,x,y") {
        parse_error(source, line_no, "expected header 'camera_id,point_id,x,y'");
      }
      header = true;
      continue;
    }
    std::vector<std::string> fields;
    std::stringstream ss(t);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(trim(field));
    if (fields.size() != 4) parse_error(source, line_no, "expected 4 comma-separated fields");
    int cam = 0, pt = 0;
    ImagePoint p;
    if (!parse_number(fields[0], cam) || cam < 1) {
      parse_error(source, line_no, "camera_id must be a positive integer");
    }
    if (!parse_number(fields[1], pt) || pt < 1) {
      parse_error(source, line_no, "point_id must be a positive integer");
    }
    if (!parse_number(fields[2], p.x) || !parse_number(fields[3], p.y) || !std::isfinite(p.x) ||
        !std::isfinite(p.y)) {
      parse_error(source, line_no, "x and y must be finite decimal numbers");
    }
    if (principal_point) {
      p.x -= principal_point->x();
      p.y -= principal_point->y();
    }
    const auto [it, inserted] = rows.try_emplace({cam, pt}, p, line_no);
    if (!inserted) {
      parse_error(source, line_no,
                  "duplicate (camera_id, point_id) = (" + std::to_string(cam) + ", " +
                      std::to_string(pt) + "), first seen on line " +
                      std::to_string(it->second.second));
    }
    max_cam = std::max(max_cam, cam);
    max_pt = std::max(max_pt, pt);
  }
  if (!header) parse_error(source, line_no, "missing header");
  ObservationSet obs(max_cam, max_pt);
  for (int i = 1; i <= max_cam; ++i) {
    for (int j = 1; j <= max_pt; ++j) {
      const auto it = rows.find({i, j});
      if (it == rows.end()) {
        throw Error(ErrorKind::Parse, source + ": incomplete grid, camera " + std::to_string(i) +
                                          " has no observation of point " + std::to_string(j));
      }
      obs(i - 1, j - 1) = it->second.first;
    }
  }
  return obs;
}

ObservationSet read_correspondences_file(const std::string& path,
                                         std::optional<Vec2> principal_point) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Parse, path + ": cannot open");
  return read_correspondences(in, path, principal_point);
}

void write_correspondences(std::ostream& out, const ObservationSet& obs) {
  out << "camera_id,point_id,x,y\n";
  for (int i = 0; i < obs.cameras(); ++i) {
    for (int j = 0; j < obs.points(); ++j) {
      out << i + 1 << ',' << j + 1 << ',' << format_double(obs(i, j).x) << ','
          << format_double(obs(i, j).y) << '\n';
    }
  }
}

std::string calibration_to_json(const CalibrationResult& r, bool include_cloud) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["baseline_mm"] = r.baseline;
  j["f1_px"] = r.f1;
  j["focal_ratio"] = r.rho.rho;
  j["focal_ratio_dispersion"] = r.rho.dispersion;
  json cams = json::array();
  for (std::size_t i = 0; i < r.cameras.size(); ++i) {
    std::optional<BranchLabel> label;
    if (i >= 2 && i < r.branches.size()) label = r.branches[i];
    cams.push_back(camera_json(static_cast<int>(i) + 1, r.cameras[i], label));
  }
  j["cameras"] = cams;
  j["objective_value"] = r.objective_value;
  const auto& d = r.diagnostics;
  j["diagnostics"] = {{"converged", d.converged},
                      {"iterations", d.iterations},
                      {"final_damping", d.final_damping},
                      {"grid_cell", d.grid_cell},
                      {"grid_f1_px", d.grid_f1},
                      {"initialization", d.initialization},
                      {"branch_switches", d.branch_switches}};
  if (include_cloud) j["points_mm"] = points_json(r.cloud);
  return j.dump(2) + "\n";
}

CalibrationResult calibration_from_json(const std::string& text) {
  return guarded("calibration file", [&] {
    const json j = json::parse(text);
    if (j.at("schema_version").get<int>() != kSchemaVersion) {
      throw Error(ErrorKind::Parse, "calibration file: unsupported schema_version");
    }
    CalibrationResult r;
    r.baseline = j.at("baseline_mm").get<double>();
    r.f1 = j.at("f1_px").get<double>();
    r.rho.rho = j.at("focal_ratio").get<double>();
    r.rho.dispersion = j.at("focal_ratio_dispersion").get<double>();
    const json& cams = j.at("cameras");
    for (std::size_t i = 0; i < cams.size(); ++i) {
      const std::string what = "calibration camera " + std::to_string(i + 1);
      if (cams[i].at("id").get<int>() != static_cast<int>(i) + 1) {
        throw Error(ErrorKind::Parse, what + ": ids must be 1..M in order");
      }
      r.cameras.push_back(camera_from(cams[i], what));
      const json& label = cams[i].at("branch_label");
      r.branches.push_back(label.is_null() ? BranchLabel{}
                                           : BranchLabel::parse(label.get<std::string>()));
    }
    if (r.cameras.size() < 2) throw Error(ErrorKind::Parse, "calibration file: need >= 2 cameras");
    r.objective_value = j.at("objective_value").get<double>();
    const json& d = j.at("diagnostics");
    r.diagnostics.converged = d.at("converged").get<bool>();
    r.diagnostics.iterations = d.at("iterations").get<int>();
    r.diagnostics.final_damping = d.at("final_damping").get<double>();
    r.diagnostics.grid_cell = d.at("grid_cell").get<int>();
    r.diagnostics.grid_f1 = d.at("grid_f1_px").get<double>();
    r.diagnostics.initialization = d.at("initialization").get<std::string>();
    r.diagnostics.branch_switches = d.at("branch_switches").get<int>();
    if (j.contains("points_mm")) r.cloud = points_from(j.at("points_mm"));
    return r;
  });
}

std::string scene_spec_to_json(const SceneSpec& s) {
  json j;
  j["cameras"] = s.cameras;
  j["points"] = s.points;
  j["baseline_mm"] = s.baseline;
  j["box_mm"] = vec_json(s.box);
  j["box_center_mm"] = vec_json(s.box_center);
  j["max_rotation_deg"] = s.max_rotation_deg;
  j["distance_mm"] = range_json(s.distance);
  j["lateral_jitter_mm"] = s.lateral_jitter;
  j["stereo_focal_px"] = range_json(s.stereo_focal);
  j["monocular_focal_px"] = range_json(s.monocular_focal);
  j["image_size_px"] = json::array({s.image_width, s.image_height});
  j["noise_px"] = s.noise_sigma;
  j["seed"] = s.seed;
  j["y_margin_mm"] = s.y_margin;
  j["x_margin_mm"] = s.x_margin;
  j["degenerate_points"] = s.degenerate_points;
  j["tz_fraction"] = s.tz_fraction;
  j["max_attempts"] = s.max_attempts;
  return j.dump(2) + "\n";
}

SceneSpec scene_spec_from_json(const std::string& text, SceneSpec s) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorKind::Parse, std::string("scene spec: ") + e.what());
  }
  if (!j.is_object()) throw Error(ErrorKind::Parse, "scene spec must be a JSON object");
  for (const auto& [key, v] : j.items()) {
    try {
      if (key == "cameras") s.cameras = v.get<int>();
      else if (key == "points") s.points = v.get<int>();
      else if (key == "baseline_mm") s.baseline = v.get<double>();
      else if (key == "box_mm") s.box = vec_from(v, key);
      else if (key == "box_center_mm") s.box_center = vec_from(v, key);
      else if (key == "max_rotation_deg") s.max_rotation_deg = v.get<double>();
      else if (key == "distance_mm") s.distance = range_from(v, key);
      else if (key == "lateral_jitter_mm") s.lateral_jitter = v.get<double>();
      else if (key == "stereo_focal_px") s.stereo_focal = range_from(v, key);
      else if (key == "monocular_focal_px") s.monocular_focal = range_from(v, key);
      else if (key == "image_size_px") {
        const Range r = range_from(v, key);
        s.image_width = r.lo;
        s.image_height = r.hi;
      } else if (key == "noise_px") s.noise_sigma = v.get<double>();
      else if (key == "seed") s.seed = v.get<std::uint64_t>();
      else if (key == "y_margin_mm") s.y_margin = v.get<double>();
      else if (key == "x_margin_mm") s.x_margin = v.get<double>();
      else if (key == "degenerate_points") s.degenerate_points = v.get<int>();
      else if (key == "tz_fraction") s.tz_fraction = v.get<double>();
      else if (key == "max_attempts") s.max_attempts = v.get<int>();
      else throw Error(ErrorKind::InvalidArgument, "invalid scene spec: unknown field " + key);
    } catch (const json::exception&) {
      throw Error(ErrorKind::InvalidArgument, "invalid scene spec: bad value for field " + key);
    }
  }
  return s;
}

std::string ground_truth_to_json(const GroundTruth& gt) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["spec"] = json::parse(scene_spec_to_json(gt.spec));
  json cams = json::array();
  for (std::size_t i = 0; i < gt.cameras.size(); ++i) {
    json c = camera_json(static_cast<int>(i) + 1, gt.cameras[i], std::nullopt);
    c.erase("branch_label");
    cams.push_back(c);
  }
  j["cameras"] = cams;
  j["points_mm"] = points_json(gt.points);
  return j.dump(2) + "\n";
}

GroundTruth ground_truth_from_json(const std::string& text) {
  return guarded("ground truth file", [&] {
    const json j = json::parse(text);
    if (j.at("schema_version").get<int>() != kSchemaVersion) {
      throw Error(ErrorKind::Parse, "ground truth file: unsupported schema_version");
    }
    GroundTruth gt;
    gt.spec = scene_spec_from_json(j.at("spec").dump());
    const json& cams = j.at("cameras");
    for (std::size_t i = 0; i < cams.size(); ++i) {
      gt.cameras.push_back(camera_from(cams[i], "truth camera " + std::to_string(i + 1)));
    }
    gt.points = points_from(j.at("points_mm"));
    gt.clean = observe(gt.cameras, gt.points);
    gt.noisy = gt.clean;
    return gt;
  });
}

void write_ply(std::ostream& out, std::span<const WorldPoint> cloud, double baseline, double f1) {
  out << "ply\n"
      << "format ascii 1.0\n"
      << "comment baseline_mm " << format_double(baseline) << " f1_px " << format_double(f1)
      << "\n"
      << "element vertex " << cloud.size() << "\n"
      << "property float x\n"
      << "property float y\n"
      << "property float z\n"
      << "end_header\n";
  for (const auto& p : cloud) {
    out << format_double(static_cast<float>(p.X)) << ' ' << format_double(static_cast<float>(p.Y))
        << ' ' << format_double(static_cast<float>(p.Z)) << '\n';
  }
}

void write_reprojection_csv(std::ostream& out, const ReprojectionReport& report) {
  out << "camera_id,point_id,error_px\n";
  for (int i = 0; i < report.cameras; ++i) {
    for (int j = 0; j < report.points; ++j) {
      out << i + 1 << ',' << j + 1 << ',' << format_double(report.error(i, j)) << '\n';
    }
  }
}

std::string drift_to_json(const DriftReport& d) {
  json j;
  j["input_baseline_mm"] = d.input_baseline;
  j["recovered_baseline_mm"] = d.recovered_baseline;
  j["baseline_drift_mm"] = d.baseline_drift;
  j["bounding_box_before_mm"] = vec_json(d.extent_before);
  j["bounding_box_after_mm"] = vec_json(d.extent_after);
  j["rms_before_px"] = d.rms_before;
  j["rms_after_px"] = d.rms_after;
  j["iterations"] = d.iterations;
  j["converged"] = d.converged;
  return j.dump(2) + "\n";
}

std::string summary_to_json(const EvaluationSummary& s) {
  const ReprojectionReport& rep = s.reprojection;
  json j;
  json cams = json::array();
  for (int i = 0; i < rep.cameras; ++i) {
    const auto& c = rep.per_camera[i];
    cams.push_back({{"camera_id", i + 1},
                    {"role", i < 2 ? "stereo" : "monocular"},
                    {"rms_px", c.rms},
                    {"mean_px", c.mean},
                    {"max_px", c.max},
                    {"count", c.count},
                    {"behind_camera", c.behind}});
  }
  j["reprojection"] = {{"cameras", cams},
                       {"overall_rms_px", rep.overall_rms},
                       {"stereo_rms_px", rep.stereo_rms()},
                       {"worst_monocular_rms_px", rep.worst_monocular_rms()},
                       {"behind_camera", rep.behind}};
  json scale;
  scale["bounding_box_mm"] = vec_json(s.scale.extent);
  scale["recovered_baseline_mm"] =
      s.scale.recovered_baseline ? json(*s.scale.recovered_baseline) : json(nullptr);
  if (s.scale.ratios) {
    scale["ratios"] = vec_json(*s.scale.ratios);
    scale["scale_error"] = *s.scale.scale_error;
    scale["scale_flag"] = std::abs(*s.scale.scale_error) > s.scale_tolerance;
  }
  j["scale"] = scale;
  if (s.parameters) {
    const auto& p = *s.parameters;
    j["parameter_errors"] = {{"focal_relative", p.focal_relative},
                             {"rotation_deg", p.rotation_deg},
                             {"translation_mm", p.translation_mm},
                             {"cloud_rms_mm", p.cloud_rms_mm},
                             {"cloud_relative_rms", p.cloud_relative_rms}};
  }
  return j.dump(2) + "\n";
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Parse, path + ": cannot open");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::InvalidArgument, path + ": cannot write");
  out << text;
  if (!out) throw Error(ErrorKind::InvalidArgument, path + ": write failed");
}

}  // namespace eucal::io
