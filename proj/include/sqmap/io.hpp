#pragma once

// File formats: scenario, map and evaluation JSON, evaluation CSV, ASCII PLY,
// camera trajectories as JSON lines, and XYZ/CSV/PLY point files.
// Every JSON document carries a top-level format_version.

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sqmap/evaluation.hpp"
#include "sqmap/mapper.hpp"
#include "sqmap/scene.hpp"
#include "sqmap/simulator.hpp"

namespace sqmap {

using Json = nlohmann::json;

inline constexpr int kFormatVersion = 1;

struct Scenario {
  SceneSpec scene;
  TrajectorySpec trajectory;
  NoiseSpec noise;
  PipelineConfig pipeline;
  EvalSpec eval;
};

namespace detail {

// Reads JSON objects field by field, rejecting unknown keys and reporting the
// full dotted path of whatever is missing or malformed.
class JsonReader {
 public:
  JsonReader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(path_, "expected an object");
  }

  template <class T>
  void opt(const char* key, T& out) {
    seen_.insert(key);
    if (!j_.contains(key)) return;
    read(j_.at(key), field(key), out);
  }

  template <class T>
  void req(const char* key, T& out) {
    if (!j_.contains(key)) fail(field(key), "missing required field");
    opt(key, out);
  }

  bool has(const char* key) const { return j_.contains(key); }
  const Json& at(const char* key) {
    seen_.insert(key);
    return j_.at(key);
  }
  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it)
      if (!seen_.count(it.key())) fail(field(it.key()), "unknown field");
  }

  [[noreturn]] static void fail(const std::string& path, const std::string& msg) {
    throw DataError(path + ": " + msg);
  }

  static void read(const Json& v, const std::string& path, double& out) {
    if (!v.is_number()) fail(path, "expected a number");
    out = v.get<double>();
  }
  static void read(const Json& v, const std::string& path, int& out) {
    if (!v.is_number_integer()) fail(path, "expected an integer");
    out = v.get<int>();
  }
  static void read(const Json& v, const std::string& path, std::int64_t& out) {
    if (!v.is_number_integer()) fail(path, "expected an integer");
    out = v.get<std::int64_t>();
  }
  static void read(const Json& v, const std::string& path, std::uint64_t& out) {
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
      fail(path, "expected a non-negative integer");
    out = v.get<std::uint64_t>();
  }
  static void read(const Json& v, const std::string& path, bool& out) {
    if (!v.is_boolean()) fail(path, "expected true or false");
    out = v.get<bool>();
  }
  static void read(const Json& v, const std::string& path, std::string& out) {
    if (!v.is_string()) fail(path, "expected a string");
    out = v.get<std::string>();
  }
  static void read(const Json& v, const std::string& path, Vec3& out) {
    if (!v.is_array() || v.size() != 3) fail(path, "expected an array of 3 numbers");
    for (int i = 0; i < 3; ++i) read(v[i], path + "[" + std::to_string(i) + "]", out(i));
  }

 private:
  const Json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

// Wraps a constructor that validates its arguments so its error names `path`.
template <class F>
auto at_path(const std::string& path, F&& f) {
  try {
    return f();
  } catch (const DataError& e) {
    throw DataError(path + ": " + e.what());
  }
}

inline const char* trajectory_kind_name(TrajectoryKind k) {
  switch (k) {
    case TrajectoryKind::kOrbit: return "orbit";
    case TrajectoryKind::kLinear: return "linear";
    case TrajectoryKind::kWaypoints: return "waypoints";
  }
  return "orbit";
}

inline const char* yaw_preference_name(YawPreference p) {
  switch (p) {
    case YawPreference::kAuto: return "auto";
    case YawPreference::kLines: return "lines";
    case YawPreference::kPca: return "pca";
  }
  return "auto";
}

inline Json vec_json(const Vec3& v) { return Json::array({v.x(), v.y(), v.z()}); }

}  // namespace detail

// --- superquadrics --------------------------------------------------------

inline Json superquadric_to_json(const Superquadric& sq) {
  return {{"ax", sq.size.ax()},   {"ay", sq.size.ay()},       {"az", sq.size.az()},
          {"eps1", sq.shape.eps1()}, {"eps2", sq.shape.eps2()}, {"yaw", sq.pose.yaw()},
          {"t", detail::vec_json(sq.pose.translation())}};
}

/// Reads the superquadric fields of `j`; other keys are left to the caller.
inline Superquadric superquadric_from_fields(detail::JsonReader& r, const std::string& path) {
  double ax = 0, ay = 0, az = 0, e1 = 1, e2 = 1, yaw = 0;
  Vec3 t = Vec3::Zero();
  r.req("ax", ax);
  r.req("ay", ay);
  r.req("az", az);
  r.opt("eps1", e1);
  r.opt("eps2", e2);
  r.opt("yaw", yaw);
  r.opt("t", t);
  return detail::at_path(path, [&] {
    return Superquadric{SizeParams(ax, ay, az), ShapeParams(e1, e2), ObjectPose(yaw, t)};
  });
}

inline Superquadric superquadric_from_json(const Json& j, const std::string& path = "superquadric") {
  detail::JsonReader r(j, path);
  Superquadric sq = superquadric_from_fields(r, path);
  r.finish();
  return sq;
}

// --- scenario -------------------------------------------------------------

inline Json scene_to_json(const SceneSpec& s) {
  Json objs = Json::array();
  for (const auto& o : s.objects) {
    Json j = superquadric_to_json(o.sq);
    j["class"] = o.class_label;
    objs.push_back(j);
  }
  return {{"seed", s.seed},
          {"bounds", {{"min", detail::vec_json(s.bounds.min)}, {"max", detail::vec_json(s.bounds.max)}}},
          {"map_points_eta", s.map_points_eta},
          {"map_points_omega", s.map_points_omega},
          {"objects", objs}};
}

inline SceneSpec scene_from_json(const Json& j, const std::string& path = "scene") {
  detail::JsonReader r(j, path);
  SceneSpec s;
  r.opt("seed", s.seed);
  r.opt("map_points_eta", s.map_points_eta);
  r.opt("map_points_omega", s.map_points_omega);
  if (r.has("bounds")) {
    detail::JsonReader b(r.at("bounds"), r.field("bounds"));
    b.req("min", s.bounds.min);
    b.req("max", s.bounds.max);
    b.finish();
  }
  if (r.has("objects")) {
    const Json& arr = r.at("objects");
    if (!arr.is_array()) detail::JsonReader::fail(r.field("objects"), "expected an array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string p = r.field("objects") + "[" + std::to_string(i) + "]";
      detail::JsonReader o(arr[i], p);
      SceneObject obj;
      o.req("class", obj.class_label);
      obj.sq = superquadric_from_fields(o, p);
      o.finish();
      s.objects.push_back(std::move(obj));
    }
  }
  r.finish();
  s.validate();
  return s;
}

inline Json intrinsics_to_json(const Intrinsics& k) {
  return {{"fx", k.fx}, {"fy", k.fy}, {"cx", k.cx}, {"cy", k.cy}, {"width", k.width}, {"height", k.height}};
}

inline Intrinsics intrinsics_from_json(const Json& j, const std::string& path) {
  detail::JsonReader r(j, path);
  Intrinsics k;
  r.opt("fx", k.fx);
  r.opt("fy", k.fy);
  r.opt("cx", k.cx);
  r.opt("cy", k.cy);
  r.opt("width", k.width);
  r.opt("height", k.height);
  r.finish();
  detail::at_path(path, [&] {
    k.validate();
    return 0;
  });
  return k;
}

inline Json trajectory_to_json(const TrajectorySpec& t) {
  Json wp = Json::array();
  for (const auto& w : t.waypoints) wp.push_back(detail::vec_json(w));
  return {{"kind", detail::trajectory_kind_name(t.kind)},
          {"n_frames", t.n_frames},
          {"intrinsics", intrinsics_to_json(t.intrinsics)},
          {"radius", t.radius},
          {"height", t.height},
          {"start", detail::vec_json(t.start)},
          {"end", detail::vec_json(t.end)},
          {"waypoints", wp}};
}

inline TrajectorySpec trajectory_from_json(const Json& j, const std::string& path = "trajectory") {
  detail::JsonReader r(j, path);
  TrajectorySpec t;
  std::string kind = "orbit";
  r.opt("kind", kind);
  if (kind == "orbit")
    t.kind = TrajectoryKind::kOrbit;
  else if (kind == "linear")
    t.kind = TrajectoryKind::kLinear;
  else if (kind == "waypoints")
    t.kind = TrajectoryKind::kWaypoints;
  else
    detail::JsonReader::fail(r.field("kind"), "expected orbit, linear or waypoints");
  r.opt("n_frames", t.n_frames);
  if (r.has("intrinsics")) t.intrinsics = intrinsics_from_json(r.at("intrinsics"), r.field("intrinsics"));
  r.opt("radius", t.radius);
  r.opt("height", t.height);
  r.opt("start", t.start);
  r.opt("end", t.end);
  if (r.has("waypoints")) {
    const Json& arr = r.at("waypoints");
    if (!arr.is_array()) detail::JsonReader::fail(r.field("waypoints"), "expected an array");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      Vec3 w;
      detail::JsonReader::read(arr[i], r.field("waypoints") + "[" + std::to_string(i) + "]", w);
      t.waypoints.push_back(w);
    }
  }
  r.finish();
  detail::at_path(path, [&] {
    t.validate();
    return 0;
  });
  return t;
}

inline Json noise_to_json(const NoiseSpec& n) {
  return {{"point_sigma", n.point_sigma},
          {"bbox_sigma", n.bbox_sigma},
          {"segment_angle_sigma", n.segment_angle_sigma},
          {"outlier_fraction", n.outlier_fraction},
          {"outlier_radius", n.outlier_radius},
          {"detection_dropout", n.detection_dropout}};
}

inline NoiseSpec noise_from_json(const Json& j, const std::string& path = "noise") {
  detail::JsonReader r(j, path);
  NoiseSpec n;
  r.opt("point_sigma", n.point_sigma);
  r.opt("bbox_sigma", n.bbox_sigma);
  r.opt("segment_angle_sigma", n.segment_angle_sigma);
  r.opt("outlier_fraction", n.outlier_fraction);
  r.opt("outlier_radius", n.outlier_radius);
  r.opt("detection_dropout", n.detection_dropout);
  r.finish();
  n.validate();
  return n;
}

inline Json pipeline_to_json(const PipelineConfig& c) {
  Json yaw = Json::object();
  for (const auto& [cls, p] : c.yaw_method) yaw[cls] = detail::yaw_preference_name(p);
  return {{"eif",
           {{"n_trees", c.eif.n_trees},
            {"subsample_size", c.eif.subsample_size},
            {"depth_limit", c.eif.depth_limit},
            {"score_threshold", c.eif.score_threshold},
            {"seed", c.eif.seed}}},
          {"fit",
           {{"grid_steps", c.fit.grid_steps},
            {"max_iterations", c.fit.max_iterations},
            {"convergence_tol", c.fit.convergence_tol},
            {"lm_lambda_init", c.fit.lm_lambda_init},
            {"lm_lambda_factor", c.fit.lm_lambda_factor},
            {"jacobian_step", c.fit.jacobian_step}}},
          {"assoc",
           {{"iou_threshold", c.assoc.iou_threshold},
            {"shared_point_threshold", c.assoc.shared_point_threshold},
            {"significance_alpha", c.assoc.significance_alpha},
            {"min_history", c.assoc.min_history},
            {"family_wise", c.assoc.family_wise},
            {"interframe_window", c.assoc.interframe_window}}},
          {"refit_interval", c.refit_interval},
          {"merge_interval", c.merge_interval},
          {"min_points_for_fit", c.min_points_for_fit},
          {"min_points_new_landmark", c.min_points_new_landmark},
          {"reprojection_margin_px", c.reprojection_margin_px},
          {"async_back_stage", c.async_back_stage},
          {"yaw_method", yaw}};
}

inline PipelineConfig pipeline_from_json(const Json& j, const std::string& path = "pipeline") {
  detail::JsonReader r(j, path);
  PipelineConfig c;
  if (r.has("eif")) {
    detail::JsonReader e(r.at("eif"), r.field("eif"));
    e.opt("n_trees", c.eif.n_trees);
    e.opt("subsample_size", c.eif.subsample_size);
    e.opt("depth_limit", c.eif.depth_limit);
    e.opt("score_threshold", c.eif.score_threshold);
    e.opt("seed", c.eif.seed);
    e.finish();
  }
  if (r.has("fit")) {
    detail::JsonReader f(r.at("fit"), r.field("fit"));
    f.opt("grid_steps", c.fit.grid_steps);
    f.opt("max_iterations", c.fit.max_iterations);
    f.opt("convergence_tol", c.fit.convergence_tol);
    f.opt("lm_lambda_init", c.fit.lm_lambda_init);
    f.opt("lm_lambda_factor", c.fit.lm_lambda_factor);
    f.opt("jacobian_step", c.fit.jacobian_step);
    f.finish();
  }
  if (r.has("assoc")) {
    detail::JsonReader a(r.at("assoc"), r.field("assoc"));
    a.opt("iou_threshold", c.assoc.iou_threshold);
    a.opt("shared_point_threshold", c.assoc.shared_point_threshold);
    a.opt("significance_alpha", c.assoc.significance_alpha);
    a.opt("min_history", c.assoc.min_history);
    a.opt("family_wise", c.assoc.family_wise);
    a.opt("interframe_window", c.assoc.interframe_window);
    a.finish();
  }
  r.opt("refit_interval", c.refit_interval);
  r.opt("merge_interval", c.merge_interval);
  r.opt("min_points_for_fit", c.min_points_for_fit);
  r.opt("min_points_new_landmark", c.min_points_new_landmark);
  r.opt("reprojection_margin_px", c.reprojection_margin_px);
  r.opt("async_back_stage", c.async_back_stage);
  if (r.has("yaw_method")) {
    const Json& y = r.at("yaw_method");
    if (!y.is_object()) detail::JsonReader::fail(r.field("yaw_method"), "expected an object");
    for (auto it = y.begin(); it != y.end(); ++it) {
      const std::string p = r.field("yaw_method") + "." + it.key();
      std::string v;
      detail::JsonReader::read(it.value(), p, v);
      if (v == "auto")
        c.yaw_method[it.key()] = YawPreference::kAuto;
      else if (v == "lines")
        c.yaw_method[it.key()] = YawPreference::kLines;
      else if (v == "pca")
        c.yaw_method[it.key()] = YawPreference::kPca;
      else
        detail::JsonReader::fail(p, "expected auto, lines or pca");
    }
  }
  r.finish();
  detail::at_path(path, [&] {
    c.validate();
    return 0;
  });
  return c;
}

inline Json scenario_to_json(const Scenario& s) {
  return {{"format_version", kFormatVersion},
          {"scene", scene_to_json(s.scene)},
          {"trajectory", trajectory_to_json(s.trajectory)},
          {"noise", noise_to_json(s.noise)},
          {"pipeline", pipeline_to_json(s.pipeline)},
          {"eval", {{"n_samples", s.eval.n_samples}, {"seed", s.eval.seed}}}};
}

inline void check_format_version(detail::JsonReader& r) {
  int v = kFormatVersion;
  r.req("format_version", v);
  if (v != kFormatVersion)
    detail::JsonReader::fail("format_version", "unsupported version " + std::to_string(v));
}

inline Scenario scenario_from_json(const Json& j) {
  detail::JsonReader r(j, "");
  check_format_version(r);
  Scenario s;
  if (r.has("scene")) s.scene = scene_from_json(r.at("scene"));
  if (r.has("trajectory")) s.trajectory = trajectory_from_json(r.at("trajectory"));
  if (r.has("noise")) s.noise = noise_from_json(r.at("noise"));
  if (r.has("pipeline")) s.pipeline = pipeline_from_json(r.at("pipeline"));
  if (r.has("eval")) {
    detail::JsonReader e(r.at("eval"), "eval");
    e.opt("n_samples", s.eval.n_samples);
    e.opt("seed", s.eval.seed);
    e.finish();
    detail::at_path("eval", [&] {
      s.eval.validate();
      return 0;
    });
  }
  r.finish();
  return s;
}

inline Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw DataError(path + ": " + e.what());
  }
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  out << text;
  if (!out) throw DataError("write failed: " + path);
}

// --- map and evaluation ---------------------------------------------------

inline Json map_to_json(const ObjectMap& map) {
  Json lms = Json::array();
  for (const auto& lm : map.landmarks) {
    Json j = {{"id", lm.id},
              {"class", lm.class_label},
              {"n_points", lm.cloud.size()},
              {"n_observations", lm.n_observations},
              {"pose", {{"yaw", lm.pose.yaw()}, {"t", detail::vec_json(lm.pose.translation())}}}};
    j["superquadric"] = lm.model ? superquadric_to_json(*lm.model) : Json(nullptr);
    lms.push_back(j);
  }
  return {{"format_version", kFormatVersion},
          {"frame_count", map.frame_count},
          {"landmarks", lms}};
}

/// Fitted models of a map document; landmarks without a fit are skipped.
inline std::vector<EvalModel> models_from_map_json(const Json& j) {
  detail::JsonReader r(j, "");
  check_format_version(r);
  std::int64_t frames = 0;
  r.opt("frame_count", frames);
  std::vector<EvalModel> out;
  const Json& arr = r.at("landmarks");
  if (!arr.is_array()) detail::JsonReader::fail("landmarks", "expected an array");
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const std::string p = "landmarks[" + std::to_string(i) + "]";
    if (!arr[i].is_object()) detail::JsonReader::fail(p, "expected an object");
    EvalModel m;
    detail::JsonReader::read(arr[i].contains("id") ? arr[i].at("id") : Json(), p + ".id", m.id);
    const Json& sq = arr[i].contains("superquadric") ? arr[i].at("superquadric") : Json(nullptr);
    if (sq.is_null()) continue;
    m.sq = superquadric_from_json(sq, p + ".superquadric");
    out.push_back(m);
  }
  return out;
}

/// Ground-truth objects from a scenario document, a bare scene document
/// (an object with "objects"), or a map document (fitted landmarks become
/// truth objects, so a map can be compared with another map).
inline std::vector<SceneObject> truth_from_json(const Json& j) {
  if (j.is_object() && j.contains("landmarks")) {
    std::vector<SceneObject> out;
    for (const auto& m : models_from_map_json(j)) out.push_back({"", m.sq});
    return out;
  }
  if (j.is_object() && j.contains("scene")) return scenario_from_json(j).scene.objects;
  if (j.is_object() && j.contains("objects")) {
    Json copy = j;
    if (copy.contains("format_version")) {
      detail::JsonReader r(copy, "");
      check_format_version(r);
      copy.erase("format_version");
    }
    return scene_from_json(copy, "").objects;
  }
  throw DataError("truth file: expected a scenario, scene or map document");
}

inline std::string format_iou(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

/// Header `object_id,truth_id,iou3d`; one row per fitted landmark. Unmatched
/// landmarks carry truth_id -1 and IoU 0.
inline std::string evaluation_csv(const EvalReport& r) {
  std::ostringstream out;
  out << "object_id,truth_id,iou3d\n";
  for (const auto& l : r.landmarks)
    out << l.landmark_id << ','
        << (l.truth_index ? std::to_string(*l.truth_index) : std::string("-1")) << ','
        << format_iou(l.iou) << '\n';
  return out.str();
}

inline Json evaluation_to_json(const EvalReport& r) {
  Json rows = Json::array();
  for (const auto& l : r.landmarks)
    rows.push_back({{"object_id", l.landmark_id},
                    {"truth_id", l.truth_index ? Json(*l.truth_index) : Json(nullptr)},
                    {"iou3d", l.iou}});
  return {{"format_version", kFormatVersion},
          {"mean_iou", r.mean_iou},
          {"n_landmarks", r.n_landmarks},
          {"n_truth", r.n_truth},
          {"truth_iou", r.truth_iou},
          {"landmarks", rows},
          {"unmatched_landmarks", r.unmatched_landmarks},
          {"unmatched_truth", r.unmatched_truth}};
}

// --- trajectories ---------------------------------------------------------

/// One JSON object per line: frame_id, row-major camera-to-world rotation,
/// camera center.
inline std::string trajectory_jsonl(const std::vector<CameraFrame>& frames) {
  std::ostringstream out;
  for (const auto& f : frames) {
    Json r = Json::array();
    for (int i = 0; i < 3; ++i)
      for (int k = 0; k < 3; ++k) r.push_back(f.rotation()(i, k));
    out << Json{{"frame_id", f.frame_id()}, {"R", r}, {"t", detail::vec_json(f.translation())}}.dump()
        << '\n';
  }
  return out.str();
}

// --- PLY and point files --------------------------------------------------

/// Triangle mesh of the bodies as ASCII PLY, one (n_eta x n_omega) grid each.
inline void write_ply_mesh(std::ostream& out, const std::vector<Superquadric>& bodies, int n_eta = 24,
                           int n_omega = 48) {
  if (n_eta < 3 || n_omega < 3) throw DataError("mesh resolution must be at least 3 x 3");
  struct Tri {
    std::size_t a, b, c;
  };
  PointList verts;
  std::vector<Tri> tris;
  for (const auto& sq : bodies) {
    const std::size_t base = verts.size();
    for (const auto& s : sample_surface(sq, n_eta, n_omega)) verts.push_back(object_to_world(sq.pose, s.position));
    const auto idx = [&](int i, int j) {
      return base + static_cast<std::size_t>(i) * n_omega + static_cast<std::size_t>(j % n_omega);
    };
    for (int i = 0; i + 1 < n_eta; ++i) {
      for (int j = 0; j < n_omega; ++j) {
        if (i + 1 < n_eta - 1) tris.push_back({idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)});
        if (i > 0) tris.push_back({idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)});
      }
    }
  }
  out << "ply\nformat ascii 1.0\nelement vertex " << verts.size()
      << "\nproperty float x\nproperty float y\nproperty float z\nelement face " << tris.size()
      << "\nproperty list uchar int vertex_indices\nend_header\n";
  out << std::setprecision(9);
  for (const auto& v : verts) out << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
  for (const auto& t : tris) out << "3 " << t.a << ' ' << t.b << ' ' << t.c << '\n';
}

inline void write_ply_points(std::ostream& out, const PointList& pts) {
  out << "ply\nformat ascii 1.0\nelement vertex " << pts.size()
      << "\nproperty float x\nproperty float y\nproperty float z\nend_header\n";
  out << std::setprecision(9);
  for (const auto& p : pts) out << p.x() << ' ' << p.y() << ' ' << p.z() << '\n';
}

namespace detail {

inline PointList read_ply_points(std::istream& in, const std::string& path) {
  std::string line;
  std::getline(in, line);
  if (line.rfind("ply", 0) != 0) throw DataError(path + ": not a PLY file");
  std::size_t n_vertex = 0;
  bool in_vertex = false;
  std::vector<std::string> props;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string tok;
    ls >> tok;
    if (tok == "format") {
      std::string fmt;
      ls >> fmt;
      if (fmt != "ascii") throw DataError(path + ": only ASCII PLY is supported");
    } else if (tok == "element") {
      std::string name;
      ls >> name;
      in_vertex = name == "vertex";
      if (in_vertex) ls >> n_vertex;
    } else if (tok == "property" && in_vertex) {
      std::string type, name;
      ls >> type >> name;
      props.push_back(name);
    } else if (tok == "end_header") {
      break;
    }
  }
  const auto col = [&](const char* n) {
    const auto it = std::find(props.begin(), props.end(), n);
    if (it == props.end()) throw DataError(path + ": vertex element lacks property " + n);
    return static_cast<std::size_t>(it - props.begin());
  };
  const std::size_t cx = col("x"), cy = col("y"), cz = col("z");
  PointList pts;
  for (std::size_t i = 0; i < n_vertex; ++i) {
    if (!std::getline(in, line)) throw DataError(path + ": truncated vertex list");
    std::istringstream ls(line);
    std::vector<double> v(props.size());
    for (auto& x : v)
      if (!(ls >> x)) throw DataError(path + ": bad vertex line " + std::to_string(i + 1));
    pts.emplace_back(v[cx], v[cy], v[cz]);
  }
  return pts;
}

inline PointList read_text_points(std::istream& in, const std::string& path) {
  PointList pts;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    for (char& ch : line)
      if (ch == ',' || ch == ';' || ch == '\t') ch = ' ';
    std::istringstream ls(line);
    std::string first;
    if (!(ls >> first) || first[0] == '#') continue;
    std::istringstream all(line);
    double x, y, z;
    if (!(all >> x >> y >> z)) {
      if (pts.empty() && lineno == 1) continue;  // header row
      throw DataError(path + ":" + std::to_string(lineno) + ": expected three numbers");
    }
    pts.emplace_back(x, y, z);
  }
  return pts;
}

}  // namespace detail

/// Points from an ASCII PLY (by extension) or a whitespace/comma separated
/// XYZ text file. Extra columns are ignored; a non-numeric first line is
/// treated as a header.
inline PointList read_points(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  const bool ply = path.size() >= 4 && path.compare(path.size() - 4, 4, ".ply") == 0;
  return ply ? detail::read_ply_points(in, path) : detail::read_text_points(in, path);
}

}  // namespace sqmap
