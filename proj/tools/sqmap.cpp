// sqmap: run synthetic mapping scenarios, fit point clouds, evaluate maps.
//
// Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sqmap/sqmap.hpp"

namespace fs = std::filesystem;
using namespace sqmap;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumerical = 3;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Sets `value` at a dotted path such as "noise.point_sigma", creating
/// intermediate objects. Dashes in keys become underscores.
void set_json_path(Json& root, const std::string& dotted, const std::string& value) {
  Json* node = &root;
  std::stringstream ss(dotted);
  std::string key;
  std::vector<std::string> keys;
  while (std::getline(ss, key, '.')) {
    std::replace(key.begin(), key.end(), '-', '_');
    if (key.empty()) throw UsageError("malformed override --" + dotted);
    keys.push_back(key);
  }
  for (std::size_t i = 0; i + 1 < keys.size(); ++i) {
    Json& next = (*node)[keys[i]];
    if (next.is_null()) next = Json::object();
    if (!next.is_object()) throw UsageError("override --" + dotted + ": " + keys[i] + " is not an object");
    node = &next;
  }
  Json parsed;
  try {
    parsed = Json::parse(value);
  } catch (const Json::parse_error&) {
    parsed = value;
  }
  (*node)[keys.back()] = parsed;
}

/// Applies leftover `--a.b value` / `--a.b=value` arguments as overrides.
void apply_overrides(Json& root, const std::vector<std::string>& extras) {
  for (std::size_t i = 0; i < extras.size(); ++i) {
    const std::string& arg = extras[i];
    if (arg.rfind("--", 0) != 0 || arg.find('.') == std::string::npos)
      throw UsageError("unexpected argument " + arg);
    std::string path = arg.substr(2);
    std::string value;
    if (const auto eq = path.find('='); eq != std::string::npos) {
      value = path.substr(eq + 1);
      path = path.substr(0, eq);
    } else {
      if (i + 1 >= extras.size()) throw UsageError("override " + arg + " needs a value");
      value = extras[++i];
    }
    set_json_path(root, path, value);
  }
}

std::string fmt(double v, int prec = 6) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", prec, v);
  return buf;
}

void print_eval_table(std::ostream& out, const EvalReport& r) {
  out << "object_id  truth_id  iou3d\n";
  for (const auto& l : r.landmarks) {
    char line[96];
    std::snprintf(line, sizeof line, "%9lld  %8s  %s\n", static_cast<long long>(l.landmark_id),
                  l.truth_index ? std::to_string(*l.truth_index).c_str() : "-", fmt(l.iou).c_str());
    out << line;
  }
  for (std::size_t t : r.unmatched_truth) out << "truth " << t << " unmatched\n";
  out << "landmarks " << r.n_landmarks << ", truth objects " << r.n_truth << ", mean iou3d "
      << fmt(r.mean_iou) << '\n';
}

struct RunArgs {
  std::string scenario;
  std::string out_dir = "sqmap_out";
  std::optional<std::uint64_t> seed;
  bool inline_back_stage = false;
  int verbosity = 0;
};

int cmd_run(const RunArgs& a, const std::vector<std::string>& extras) {
  if (!fs::exists(a.scenario)) throw DataError("scenario file not found: " + a.scenario);
  Json doc = read_json_file(a.scenario);
  if (a.seed) {
    set_json_path(doc, "scene.seed", std::to_string(*a.seed));
    set_json_path(doc, "pipeline.eif.seed", std::to_string(*a.seed));
    set_json_path(doc, "eval.seed", std::to_string(*a.seed));
  }
  if (a.inline_back_stage) set_json_path(doc, "pipeline.async_back_stage", "false");
  apply_overrides(doc, extras);
  const Scenario s = scenario_from_json(doc);

  std::error_code ec;
  fs::create_directories(a.out_dir, ec);
  if (ec) throw DataError("cannot create output directory " + a.out_dir + ": " + ec.message());

  const Simulator sim(s.scene, s.noise);
  const auto frames = generate_trajectory(s.trajectory, s.scene);
  Mapper mapper(s.pipeline);
  std::ostringstream log;
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<double> front_ms;
  for (const CameraFrame& frame : frames) {
    const SimulatedFrame sf = sim.observe(frame);
    const FrameReport rep = mapper.process_frame(frame, sf.observations);
    front_ms.push_back(rep.front_stage_ms);
    log << "frame " << rep.frame_id << " observations " << sf.observations.size() << " created "
        << rep.created.size() << " merged " << rep.merged.size() << " reproj_removed "
        << rep.reprojection_removed << " eif_removed " << rep.eif_removed << " front_ms "
        << fmt(rep.front_stage_ms, 3) << '\n';
    if (a.verbosity > 0 && (rep.frame_id % 20 == 0 || a.verbosity > 1))
      std::cerr << "frame " << rep.frame_id << ": " << mapper.map().landmarks.size() << " landmarks\n";
  }
  mapper.finalize();
  const ObjectMap& map = mapper.map();
  const EvalReport report = evaluate(map, s.scene, s.eval.n_samples, s.eval.seed);
  const double total_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();

  const fs::path dir(a.out_dir);
  write_text_file((dir / "map.json").string(), map_to_json(map).dump(2) + "\n");
  write_text_file((dir / "evaluation.csv").string(), evaluation_csv(report));
  write_text_file((dir / "evaluation.json").string(), evaluation_to_json(report).dump(2) + "\n");
  write_text_file((dir / "trajectory.jsonl").string(), trajectory_jsonl(frames));
  for (const auto& lm : map.landmarks) {
    const std::string stem = "landmark_" + std::to_string(lm.id);
    std::ofstream pts(dir / (stem + "_points.ply"));
    write_ply_points(pts, lm.cloud_points());
    if (lm.model) {
      std::ofstream mesh(dir / (stem + ".ply"));
      write_ply_mesh(mesh, {*lm.model});
    }
  }
  const double max_ms = front_ms.empty() ? 0.0 : *std::max_element(front_ms.begin(), front_ms.end());
  const double mean_ms =
      front_ms.empty() ? 0.0 : std::accumulate(front_ms.begin(), front_ms.end(), 0.0) / front_ms.size();
  log << "front_stage_ms mean " << fmt(mean_ms, 3) << " max " << fmt(max_ms, 3) << '\n'
      << "total_ms " << fmt(total_ms, 1) << '\n';
  write_text_file((dir / "run.log").string(), log.str());

  print_eval_table(std::cout, report);
  std::cout << "front stage ms: mean " << fmt(mean_ms, 3) << ", max " << fmt(max_ms, 3)
            << "; total " << fmt(total_ms / 1000.0, 2) << " s; outputs in " << a.out_dir << '\n';
  return kExitOk;
}

struct FitArgs {
  std::string input;
  std::optional<double> yaw;
  std::vector<double> t;
  std::string mesh;
};

int cmd_fit(const FitArgs& a) {
  const PointList pts = read_points(a.input);
  if (pts.size() < kMinFitPoints)
    throw DataError("too few points in " + a.input + ": " + std::to_string(pts.size()) + " (need " +
                    std::to_string(kMinFitPoints) + ")");
  const Vec3 t = a.t.empty() ? centroid_translation(pts) : Vec3(a.t[0], a.t[1], a.t[2]);
  double yaw = 0.0;
  if (a.yaw) {
    yaw = deg2rad(*a.yaw);
  } else if (const YawEstimate e = estimate_yaw_pca(pts); !e.failed) {
    yaw = e.yaw;
  }
  const Superquadric sq = fit_landmark(pts, ObjectPose(yaw, t));
  std::cout << superquadric_to_json(sq).dump(2) << '\n';
  if (!a.mesh.empty()) {
    std::ofstream out(a.mesh);
    if (!out) throw DataError("cannot write " + a.mesh);
    write_ply_mesh(out, {sq});
  }
  return kExitOk;
}

struct EvalArgs {
  std::string map;
  std::string truth;
  std::int64_t samples = 200000;
  std::uint64_t seed = 0;
  std::string csv;
};

int cmd_eval(const EvalArgs& a) {
  if (a.samples < kMinIouSamples) throw UsageError("--samples must be at least 10000");
  const auto models = models_from_map_json(read_json_file(a.map));
  const auto truth = truth_from_json(read_json_file(a.truth));
  const EvalReport r = evaluate(models, truth, a.samples, a.seed);
  print_eval_table(std::cout, r);
  if (!a.csv.empty()) write_text_file(a.csv, evaluation_csv(r));
  return kExitOk;
}

struct GenArgs {
  std::string scenario;
  std::string out_dir = "sqmap_scene";
  std::optional<std::uint64_t> seed;
};

int cmd_gen_scene(const GenArgs& a, const std::vector<std::string>& extras) {
  if (!fs::exists(a.scenario)) throw DataError("scenario file not found: " + a.scenario);
  Json doc = read_json_file(a.scenario);
  if (a.seed) set_json_path(doc, "scene.seed", std::to_string(*a.seed));
  apply_overrides(doc, extras);
  const Scenario s = scenario_from_json(doc);
  std::error_code ec;
  fs::create_directories(a.out_dir, ec);
  if (ec) throw DataError("cannot create output directory " + a.out_dir + ": " + ec.message());
  const fs::path dir(a.out_dir);
  Json scene = scene_to_json(s.scene);
  scene["format_version"] = kFormatVersion;
  write_text_file((dir / "truth.json").string(), scene.dump(2) + "\n");
  std::vector<Superquadric> bodies;
  for (const auto& o : s.scene.objects) bodies.push_back(o.sq);
  std::ofstream mesh(dir / "truth.ply");
  write_ply_mesh(mesh, bodies);
  write_text_file((dir / "trajectory.jsonl").string(),
                  trajectory_jsonl(generate_trajectory(s.trajectory, s.scene)));
  std::cout << s.scene.objects.size() << " objects written to " << a.out_dir << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Superquadric object mapping toolkit"};
  app.require_subcommand(1);

  RunArgs run;
  auto* run_cmd = app.add_subcommand("run", "Run a scenario and write map, meshes and evaluation");
  run_cmd->add_option("scenario", run.scenario, "Scenario JSON file")->required();
  run_cmd->add_option("-o,--out", run.out_dir, "Output directory");
  run_cmd->add_option("--seed", run.seed, "Seed for scene noise, outlier filter and evaluation");
  run_cmd->add_flag("--inline", run.inline_back_stage, "Run the back stage on the calling thread");
  run_cmd->add_flag("-v,--verbose", run.verbosity, "Progress on stderr (repeat for more)");
  run_cmd->allow_extras();
  run_cmd->footer("Any scenario field can be overridden with a dotted flag, e.g. --noise.point-sigma 0");

  FitArgs fit;
  auto* fit_cmd = app.add_subcommand("fit", "Fit a superquadric to a point file (XYZ text or PLY)");
  fit_cmd->add_option("points", fit.input, "Input point file")->required()->check(CLI::ExistingFile);
  fit_cmd->add_option("--yaw", fit.yaw, "Object yaw in degrees (default: principal axis)");
  fit_cmd->add_option("--t", fit.t, "Object center x y z (default: centroid)")->expected(3);
  fit_cmd->add_option("--mesh", fit.mesh, "Write the fitted surface as PLY");

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "Compare a map JSON with ground truth by 3D IoU");
  eval_cmd->add_option("map", ev.map, "Map JSON")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("truth", ev.truth, "Truth JSON (scenario, scene or map)")
      ->required()
      ->check(CLI::ExistingFile);
  eval_cmd->add_option("--samples", ev.samples, "Monte-Carlo samples per pair");
  eval_cmd->add_option("--seed", ev.seed, "Sampling seed");
  eval_cmd->add_option("--csv", ev.csv, "Also write the evaluation CSV");

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-scene", "Write a scenario's ground truth as JSON and PLY");
  gen_cmd->add_option("scenario", gen.scenario, "Scenario JSON file")->required();
  gen_cmd->add_option("-o,--out", gen.out_dir, "Output directory");
  gen_cmd->add_option("--seed", gen.seed, "Scene seed");
  gen_cmd->allow_extras();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*run_cmd) return cmd_run(run, run_cmd->remaining());
    if (*fit_cmd) return cmd_fit(fit);
    if (*eval_cmd) return cmd_eval(ev);
    if (*gen_cmd) return cmd_gen_scene(gen, gen_cmd->remaining());
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kExitUsage;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}
