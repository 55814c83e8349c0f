#pragma once

// Synthetic scenes: camera paths and noisy detections of ground-truth
// superquadrics, plus an end-to-end driver for the mapper.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <vector>

#include "sqmap/camera.hpp"
#include "sqmap/common.hpp"
#include "sqmap/evaluation.hpp"
#include "sqmap/geometry.hpp"
#include "sqmap/landmark.hpp"
#include "sqmap/mapper.hpp"
#include "sqmap/scene.hpp"

namespace sqmap {

inline std::vector<CameraFrame> generate_trajectory(const TrajectorySpec& spec,
                                                    const SceneSpec& scene) {
  spec.validate();
  const Vec3 c = scene.centroid();
  std::vector<Vec3> eyes;
  switch (spec.kind) {
    case TrajectoryKind::kOrbit:
      for (int f = 0; f < spec.n_frames; ++f) {
        const double phi = 2.0 * kPi * f / spec.n_frames;
        eyes.push_back(c + Vec3(spec.radius * std::cos(phi), spec.radius * std::sin(phi), spec.height));
      }
      break;
    case TrajectoryKind::kLinear:
      for (int f = 0; f < spec.n_frames; ++f) {
        const double s = spec.n_frames == 1 ? 0.0 : static_cast<double>(f) / (spec.n_frames - 1);
        eyes.push_back(spec.start + s * (spec.end - spec.start));
      }
      break;
    case TrajectoryKind::kWaypoints:
      eyes.assign(spec.waypoints.begin(), spec.waypoints.end());
      break;
  }
  std::vector<CameraFrame> frames;
  frames.reserve(eyes.size());
  for (std::size_t f = 0; f < eyes.size(); ++f) {
    if ((eyes[f] - c).norm() < 1e-9) throw DataError("trajectory eye coincides with the scene centroid");
    frames.emplace_back(static_cast<std::int64_t>(f), look_at_rotation(eyes[f], c), eyes[f],
                        spec.intrinsics);
  }
  return frames;
}

/// Ground truth attached to one simulated observation.
struct ObservationTruth {
  std::size_t object_index = 0;
  Mask is_outlier;  // parallels Observation::points_world
};

struct SimulatedFrame {
  std::vector<Observation> observations;
  std::vector<ObservationTruth> truth;
};

/// A scene's persistent map points: a surface grid per object, perturbed once,
/// so repeated sightings of a point report the same position and id.
struct MapPoint {
  PointId id = 0;
  Vec3 position = Vec3::Zero();  // world, with noise
  Vec3 normal = Vec3::UnitZ();   // world, outward
};

inline constexpr PointId kOutlierIdBit = PointId{1} << 63;

inline bool near_cuboid(const Superquadric& sq) {
  return sq.shape.eps1() <= 0.3 && sq.shape.eps2() <= 0.3;
}

/// The 12 edges of the body's bounding box, world frame.
inline std::vector<std::pair<Vec3, Vec3>> box_edges(const Superquadric& sq) {
  const Vec3& a = sq.size.vec();
  std::vector<std::pair<Vec3, Vec3>> edges;
  const auto corner = [&](int sx, int sy, int sz) {
    return object_to_world(sq.pose, Vec3(sx * a.x(), sy * a.y(), sz * a.z()));
  };
  for (int s1 : {-1, 1}) {
    for (int s2 : {-1, 1}) {
      edges.emplace_back(corner(-1, s1, s2), corner(1, s1, s2));
      edges.emplace_back(corner(s1, -1, s2), corner(s1, 1, s2));
      edges.emplace_back(corner(s1, s2, -1), corner(s1, s2, 1));
    }
  }
  return edges;
}

class Simulator {
 public:
  Simulator(SceneSpec scene, NoiseSpec noise) : scene_(std::move(scene)), noise_(noise) {
    scene_.validate();
    noise_.validate();
    for (std::size_t k = 0; k < scene_.objects.size(); ++k) map_points_.push_back(build_points(k));
  }

  const SceneSpec& scene() const { return scene_; }
  const NoiseSpec& noise() const { return noise_; }
  const std::vector<MapPoint>& map_points(std::size_t object) const { return map_points_.at(object); }

  /// Detections of every visible object in one frame. Randomness is drawn from
  /// a stream per (scene seed, frame id, object), so frames can be generated in
  /// any order.
  SimulatedFrame observe(const CameraFrame& frame) const {
    SimulatedFrame out;
    for (std::size_t k = 0; k < scene_.objects.size(); ++k) {
      Rng rng(derive_seed(scene_.seed, static_cast<std::uint64_t>(frame.frame_id()) + 1, k));
      std::uniform_real_distribution<double> u(0.0, 1.0);
      if (u(rng) < noise_.detection_dropout) continue;
      observe_object(frame, k, rng, out);
    }
    return out;
  }

 private:
  std::vector<MapPoint> build_points(std::size_t k) const {
    const Superquadric& sq = scene_.objects[k].sq;
    const auto grid = sample_surface(sq, scene_.map_points_eta, scene_.map_points_omega);
    Rng rng(derive_seed(scene_.seed, 0, k));
    std::vector<MapPoint> pts;
    const Mat3 r = sq.pose.rotation();
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const bool pole = std::abs(std::abs(grid[i].eta) - kPi / 2.0) < 1e-12;
      if (pole && i % static_cast<std::size_t>(scene_.map_points_omega) != 0) continue;
      MapPoint m;
      m.id = (static_cast<PointId>(k + 1) << 32) | static_cast<PointId>(i);
      m.position = object_to_world(sq.pose, grid[i].position) + gaussian_vec3(rng, noise_.point_sigma);
      m.normal = r * surface_normal(sq, grid[i].eta, grid[i].omega);
      pts.push_back(m);
    }
    return pts;
  }

  void observe_object(const CameraFrame& frame, std::size_t k, Rng& rng, SimulatedFrame& out) const {
    const SceneObject& obj = scene_.objects[k];
    const Intrinsics& K = frame.intrinsics();
    const BBox image{0.0, 0.0, double(K.width), double(K.height)};

    Observation obs;
    obs.frame_id = frame.frame_id();
    obs.class_label = obj.class_label;
    BBox tight{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
               -std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    for (const MapPoint& m : map_points_[k]) {
      if (m.normal.dot(frame.center() - m.position) <= 0.0) continue;
      const auto px = project_point(frame, m.position);
      if (!px || !bbox_contains(image, *px)) continue;
      obs.points_world.push_back(m.position);
      obs.point_ids.push_back(m.id);
      tight = {std::min(tight.xmin, px->x()), std::min(tight.ymin, px->y()),
               std::max(tight.xmax, px->x()), std::max(tight.ymax, px->y())};
    }
    if (obs.points_world.size() < 3) return;
    const std::size_t n_inliers = obs.points_world.size();

    std::normal_distribution<double> nb(0.0, 1.0);
    BBox b{tight.xmin + noise_.bbox_sigma * nb(rng), tight.ymin + noise_.bbox_sigma * nb(rng),
           tight.xmax + noise_.bbox_sigma * nb(rng), tight.ymax + noise_.bbox_sigma * nb(rng)};
    if (b.xmin > b.xmax) std::swap(b.xmin, b.xmax);
    if (b.ymin > b.ymax) std::swap(b.ymin, b.ymax);
    obs.bbox = b.clipped(K);

    if (near_cuboid(obj.sq)) {
      const double sigma = deg2rad(noise_.segment_angle_sigma);
      for (const auto& [a, e] : box_edges(obj.sq)) {
        const auto s = project_segment(frame, a, e);
        const double rot = sigma * nb(rng);
        if (!s) continue;
        const Vec2 mid = 0.5 * (s->a + s->b);
        const Eigen::Rotation2Dd r(rot);
        obs.segments.push_back({mid + r * (s->a - mid), mid + r * (s->b - mid)});
      }
    }

    const auto n_out = static_cast<std::size_t>(std::lround(noise_.outlier_fraction * n_inliers));
    const double r0 = obj.sq.size.vec().norm();
    const double r1 = r0 + noise_.outlier_radius;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (std::size_t j = 0; j < n_out; ++j) {
      const Vec3 dir = gaussian_vec3(rng).normalized();
      // Uniform in volume between the two spheres.
      const double r = std::cbrt(r0 * r0 * r0 + u(rng) * (r1 * r1 * r1 - r0 * r0 * r0));
      obs.points_world.push_back(obj.sq.pose.translation() + r * dir);
      obs.point_ids.push_back(kOutlierIdBit | (static_cast<PointId>(frame.frame_id()) << 24) |
                              (static_cast<PointId>(k) << 16) | static_cast<PointId>(j));
    }

    ObservationTruth truth;
    truth.object_index = k;
    truth.is_outlier.assign(obs.points_world.size(), false);
    std::fill(truth.is_outlier.begin() + static_cast<std::ptrdiff_t>(n_inliers), truth.is_outlier.end(),
              true);
    out.observations.push_back(std::move(obs));
    out.truth.push_back(std::move(truth));
  }

  SceneSpec scene_;
  NoiseSpec noise_;
  std::vector<std::vector<MapPoint>> map_points_;
};

inline SimulatedFrame observe_frame(const SceneSpec& scene, const CameraFrame& frame,
                                    const NoiseSpec& noise) {
  return Simulator(scene, noise).observe(frame);
}

struct EvalSpec {
  std::int64_t n_samples = 200000;
  std::uint64_t seed = 0;

  void validate() const {
    if (n_samples < kMinIouSamples) throw DataError("eval.n_samples must be >= 10000");
  }
};

struct ScenarioResult {
  ObjectMap map;
  EvalReport report;
  std::vector<double> front_stage_ms;  // per frame
  double total_ms = 0.0;
};

inline ScenarioResult run_scenario(const SceneSpec& scene, const TrajectorySpec& trajectory,
                                   const NoiseSpec& noise, const PipelineConfig& pipeline,
                                   const EvalSpec& eval = {}) {
  eval.validate();
  const auto t0 = std::chrono::steady_clock::now();
  const Simulator sim(scene, noise);
  Mapper mapper(pipeline);
  ScenarioResult result;
  for (const CameraFrame& frame : generate_trajectory(trajectory, scene)) {
    const SimulatedFrame sf = sim.observe(frame);
    result.front_stage_ms.push_back(mapper.process_frame(frame, sf.observations).front_stage_ms);
  }
  mapper.finalize();
  result.map = mapper.map();
  result.report = evaluate(result.map, scene, eval.n_samples, eval.seed);
  result.total_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

}  // namespace sqmap
