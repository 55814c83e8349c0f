#pragma once

// Scenario descriptions: ground-truth objects, observation noise, camera path.

#include <string>
#include <vector>

#include "sqmap/camera.hpp"
#include "sqmap/common.hpp"
#include "sqmap/geometry.hpp"

namespace sqmap {

struct SceneObject {
  std::string class_label;
  Superquadric sq;
};

struct SceneSpec {
  std::vector<SceneObject> objects;
  std::uint64_t seed = 0;
  Aabb bounds{Vec3(-5.0, -5.0, -1.0), Vec3(5.0, 5.0, 3.0)};
  /// Map points per object are drawn from an (n_eta x n_omega) surface grid.
  int map_points_eta = 14;
  int map_points_omega = 28;

  void validate() const {
    if (!(bounds.min.array() < bounds.max.array()).all())
      throw DataError("scene.bounds: min must be below max on every axis");
    if (map_points_eta < 2 || map_points_omega < 3)
      throw DataError("scene.map_points_eta/omega must be >= 2 / >= 3");
    for (std::size_t i = 0; i < objects.size(); ++i) {
      const Aabb b = world_aabb(objects[i].sq);
      if (!(b.min.array() >= bounds.min.array()).all() || !(b.max.array() <= bounds.max.array()).all())
        throw DataError("scene.objects[" + std::to_string(i) + "] lies outside scene.bounds");
    }
  }

  /// Mean object position, or the bounds center for an empty scene.
  Vec3 centroid() const {
    if (objects.empty()) return (bounds.min + bounds.max) / 2.0;
    Vec3 c = Vec3::Zero();
    for (const auto& o : objects) c += o.sq.pose.translation();
    return c / static_cast<double>(objects.size());
  }
};

struct NoiseSpec {
  double point_sigma = 0.005;
  double bbox_sigma = 2.0;
  double segment_angle_sigma = 1.0;  // degrees
  double outlier_fraction = 0.1;
  double outlier_radius = 0.3;
  double detection_dropout = 0.05;

  void validate() const {
    if (!(point_sigma >= 0.0)) throw DataError("noise.point_sigma must be >= 0");
    if (!(bbox_sigma >= 0.0)) throw DataError("noise.bbox_sigma must be >= 0");
    if (!(segment_angle_sigma >= 0.0)) throw DataError("noise.segment_angle_sigma must be >= 0");
    if (!(outlier_fraction >= 0.0 && outlier_fraction <= 0.5))
      throw DataError("noise.outlier_fraction must lie in [0, 0.5]");
    if (!(outlier_radius >= 0.0)) throw DataError("noise.outlier_radius must be >= 0");
    if (!(detection_dropout >= 0.0 && detection_dropout <= 1.0))
      throw DataError("noise.detection_dropout must lie in [0, 1]");
  }
};

enum class TrajectoryKind { kOrbit, kLinear, kWaypoints };

struct TrajectorySpec {
  TrajectoryKind kind = TrajectoryKind::kOrbit;
  int n_frames = 200;
  Intrinsics intrinsics{525.0, 525.0, 319.5, 239.5, 640, 480};
  /// Orbit: horizontal radius and height above the scene centroid.
  double radius = 3.0;
  double height = 1.5;
  /// Linear: eye moves from start to end, looking at the scene centroid.
  Vec3 start = Vec3(3.0, -2.0, 1.5);
  Vec3 end = Vec3(3.0, 2.0, 1.5);
  /// Waypoints: one frame per listed eye position.
  PointList waypoints;

  void validate() const {
    intrinsics.validate();
    if (kind == TrajectoryKind::kWaypoints) {
      if (waypoints.empty()) throw DataError("trajectory.waypoints must not be empty");
    } else if (n_frames < 1) {
      throw DataError("trajectory.n_frames must be >= 1");
    }
    if (kind == TrajectoryKind::kOrbit && !(radius > 0.0))
      throw DataError("trajectory.radius must be positive");
  }
};

}  // namespace sqmap
