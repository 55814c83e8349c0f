#pragma once

// Per-frame semantic measurements and the accumulated object landmark.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sqmap/camera.hpp"
#include "sqmap/common.hpp"
#include "sqmap/geometry.hpp"
#include "sqmap/pose_estimation.hpp"
#include "sqmap/statistics.hpp"

namespace sqmap {

using PointId = std::uint64_t;

/// One detection: class label and box, the map points that fall inside the
/// box, and image line segments inside the box. `point_ids` parallels
/// `points_world`; equal ids across frames denote the same map point.
struct Observation {
  std::int64_t frame_id = 0;
  std::string class_label;
  BBox bbox;
  PointList points_world;
  std::vector<PointId> point_ids;
  std::vector<Segment2D> segments;

  Vec3 centroid() const { return mean_of(points_world); }
};

struct ObjectLandmark {
  std::int64_t id = 0;
  std::string class_label;
  /// Filtered world-frame cloud keyed by map point id.
  std::map<PointId, Vec3> cloud;
  CentroidHistory centroid_history;
  YawHistory yaw_history;
  ObjectPose pose;
  std::optional<Superquadric> model;
  std::int64_t last_assoc_frame = -1;
  BBox last_bbox;
  std::int64_t n_observations = 0;
  std::int64_t frames_since_refit = 0;

  PointList cloud_points() const {
    PointList out;
    out.reserve(cloud.size());
    for (const auto& [id, p] : cloud) out.push_back(p);
    return out;
  }

  std::size_t shared_points(const std::vector<PointId>& ids) const {
    std::size_t n = 0;
    for (PointId i : ids) n += cloud.count(i);
    return n;
  }
};

}  // namespace sqmap
