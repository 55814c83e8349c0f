#pragma once

// Pinhole camera, frame poses and projection of points and segments.

#include <algorithm>
#include <limits>
#include <optional>

#include <Eigen/Geometry>

#include "sqmap/common.hpp"

namespace sqmap {

struct Intrinsics {
  double fx = 500.0;
  double fy = 500.0;
  double cx = 320.0;
  double cy = 240.0;
  int width = 640;
  int height = 480;

  void validate() const {
    if (!(fx > 0.0 && fy > 0.0)) throw DataError("intrinsics: focal lengths must be positive");
    if (!(cx > 0.0 && cx < width && cy > 0.0 && cy < height))
      throw DataError("intrinsics: principal point must lie inside the image");
  }

  Mat3 matrix() const {
    Mat3 k;
    k << fx, 0.0, cx, 0.0, fy, cy, 0.0, 0.0, 1.0;
    return k;
  }

  friend bool operator==(const Intrinsics&, const Intrinsics&) = default;
};

/// Camera-to-world pose plus intrinsics for one image.
class CameraFrame {
 public:
  CameraFrame() = default;
  CameraFrame(std::int64_t frame_id, const Mat3& rotation, const Vec3& translation,
              const Intrinsics& intrinsics)
      : frame_id_(frame_id), r_(rotation), t_(translation), k_(intrinsics) {
    k_.validate();
    if ((r_.transpose() * r_ - Mat3::Identity()).cwiseAbs().maxCoeff() > 1e-9 ||
        std::abs(r_.determinant() - 1.0) > 1e-9)
      throw DataError("camera rotation must be orthonormal with determinant +1");
  }

  std::int64_t frame_id() const { return frame_id_; }
  const Mat3& rotation() const { return r_; }
  const Vec3& translation() const { return t_; }
  const Intrinsics& intrinsics() const { return k_; }

  /// Camera center in world coordinates.
  const Vec3& center() const { return t_; }

  Vec3 world_to_camera(const Vec3& p_world) const { return r_.transpose() * (p_world - t_); }

 private:
  std::int64_t frame_id_ = 0;
  Mat3 r_ = Mat3::Identity();
  Vec3 t_ = Vec3::Zero();
  Intrinsics k_;
};

inline constexpr double kMinDepth = 1e-6;
inline constexpr double kMinSegmentPixels = 2.0;

struct BBox {
  double xmin = 0.0;
  double ymin = 0.0;
  double xmax = 0.0;
  double ymax = 0.0;

  double width() const { return xmax - xmin; }
  double height() const { return ymax - ymin; }
  double area() const { return std::max(0.0, width()) * std::max(0.0, height()); }
  bool valid() const { return xmin < xmax && ymin < ymax; }

  BBox clipped(const Intrinsics& k) const {
    return {std::clamp(xmin, 0.0, double(k.width)), std::clamp(ymin, 0.0, double(k.height)),
            std::clamp(xmax, 0.0, double(k.width)), std::clamp(ymax, 0.0, double(k.height))};
  }

  friend bool operator==(const BBox&, const BBox&) = default;
};

/// Inclusive containment.
inline bool bbox_contains(const BBox& b, const Vec2& px) {
  return px.x() >= b.xmin && px.x() <= b.xmax && px.y() >= b.ymin && px.y() <= b.ymax;
}

struct Segment2D {
  Vec2 a = Vec2::Zero();
  Vec2 b = Vec2::Zero();

  Vec2 direction() const { return b - a; }
  double length() const { return (b - a).norm(); }
  bool vertical() const { return a.x() == b.x(); }

  /// Orientation of the undirected line in [0, pi).
  double angle() const {
    double th = std::atan2(b.y() - a.y(), b.x() - a.x());
    if (th < 0.0) th += kPi;
    if (th >= kPi) th -= kPi;
    return th;
  }

  /// dy/dx; infinite for vertical segments.
  double slope() const {
    if (vertical()) return std::numeric_limits<double>::infinity();
    return (b.y() - a.y()) / (b.x() - a.x());
  }
};

/// Angle between two undirected lines, in [0, pi/2].
inline double line_angle_difference(const Segment2D& s, const Segment2D& t) {
  double d = std::abs(s.angle() - t.angle());
  if (d > kPi / 2.0) d = kPi - d;
  return d;
}

/// Signed counterpart of line_angle_difference, in (-pi/2, pi/2].
inline double signed_line_angle_difference(const Segment2D& s, const Segment2D& t) {
  double d = s.angle() - t.angle();
  while (d > kPi / 2.0) d -= kPi;
  while (d <= -kPi / 2.0) d += kPi;
  return d;
}

/// Pinhole projection; nullopt when the point is behind the camera.
inline std::optional<Vec2> project_point(const CameraFrame& frame, const Vec3& p_world) {
  const Vec3 pc = frame.world_to_camera(p_world);
  if (pc.z() <= kMinDepth) return std::nullopt;
  const Intrinsics& k = frame.intrinsics();
  return Vec2(k.fx * pc.x() / pc.z() + k.cx, k.fy * pc.y() / pc.z() + k.cy);
}

/// Projects a 3D segment; nullopt when an endpoint is behind the camera or the
/// image of the segment is shorter than 2 px.
inline std::optional<Segment2D> project_segment(const CameraFrame& frame, const Vec3& a_world,
                                                const Vec3& b_world) {
  const auto pa = project_point(frame, a_world);
  const auto pb = project_point(frame, b_world);
  if (!pa || !pb) return std::nullopt;
  Segment2D s{*pa, *pb};
  if (s.length() < kMinSegmentPixels) return std::nullopt;
  return s;
}

/// Rotation whose camera +Z looks from `eye` toward `target`, with image +Y
/// pointing toward world -Z (down).
inline Mat3 look_at_rotation(const Vec3& eye, const Vec3& target, const Vec3& up = Vec3::UnitZ()) {
  const Vec3 z = (target - eye).normalized();
  Vec3 x = z.cross(up);
  if (x.norm() < 1e-9) x = z.cross(Vec3::UnitX());
  x.normalize();
  const Vec3 y = z.cross(x);
  Mat3 r;
  r.col(0) = x;
  r.col(1) = y;
  r.col(2) = z;
  return r;
}

}  // namespace sqmap
