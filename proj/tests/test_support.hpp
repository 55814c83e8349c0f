#pragma once

#include <random>

#include "oracles.hpp"
#include "sqmap/sqmap.hpp"

namespace sqmap::test {

inline oracle::Body to_body(const Superquadric& sq) {
  const Vec3& t = sq.pose.translation();
  return {sq.size.ax(), sq.size.ay(), sq.size.az(), sq.shape.eps1(), sq.shape.eps2(),
          sq.pose.yaw(), t.x(),       t.y(),       t.z()};
}

inline Superquadric make_sq(double ax, double ay, double az, double e1, double e2, double yaw = 0.0,
                            const Vec3& t = Vec3::Zero()) {
  return Superquadric{SizeParams(ax, ay, az), ShapeParams(e1, e2), ObjectPose(yaw, t)};
}

inline Superquadric random_sq(Rng& rng, bool with_pose = false) {
  std::uniform_real_distribution<double> size(0.1, 2.0);
  std::uniform_real_distribution<double> eps(kMinShapeExponent, kMaxShapeExponent);
  std::uniform_real_distribution<double> yaw(-kPi, kPi);
  std::uniform_real_distribution<double> off(-1.0, 1.0);
  Superquadric sq{SizeParams(size(rng), size(rng), size(rng)), ShapeParams(eps(rng), eps(rng)), {}};
  if (with_pose) sq.pose = ObjectPose(yaw(rng), Vec3(off(rng), off(rng), off(rng)));
  return sq;
}

/// n points with uniformly drawn (eta, omega), object frame, each coordinate
/// perturbed by N(0, (noise * a_k)^2).
inline PointList noisy_surface(const Superquadric& sq, int n, double noise, Rng& rng) {
  std::uniform_real_distribution<double> eta(-kPi / 2.0, kPi / 2.0);
  std::uniform_real_distribution<double> omega(-kPi, kPi);
  std::normal_distribution<double> g(0.0, 1.0);
  PointList out;
  for (int i = 0; i < n; ++i) {
    Vec3 p = parametric_point(sq, eta(rng), omega(rng));
    for (int k = 0; k < 3; ++k) p(k) += noise * sq.size.vec()(k) * g(rng);
    out.push_back(p);
  }
  return out;
}

inline CameraFrame frame_at(const Vec3& eye, const Vec3& target, std::int64_t id = 0,
                            const Intrinsics& k = Intrinsics{}) {
  return CameraFrame(id, look_at_rotation(eye, target), eye, k);
}

/// Projected box edges of a body, each rotated about its midpoint by
/// N(0, sigma_deg) degrees.
inline std::vector<Segment2D> cuboid_segments(const Superquadric& sq, const CameraFrame& frame,
                                              double sigma_deg, Rng& rng) {
  std::normal_distribution<double> g(0.0, deg2rad(sigma_deg));
  std::vector<Segment2D> out;
  for (const auto& [a, b] : box_edges(sq)) {
    const auto s = project_segment(frame, a, b);
    if (!s) continue;
    const Vec2 mid = 0.5 * (s->a + s->b);
    const Eigen::Rotation2Dd r(sigma_deg > 0.0 ? g(rng) : 0.0);
    out.push_back({mid + r * (s->a - mid), mid + r * (s->b - mid)});
  }
  return out;
}

/// Yaw difference modulo quarter turns, in (-pi/4, pi/4].
inline double yaw_error(double estimate, double truth) {
  return normalize_yaw_singularity(estimate - truth).yaw;
}

}  // namespace sqmap::test
