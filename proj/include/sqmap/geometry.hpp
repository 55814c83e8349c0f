#pragma once

// Superquadric (superellipsoid) primitives: parametric and implicit forms,
// radial distance, surface sampling, rigid transforms and volumetric IoU.

#include <algorithm>
#include <array>
#include <cstdint>
#include <random>
#include <vector>

#include "sqmap/common.hpp"

namespace sqmap {

inline constexpr double kMinShapeExponent = 0.1;
inline constexpr double kMaxShapeExponent = 1.9;

/// Shape exponents. Values outside [0.1, 1.9] are clamped on construction.
class ShapeParams {
 public:
  ShapeParams() = default;
  ShapeParams(double eps1, double eps2) : eps1_(clamp(eps1)), eps2_(clamp(eps2)) {}

  double eps1() const { return eps1_; }
  double eps2() const { return eps2_; }

  static double clamp(double e) {
    if (!std::isfinite(e)) throw DataError("shape exponent is not finite");
    return std::clamp(e, kMinShapeExponent, kMaxShapeExponent);
  }

  friend bool operator==(const ShapeParams&, const ShapeParams&) = default;

 private:
  double eps1_ = 1.0;
  double eps2_ = 1.0;
};

/// Semi-axis lengths, all strictly positive.
class SizeParams {
 public:
  SizeParams() = default;
  SizeParams(double ax, double ay, double az) : a_(ax, ay, az) {
    if (!(ax > 0.0 && ay > 0.0 && az > 0.0) || !a_.allFinite())
      throw DataError("superquadric semi-axes must be positive and finite");
  }
  explicit SizeParams(const Vec3& a) : SizeParams(a.x(), a.y(), a.z()) {}

  double ax() const { return a_.x(); }
  double ay() const { return a_.y(); }
  double az() const { return a_.z(); }
  const Vec3& vec() const { return a_; }
  double min_axis() const { return a_.minCoeff(); }

  friend bool operator==(const SizeParams& l, const SizeParams& r) { return l.a_ == r.a_; }

 private:
  Vec3 a_ = Vec3::Ones();
};

/// Gravity-aligned object pose: yaw about world Z plus translation. Pitch and
/// roll are fixed at zero.
class ObjectPose {
 public:
  ObjectPose() = default;
  ObjectPose(double yaw, const Vec3& t) : yaw_(wrap_angle(yaw)), t_(t) {}

  double yaw() const { return yaw_; }
  const Vec3& translation() const { return t_; }
  Mat3 rotation() const { return rot_z(yaw_); }

  friend bool operator==(const ObjectPose& l, const ObjectPose& r) {
    return l.yaw_ == r.yaw_ && l.t_ == r.t_;
  }

 private:
  double yaw_ = 0.0;
  Vec3 t_ = Vec3::Zero();
};

struct Superquadric {
  SizeParams size;
  ShapeParams shape;
  ObjectPose pose;

  friend bool operator==(const Superquadric&, const Superquadric&) = default;
};

struct SurfacePoint {
  double eta = 0.0;
  double omega = 0.0;
  Vec3 position = Vec3::Zero();
};

inline Vec3 world_to_object(const ObjectPose& pose, const Vec3& p_world) {
  return pose.rotation().transpose() * (p_world - pose.translation());
}

inline Vec3 object_to_world(const ObjectPose& pose, const Vec3& p_obj) {
  return pose.rotation() * p_obj + pose.translation();
}

/// Surface point for angles eta in [-pi/2, pi/2], omega in [-pi, pi], object frame.
inline Vec3 parametric_point(const Superquadric& sq, double eta, double omega) {
  const double e1 = sq.shape.eps1();
  const double e2 = sq.shape.eps2();
  const double ce = signed_pow(std::cos(eta), e1);
  const double se = signed_pow(std::sin(eta), e1);
  const double cw = signed_pow(std::cos(omega), e2);
  const double sw = signed_pow(std::sin(omega), e2);
  return {sq.size.ax() * ce * cw, sq.size.ay() * ce * sw, sq.size.az() * se};
}

/// Inside-outside function F of an object-frame point: < 1 inside, 1 on the
/// surface, > 1 outside.
inline double inside_outside(const Superquadric& sq, const Vec3& p) {
  const double e1 = sq.shape.eps1();
  const double e2 = sq.shape.eps2();
  const double x = std::pow(std::abs(p.x() / sq.size.ax()), 2.0 / e2);
  const double y = std::pow(std::abs(p.y() / sq.size.ay()), 2.0 / e2);
  const double z = std::pow(std::abs(p.z() / sq.size.az()), 2.0 / e1);
  return std::pow(x + y, e2 / e1) + z;
}

/// Distance from an object-frame point to the surface along the ray through
/// the center. At the origin every ray has positive length; the smallest
/// semi-axis is returned there.
inline double radial_distance(const Superquadric& sq, const Vec3& p) {
  const double norm = p.norm();
  if (norm == 0.0) return sq.size.min_axis();
  const double f = inside_outside(sq, p);
  return norm * std::abs(1.0 - std::pow(f, -0.5 * sq.shape.eps1()));
}

/// Uniform (eta, omega) grid. eta spans [-pi/2, pi/2] inclusive; omega spans
/// [-pi, pi) so the seam is not duplicated. Row-major in eta.
inline std::vector<SurfacePoint> sample_surface(const Superquadric& sq, int n_eta, int n_omega) {
  if (n_eta < 2 || n_omega < 3)
    throw DataError("sample_surface needs n_eta >= 2 and n_omega >= 3");
  std::vector<SurfacePoint> out;
  out.reserve(static_cast<std::size_t>(n_eta) * static_cast<std::size_t>(n_omega));
  for (int i = 0; i < n_eta; ++i) {
    const double eta = -kPi / 2.0 + kPi * i / (n_eta - 1);
    for (int j = 0; j < n_omega; ++j) {
      const double omega = -kPi + 2.0 * kPi * j / n_omega;
      out.push_back({eta, omega, parametric_point(sq, eta, omega)});
    }
  }
  return out;
}

/// Outward unit normal at (eta, omega), object frame, by central differences
/// of the parametric map. Degenerates at the poles; callers sample away from them.
inline Vec3 surface_normal(const Superquadric& sq, double eta, double omega, double h = 1e-5) {
  const Vec3 d_eta = parametric_point(sq, eta + h, omega) - parametric_point(sq, eta - h, omega);
  const Vec3 d_omega = parametric_point(sq, eta, omega + h) - parametric_point(sq, eta, omega - h);
  Vec3 n = d_omega.cross(d_eta);
  const double len = n.norm();
  if (len == 0.0) return parametric_point(sq, eta, omega).normalized();
  n /= len;
  if (n.dot(parametric_point(sq, eta, omega)) < 0.0) n = -n;
  return n;
}

/// True when a world point lies inside or on the body.
inline bool contains(const Superquadric& sq, const Vec3& p_world) {
  const Vec3 p = world_to_object(sq.pose, p_world);
  const Vec3& a = sq.size.vec();
  if (std::abs(p.x()) > a.x() || std::abs(p.y()) > a.y() || std::abs(p.z()) > a.z()) return false;
  return inside_outside(sq, p) <= 1.0;
}

struct Aabb {
  Vec3 min = Vec3::Zero();
  Vec3 max = Vec3::Zero();

  bool intersects(const Aabb& o) const {
    return (min.array() <= o.max.array()).all() && (o.min.array() <= max.array()).all();
  }
  Aabb merged(const Aabb& o) const { return {min.cwiseMin(o.min), max.cwiseMax(o.max)}; }
  Vec3 extent() const { return max - min; }
};

/// World-frame axis-aligned box enclosing the body.
inline Aabb world_aabb(const Superquadric& sq) {
  const Vec3 half = sq.pose.rotation().cwiseAbs() * sq.size.vec();
  return {sq.pose.translation() - half, sq.pose.translation() + half};
}

inline constexpr std::int64_t kMinIouSamples = 10000;

/// Monte-Carlo volumetric IoU, sampling uniformly in the union's bounding box.
/// Deterministic for a fixed seed.
inline double iou_3d(const Superquadric& a, const Superquadric& b, std::int64_t n_samples,
                     std::uint64_t seed) {
  if (n_samples < kMinIouSamples) throw DataError("iou_3d needs at least 1e4 samples");
  const Aabb ba = world_aabb(a);
  const Aabb bb = world_aabb(b);
  if (!ba.intersects(bb)) return 0.0;
  const Aabb box = ba.merged(bb);
  Rng rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::int64_t n_inter = 0;
  std::int64_t n_union = 0;
  const Vec3 ext = box.extent();
  for (std::int64_t i = 0; i < n_samples; ++i) {
    const double rx = u(rng);
    const double ry = u(rng);
    const double rz = u(rng);
    const Vec3 p = box.min + Vec3(rx * ext.x(), ry * ext.y(), rz * ext.z());
    const bool in_a = contains(a, p);
    const bool in_b = contains(b, p);
    n_inter += (in_a && in_b) ? 1 : 0;
    n_union += (in_a || in_b) ? 1 : 0;
  }
  if (n_union == 0) return 0.0;
  return static_cast<double>(n_inter) / static_cast<double>(n_union);
}

}  // namespace sqmap
