#pragma once

// Gravity-aligned object pose: centroid translation, yaw from edge alignment
// (with a PCA fallback for smooth objects), quarter-turn normalization and
// running yaw averaging.

#include <algorithm>
#include <array>
#include <optional>
#include <vector>

#include <Eigen/Eigenvalues>

#include "sqmap/camera.hpp"
#include "sqmap/common.hpp"

namespace sqmap {

enum class YawMethod { kLineAlignment, kPca };

struct YawEstimate {
  double yaw = 0.0;
  int n_matches = 0;
  /// Sum of squared line-angle errors over matched axes (rad^2).
  double residual = 0.0;
  YawMethod method = YawMethod::kLineAlignment;
  bool failed = false;
};

struct YawHistory {
  std::int64_t n = 0;
  double yaw_running = 0.0;
};

struct Segment3D {
  Vec3 a = Vec3::Zero();
  Vec3 b = Vec3::Zero();
};

inline Vec3 centroid_translation(const PointList& points) {
  if (points.empty()) throw DataError("centroid of an empty point cloud");
  return mean_of(points);
}

/// Unit segments along the object's X, Y, Z axes, rooted at the object center.
inline std::array<Segment3D, 3> axis_segments(double yaw, const Vec3& t) {
  const Mat3 r = rot_z(yaw);
  return {Segment3D{t, t + r.col(0)}, Segment3D{t, t + r.col(1)}, Segment3D{t, t + r.col(2)}};
}

struct YawNormalization {
  double yaw = 0.0;
  bool swap_xy = false;
};

/// Removes quarter turns until the yaw lies in (-pi/4, pi/4]. A quarter turn
/// with swapped X/Y extents describes the same body, so an odd number of
/// turns tells the caller to swap a_x and a_y.
inline YawNormalization normalize_yaw_singularity(double yaw) {
  const double k = std::ceil((yaw - kPi / 4.0) / (kPi / 2.0));
  double out = yaw - k * (kPi / 2.0);
  // Guard the closed upper end against rounding.
  if (out <= -kPi / 4.0) out += kPi / 2.0;
  if (out > kPi / 4.0 + 1e-15) out -= kPi / 2.0;
  const auto turns = static_cast<long long>(k);
  return {out, (turns % 2) != 0};
}

/// Running mean of yaw observations; each new value is first shifted by
/// quarter turns to within pi/4 of the running estimate.
inline YawHistory update_yaw(const YawHistory& h, double new_yaw) {
  YawHistory out = h;
  out.n = h.n + 1;
  if (h.n == 0) {
    out.yaw_running = new_yaw;
    return out;
  }
  const double k = std::round((h.yaw_running - new_yaw) / (kPi / 2.0));
  const double unwrapped = new_yaw + k * (kPi / 2.0);
  out.yaw_running = h.yaw_running + (unwrapped - h.yaw_running) / static_cast<double>(out.n);
  return out;
}

/// Combines two histories as if all observations had been averaged together.
inline YawHistory merge_yaw_history(const YawHistory& a, const YawHistory& b) {
  if (a.n == 0) return b;
  if (b.n == 0) return a;
  const double k = std::round((a.yaw_running - b.yaw_running) / (kPi / 2.0));
  const double bu = b.yaw_running + k * (kPi / 2.0);
  const double n = static_cast<double>(a.n + b.n);
  return {a.n + b.n, (a.yaw_running * static_cast<double>(a.n) + bu * static_cast<double>(b.n)) / n};
}

struct SegmentMatch {
  int axis = 0;
  std::size_t detected = 0;
  double error = 0.0;  // radians, undirected line angle difference
};

inline constexpr double kMaxMatchAngle = deg2rad(5.0);

using AxisProjections = std::array<std::optional<Segment2D>, 3>;

namespace detail {

inline std::vector<SegmentMatch> greedy_match(std::vector<SegmentMatch> cand, std::size_t n_detected) {
  std::stable_sort(cand.begin(), cand.end(), [](const SegmentMatch& l, const SegmentMatch& r) {
    return l.error < r.error;
  });
  std::array<bool, 3> axis_used{};
  std::vector<bool> det_used(n_detected, false);
  std::vector<SegmentMatch> out;
  for (const auto& c : cand) {
    if (axis_used[c.axis] || det_used[c.detected]) continue;
    axis_used[c.axis] = true;
    det_used[c.detected] = true;
    out.push_back(c);
  }
  std::sort(out.begin(), out.end(),
            [](const SegmentMatch& l, const SegmentMatch& r) { return l.axis < r.axis; });
  return out;
}

}  // namespace detail

/// Pairs projected axis segments with detected segments whose line angle is
/// within 5 degrees; greedy by ascending error, each segment used once.
inline std::vector<SegmentMatch> match_segments(const AxisProjections& projected,
                                                const std::vector<Segment2D>& detected,
                                                double max_angle = kMaxMatchAngle) {
  std::vector<SegmentMatch> cand;
  for (int a = 0; a < 3; ++a) {
    if (!projected[a]) continue;
    for (std::size_t d = 0; d < detected.size(); ++d) {
      const double e = line_angle_difference(*projected[a], detected[d]);
      if (e < max_angle) cand.push_back({a, d, e});
    }
  }
  return detail::greedy_match(std::move(cand), detected.size());
}

/// Same rule with a separate axis projection per detected segment.
inline std::vector<SegmentMatch> match_segments(const std::vector<AxisProjections>& projected,
                                                const std::vector<Segment2D>& detected,
                                                double max_angle = kMaxMatchAngle) {
  std::vector<SegmentMatch> cand;
  for (int a = 0; a < 3; ++a) {
    for (std::size_t d = 0; d < detected.size(); ++d) {
      if (!projected[d][a]) continue;
      const double e = line_angle_difference(*projected[d][a], detected[d]);
      if (e < max_angle) cand.push_back({a, d, e});
    }
  }
  return detail::greedy_match(std::move(cand), detected.size());
}

inline AxisProjections project_axes(double yaw, const Vec3& center, const CameraFrame& frame) {
  const auto axes = axis_segments(yaw, center);
  AxisProjections out;
  for (int i = 0; i < 3; ++i) out[i] = project_segment(frame, axes[i].a, axes[i].b);
  return out;
}

/// Point on the viewing ray through the midpoint of `s`, at the camera depth
/// of `center`.
inline Vec3 segment_anchor(const Segment2D& s, const Vec3& center, const CameraFrame& frame) {
  const Intrinsics& k = frame.intrinsics();
  const Vec2 m = 0.5 * (s.a + s.b);
  const double z = frame.world_to_camera(center).z();
  const Vec3 pc((m.x() - k.cx) / k.fx * z, (m.y() - k.cy) / k.fy * z, z);
  return frame.rotation() * pc + frame.translation();
}

/// Object axes projected where each detected segment lies. Parallel 3D edges
/// converge in the image, so an edge is compared with the axis rooted on its
/// own viewing ray rather than at the object center.
inline std::vector<AxisProjections> project_axes_at(double yaw, const Vec3& center, const CameraFrame& frame,
                                                    const std::vector<Segment2D>& detected) {
  std::vector<AxisProjections> out;
  out.reserve(detected.size());
  for (const auto& s : detected) out.push_back(project_axes(yaw, segment_anchor(s, center, frame), frame));
  return out;
}

struct LineYawOptions {
  int n_init_samples = 18;
  double init_min = deg2rad(-45.0);
  double init_max = deg2rad(45.0);
  double diff_step = deg2rad(0.1);
  double converge_step = deg2rad(0.01);
  int max_iterations = 20;
  int max_rematch_rounds = 3;
  /// Refine from every sample and rank the refined results (most matches,
  /// then lowest residual). When false only the best raw sample is refined.
  bool refine_all_samples = true;
};

namespace detail {

// Signed residuals of fixed matches at a trial yaw; nullopt when a matched
// axis no longer projects.
inline std::optional<std::vector<double>> yaw_residuals(double yaw, const Vec3& center,
                                                        const CameraFrame& frame,
                                                        const std::vector<Segment2D>& detected,
                                                        const std::vector<SegmentMatch>& matches) {
  std::vector<double> r;
  r.reserve(matches.size());
  for (const auto& m : matches) {
    const Segment2D& seg = detected[m.detected];
    const auto proj = project_axes(yaw, segment_anchor(seg, center, frame), frame)[m.axis];
    if (!proj) return std::nullopt;
    r.push_back(signed_line_angle_difference(*proj, seg));
  }
  return r;
}

inline double sum_sq(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

inline double sum_sq(const std::vector<SegmentMatch>& v) {
  double s = 0.0;
  for (const auto& m : v) s += m.error * m.error;
  return s;
}

// Damped Gauss-Newton on the scalar yaw with a central-difference derivative.
inline double refine_yaw(double yaw, const Vec3& center, const CameraFrame& frame,
                         const std::vector<Segment2D>& detected,
                         const std::vector<SegmentMatch>& matches, const LineYawOptions& opt) {
  auto r0 = yaw_residuals(yaw, center, frame, detected, matches);
  if (!r0) return yaw;
  double cost = sum_sq(*r0);
  double lambda = 1e-3;
  for (int it = 0; it < opt.max_iterations; ++it) {
    const auto rp = yaw_residuals(yaw + opt.diff_step, center, frame, detected, matches);
    const auto rm = yaw_residuals(yaw - opt.diff_step, center, frame, detected, matches);
    if (!rp || !rm) break;
    double jtj = 0.0;
    double jtr = 0.0;
    for (std::size_t i = 0; i < r0->size(); ++i) {
      const double j = ((*rp)[i] - (*rm)[i]) / (2.0 * opt.diff_step);
      jtj += j * j;
      jtr += j * (*r0)[i];
    }
    if (jtj == 0.0) break;
    bool accepted = false;
    double step = 0.0;
    for (int tries = 0; tries < 10 && !accepted; ++tries) {
      step = -jtr / (jtj * (1.0 + lambda));
      const auto rn = yaw_residuals(yaw + step, center, frame, detected, matches);
      if (rn && sum_sq(*rn) <= cost) {
        yaw += step;
        r0 = rn;
        cost = sum_sq(*rn);
        lambda = std::max(lambda * 0.1, 1e-9);
        accepted = true;
      } else {
        lambda *= 10.0;
      }
    }
    if (!accepted || std::abs(step) < opt.converge_step) break;
  }
  return yaw;
}

}  // namespace detail

namespace detail {

// Alternates refinement and rematching from one starting yaw.
inline YawEstimate refine_from(double yaw, std::vector<SegmentMatch> matches, const Vec3& center,
                               const CameraFrame& frame, const std::vector<Segment2D>& detected,
                               const LineYawOptions& opt) {
  for (int round = 0; round < opt.max_rematch_rounds; ++round) {
    yaw = refine_yaw(yaw, center, frame, detected, matches, opt);
    auto rematched = match_segments(project_axes_at(yaw, center, frame, detected), detected);
    const bool same = rematched.size() == matches.size() &&
                      std::equal(rematched.begin(), rematched.end(), matches.begin(),
                                 [](const SegmentMatch& l, const SegmentMatch& r) {
                                   return l.axis == r.axis && l.detected == r.detected;
                                 });
    if (rematched.empty()) break;
    matches = std::move(rematched);
    if (same) break;
  }
  const auto final_res = yaw_residuals(yaw, center, frame, detected, matches);
  return {wrap_angle(yaw), static_cast<int>(matches.size()),
          final_res ? sum_sq(*final_res) : sum_sq(matches), YawMethod::kLineAlignment, false};
}

// Most matches, then lowest residual, then smallest |yaw|.
inline bool better_yaw(const YawEstimate& cand, const YawEstimate& best) {
  if (best.failed) return true;
  if (cand.n_matches != best.n_matches) return cand.n_matches > best.n_matches;
  if (cand.residual != best.residual) return cand.residual < best.residual;
  return std::abs(cand.yaw) < std::abs(best.yaw);
}

}  // namespace detail

/// Yaw that best aligns the projected object axes with detected image
/// segments, started from 18 samples in [-45, 45] degrees.
inline YawEstimate estimate_yaw_lines(const Vec3& center, const std::vector<Segment2D>& detected,
                                      const CameraFrame& frame, const LineYawOptions& opt = {}) {
  YawEstimate best;
  best.method = YawMethod::kLineAlignment;
  best.failed = true;
  if (detected.empty()) return best;

  YawEstimate best_init = best;
  std::vector<SegmentMatch> best_matches;
  for (int k = 0; k < opt.n_init_samples; ++k) {
    const double yaw =
        opt.init_min + (opt.init_max - opt.init_min) * k / std::max(1, opt.n_init_samples - 1);
    auto matches = match_segments(project_axes_at(yaw, center, frame, detected), detected);
    if (matches.empty()) continue;
    if (opt.refine_all_samples) {
      const YawEstimate refined = detail::refine_from(yaw, std::move(matches), center, frame, detected, opt);
      if (detail::better_yaw(refined, best)) best = refined;
      continue;
    }
    const YawEstimate raw{yaw, static_cast<int>(matches.size()), detail::sum_sq(matches),
                          YawMethod::kLineAlignment, false};
    if (detail::better_yaw(raw, best_init)) {
      best_init = raw;
      best_matches = std::move(matches);
    }
  }
  if (opt.refine_all_samples || best_init.failed) return best;
  return detail::refine_from(best_init.yaw, std::move(best_matches), center, frame, detected, opt);
}

/// Orientation in (-pi, pi] of the dominant principal axis of the X-Y
/// projected cloud; nullopt for rank-deficient or isotropic spreads.
inline std::optional<double> principal_axis_angle(const PointList& points) {
  if (points.size() < 3) return std::nullopt;
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  for (const auto& p : points) mean += p.head<2>();
  mean /= static_cast<double>(points.size());
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  for (const auto& p : points) {
    const Eigen::Vector2d d = p.head<2>() - mean;
    cov += d * d.transpose();
  }
  cov /= static_cast<double>(points.size());
  const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(cov);
  const double lmin = es.eigenvalues()(0);
  const double lmax = es.eigenvalues()(1);
  if (!(lmax > 0.0) || lmin <= 1e-9 * lmax || lmax - lmin <= 1e-9 * lmax) return std::nullopt;
  const Eigen::Vector2d v = es.eigenvectors().col(1);
  return std::atan2(v.y(), v.x());
}

inline YawEstimate estimate_yaw_pca(const PointList& points) {
  YawEstimate e;
  e.method = YawMethod::kPca;
  const auto angle = principal_axis_angle(points);
  if (!angle) {
    e.failed = true;
    return e;
  }
  e.yaw = normalize_yaw_singularity(*angle).yaw;
  return e;
}

}  // namespace sqmap
