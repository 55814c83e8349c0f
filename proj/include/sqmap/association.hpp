#pragma once

// Observation-to-landmark association: box overlap and shared map points for
// consecutive frames, a single-sample t test on centroid histories for
// isolated detections, and a two-sample t test for duplicate landmarks.

#include <algorithm>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "sqmap/camera.hpp"
#include "sqmap/landmark.hpp"
#include "sqmap/statistics.hpp"

namespace sqmap {

struct AssocConfig {
  double iou_threshold = 0.3;
  int shared_point_threshold = 5;
  double significance_alpha = 0.05;
  int min_history = 3;
  /// Split alpha across the three axis tests (Bonferroni), so the
  /// all-axes decision has family-wise level alpha.
  bool family_wise = true;
  /// Landmarks associated within this many frames count as "previous frame"
  /// candidates for box-overlap association.
  int interframe_window = 1;

  void validate() const {
    if (!(iou_threshold > 0.0 && iou_threshold < 1.0))
      throw DataError("assoc.iou_threshold must lie in (0, 1)");
    if (shared_point_threshold < 0) throw DataError("assoc.shared_point_threshold must be >= 0");
    if (!(significance_alpha > 0.0 && significance_alpha < 1.0))
      throw DataError("assoc.significance_alpha must lie in (0, 1)");
    if (min_history < 2) throw DataError("assoc.min_history must be >= 2");
    if (interframe_window < 1) throw DataError("assoc.interframe_window must be >= 1");
  }

  double axis_alpha() const { return family_wise ? significance_alpha / 3.0 : significance_alpha; }
};

inline double bbox_iou(const BBox& a, const BBox& b) {
  const double iw = std::min(a.xmax, b.xmax) - std::max(a.xmin, b.xmin);
  const double ih = std::min(a.ymax, b.ymax) - std::max(a.ymin, b.ymin);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

/// Critical |t| for one axis at the configured level.
inline double axis_critical(const AssocConfig& cfg, double df) {
  return t_critical(cfg.axis_alpha(), df);
}

inline bool single_sample_passes(const CentroidHistory& h, const Vec3& c, const AssocConfig& cfg) {
  const AxisTTest t = t_statistic_single(h, c);
  return t.passes(axis_critical(cfg, t.df));
}

inline bool double_sample_passes(const CentroidHistory& a, const CentroidHistory& b,
                                 const AssocConfig& cfg) {
  const AxisTTest t = t_statistic_double(a, b);
  return t.passes(axis_critical(cfg, t.df));
}

/// Consecutive-frame association. Box overlap is checked against landmarks
/// in `prev_boxes` (those associated in the recent window): the best
/// same-class overlap above threshold wins (ties: more shared points, then
/// lower id). Otherwise the same-class landmark sharing the most map points
/// wins if it reaches the threshold; map-point identity does not expire, so
/// this part considers every landmark.
inline std::optional<std::int64_t> associate_interframe(
    const Observation& obs, std::span<const ObjectLandmark> landmarks,
    const std::map<std::int64_t, BBox>& prev_boxes, const AssocConfig& cfg,
    std::span<const std::int64_t> exclude = {}) {
  struct Cand {
    std::int64_t id;
    double iou;
    std::size_t shared;
    bool recent;
  };
  std::vector<Cand> cands;
  for (const auto& lm : landmarks) {
    if (lm.class_label != obs.class_label) continue;
    if (std::find(exclude.begin(), exclude.end(), lm.id) != exclude.end()) continue;
    const auto it = prev_boxes.find(lm.id);
    const bool recent = it != prev_boxes.end();
    cands.push_back({lm.id, recent ? bbox_iou(obs.bbox, it->second) : 0.0,
                     lm.shared_points(obs.point_ids), recent});
  }
  if (cands.empty()) return std::nullopt;

  const auto by_iou = std::min_element(cands.begin(), cands.end(), [](const Cand& l, const Cand& r) {
    if (l.iou != r.iou) return l.iou > r.iou;
    if (l.shared != r.shared) return l.shared > r.shared;
    return l.id < r.id;
  });
  if (by_iou->recent && by_iou->iou > cfg.iou_threshold) return by_iou->id;

  const auto by_shared =
      std::min_element(cands.begin(), cands.end(), [](const Cand& l, const Cand& r) {
        if (l.shared != r.shared) return l.shared > r.shared;
        return l.id < r.id;
      });
  if (by_shared->shared > 0 &&
      by_shared->shared >= static_cast<std::size_t>(cfg.shared_point_threshold))
    return by_shared->id;
  return std::nullopt;
}

/// Association of a detection with no recent counterpart: among same-class
/// landmarks with enough history, the one passing the single-sample test on
/// every axis with the smallest max |t|. Ids in `exclude` are skipped.
inline std::optional<std::int64_t> associate_isolated(const Vec3& obs_centroid,
                                                      const std::string& obs_class,
                                                      std::span<const ObjectLandmark> landmarks,
                                                      const AssocConfig& cfg,
                                                      std::span<const std::int64_t> exclude = {}) {
  std::optional<std::int64_t> best;
  double best_t = std::numeric_limits<double>::infinity();
  for (const auto& lm : landmarks) {
    if (lm.class_label != obs_class) continue;
    if (std::find(exclude.begin(), exclude.end(), lm.id) != exclude.end()) continue;
    if (std::ssize(lm.centroid_history.samples()) < cfg.min_history) continue;
    const AxisTTest t = t_statistic_single(lm.centroid_history, obs_centroid);
    if (!t.passes(axis_critical(cfg, t.df))) continue;
    if (t.max_abs() < best_t || (t.max_abs() == best_t && best && lm.id < *best)) {
      best_t = t.max_abs();
      best = lm.id;
    }
  }
  return best;
}

/// Same-class landmark pairs whose centroid histories pass the two-sample
/// test, grouped by union-find. Each returned pair is (survivor, absorbed)
/// with the survivor the lowest id of its group; sorted by (survivor, absorbed).
inline std::vector<std::pair<std::int64_t, std::int64_t>> find_merge_pairs(
    std::span<const ObjectLandmark> landmarks, const AssocConfig& cfg) {
  std::vector<std::size_t> order(landmarks.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return landmarks[a].id < landmarks[b].id; });

  std::vector<std::size_t> parent(landmarks.size());
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  const auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  const auto unite = [&](std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (landmarks[a].id < landmarks[b].id)
      parent[b] = a;
    else
      parent[a] = b;
  };

  for (std::size_t i = 0; i < order.size(); ++i) {
    const auto& a = landmarks[order[i]];
    if (std::ssize(a.centroid_history.samples()) < cfg.min_history) continue;
    for (std::size_t j = i + 1; j < order.size(); ++j) {
      const auto& b = landmarks[order[j]];
      if (b.class_label != a.class_label) continue;
      if (std::ssize(b.centroid_history.samples()) < cfg.min_history) continue;
      if (double_sample_passes(a.centroid_history, b.centroid_history, cfg))
        unite(order[i], order[j]);
    }
  }

  std::vector<std::pair<std::int64_t, std::int64_t>> pairs;
  for (std::size_t i : order) {
    const std::size_t root = find(i);
    if (root != i) pairs.emplace_back(landmarks[root].id, landmarks[i].id);
  }
  std::sort(pairs.begin(), pairs.end());
  return pairs;
}

}  // namespace sqmap
