#pragma once

// Outlier removal for object point clouds: reprojection consistency against a
// detection box, and an Extended Isolation Forest whose branch cuts are
// hyperplanes with normals drawn from N(0, I).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

#include "sqmap/camera.hpp"
#include "sqmap/common.hpp"

namespace sqmap {

inline constexpr double kEulerGamma = 0.5772156649;

/// Harmonic number: exact partial sum up to k = 10, ln(k) + gamma beyond.
inline double harmonic_number(std::int64_t k) {
  if (k <= 0) return 0.0;
  if (k <= 10) {
    double h = 0.0;
    for (std::int64_t i = 1; i <= k; ++i) h += 1.0 / static_cast<double>(i);
    return h;
  }
  return std::log(static_cast<double>(k)) + kEulerGamma;
}

/// Average path length of an unsuccessful BST search over n points; the
/// normalizer of the anomaly score. c(n) = 0 for n <= 1.
inline double average_path_length(std::int64_t n) {
  if (n <= 1) return 0.0;
  const double nd = static_cast<double>(n);
  return 2.0 * harmonic_number(n - 1) - 2.0 * (nd - 1.0) / nd;
}

struct EifConfig {
  int n_trees = 100;
  int subsample_size = 256;
  /// 0 selects ceil(log2(subsample)).
  int depth_limit = 0;
  double score_threshold = 0.6;
  std::uint64_t seed = 0;

  void validate() const {
    if (n_trees < 1) throw DataError("eif.n_trees must be >= 1");
    if (subsample_size < 2) throw DataError("eif.subsample_size must be >= 2");
    if (depth_limit < 0) throw DataError("eif.depth_limit must be >= 0");
    if (!(score_threshold > 0.0 && score_threshold < 1.0))
      throw DataError("eif.score_threshold must lie in (0, 1)");
  }
};

using TreeRng = SplitMix64;

class IsolationTree {
 public:
  struct Node {
    Vec3 normal = Vec3::Zero();
    double intercept = 0.0;
    int left = -1;
    int right = -1;
    int size = 0;
    int depth = 0;
    double lo = 0.0;  // range of branch projections the intercept was drawn from
    double hi = 0.0;
    double path = 0.0;  // depth + c(size); used when this node is a leaf

    bool leaf() const { return left < 0; }
  };

  IsolationTree(const PointList& points, std::vector<std::size_t> sample, int depth_limit,
                TreeRng& rng)
      : depth_limit_(depth_limit) {
    nodes_.reserve(2 * sample.size() + 1);
    std::vector<double> proj(points.size());
    grow(points, sample.data(), sample.data() + sample.size(), proj, 0, rng);
  }

  /// Depth at which x settles, extended by c(leaf size) for unresolved leaves.
  double path_length(const Vec3& x) const {
    int idx = 0;
    while (!nodes_[idx].leaf()) {
      const Node& n = nodes_[idx];
      idx = x.dot(n.normal) <= n.intercept ? n.left : n.right;
    }
    return nodes_[idx].path;
  }

  const std::vector<Node>& nodes() const { return nodes_; }
  int depth_limit() const { return depth_limit_; }

 private:
  // Splits [first, last) in place; `proj` is scratch indexed by point.
  int grow(const PointList& points, std::size_t* first, std::size_t* last, std::vector<double>& proj,
           int depth, TreeRng& rng) {
    const int id = static_cast<int>(nodes_.size());
    const auto n = last - first;
    nodes_.push_back({});
    nodes_[id].size = static_cast<int>(n);
    nodes_[id].depth = depth;
    nodes_[id].path = depth + average_path_length(n);
    if (n <= 1 || depth >= depth_limit_) return id;

    const Vec3 normal = gaussian_vec3(rng);
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (auto* it = first; it != last; ++it) {
      const double v = points[*it].dot(normal);
      proj[*it] = v;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    std::uniform_real_distribution<double> u(lo, hi);
    const double intercept = (lo == hi) ? lo : u(rng);
    std::size_t* mid = std::partition(first, last, [&](std::size_t i) { return proj[i] <= intercept; });

    nodes_[id].normal = normal;
    nodes_[id].intercept = intercept;
    nodes_[id].lo = lo;
    nodes_[id].hi = hi;
    const int l = grow(points, first, mid, proj, depth + 1, rng);
    const int r = grow(points, mid, last, proj, depth + 1, rng);
    nodes_[id].left = l;
    nodes_[id].right = r;
    return id;
  }

  int depth_limit_;
  std::vector<Node> nodes_;
};

class IsolationForest {
 public:
  IsolationForest(const PointList& points, const EifConfig& cfg) {
    cfg.validate();
    if (points.size() < 2) throw DataError("isolation forest needs at least 2 points");
    sample_size_ = std::min<std::int64_t>(cfg.subsample_size, std::ssize(points));
    depth_limit_ = cfg.depth_limit > 0
                       ? cfg.depth_limit
                       : static_cast<int>(std::ceil(std::log2(static_cast<double>(sample_size_))));
    trees_.reserve(cfg.n_trees);
    for (int t = 0; t < cfg.n_trees; ++t) {
      // Independent stream per tree, so trees could be grown in any order.
      TreeRng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(t)));
      trees_.emplace_back(points, subsample(points.size(), rng), depth_limit_, rng);
    }
  }

  double mean_path_length(const Vec3& x) const {
    double sum = 0.0;
    for (const auto& t : trees_) sum += t.path_length(x);
    return sum / static_cast<double>(trees_.size());
  }

  /// s = 2^(-E[h(x)] / c(psi)), psi the per-tree subsample size.
  double anomaly_score(const Vec3& x) const {
    return std::exp2(-mean_path_length(x) / average_path_length(sample_size_));
  }

  std::int64_t sample_size() const { return sample_size_; }
  int depth_limit() const { return depth_limit_; }
  const std::vector<IsolationTree>& trees() const { return trees_; }

 private:
  std::vector<std::size_t> subsample(std::size_t n, TreeRng& rng) const {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    const auto k = static_cast<std::size_t>(sample_size_);
    for (std::size_t i = 0; i < k; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, n - 1);
      std::swap(idx[i], idx[pick(rng)]);
    }
    idx.resize(k);
    return idx;
  }

  std::int64_t sample_size_ = 0;
  int depth_limit_ = 0;
  std::vector<IsolationTree> trees_;
};

inline IsolationForest build_forest(const PointList& points, const EifConfig& cfg) {
  return IsolationForest(points, cfg);
}

inline double anomaly_score(const IsolationForest& forest, const Vec3& x) {
  return forest.anomaly_score(x);
}

/// Restricts a removal mask so at most floor(n * max_fraction) points are
/// dropped; the highest-priority removals win, ties by index.
inline std::size_t cap_removals(Mask& keep, const std::vector<double>& priority,
                                double max_fraction = 0.5) {
  const std::size_t cap = static_cast<std::size_t>(std::floor(keep.size() * max_fraction));
  std::vector<std::size_t> removed;
  for (std::size_t i = 0; i < keep.size(); ++i)
    if (!keep[i]) removed.push_back(i);
  if (removed.size() > cap) {
    std::stable_sort(removed.begin(), removed.end(),
                     [&](std::size_t a, std::size_t b) { return priority[a] > priority[b]; });
    for (std::size_t i = cap; i < removed.size(); ++i) keep[removed[i]] = true;
    removed.resize(cap);
  }
  return removed.size();
}

struct FilterResult {
  Mask keep;
  std::vector<double> scores;
  std::size_t removed = 0;
  /// True when the cloud was too small to filter and the mask is the identity.
  bool skipped = false;
};

inline constexpr std::size_t kMinPointsToFilter = 4;

/// Removes points whose anomaly score exceeds the threshold, never more than
/// half the cloud.
inline FilterResult filter_outliers(const PointList& points, const EifConfig& cfg) {
  FilterResult r;
  r.keep.assign(points.size(), true);
  if (points.size() < kMinPointsToFilter) {
    r.skipped = true;
    return r;
  }
  const IsolationForest forest(points, cfg);
  r.scores.resize(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    r.scores[i] = forest.anomaly_score(points[i]);
    r.keep[i] = r.scores[i] <= cfg.score_threshold;
  }
  r.removed = cap_removals(r.keep, r.scores);
  return r;
}

/// Keeps points whose projection lands inside the box grown by `margin_px`
/// on every side. Points behind the camera are unobservable in this frame and
/// are kept.
inline Mask reprojection_filter(const PointList& points, const CameraFrame& frame, const BBox& bbox,
                                double margin_px = 0.0) {
  const BBox grown{bbox.xmin - margin_px, bbox.ymin - margin_px, bbox.xmax + margin_px,
                   bbox.ymax + margin_px};
  Mask keep(points.size(), true);
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto px = project_point(frame, points[i]);
    if (px && !bbox_contains(grown, *px)) keep[i] = false;
  }
  return keep;
}

}  // namespace sqmap
