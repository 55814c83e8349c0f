#pragma once

// Map quality against ground truth: greedy one-to-one matching by 3D IoU.

#include <algorithm>
#include <optional>
#include <vector>

#include "sqmap/geometry.hpp"
#include "sqmap/mapper.hpp"
#include "sqmap/scene.hpp"

namespace sqmap {

struct LandmarkEval {
  std::int64_t landmark_id = 0;
  std::optional<std::size_t> truth_index;
  double iou = 0.0;
};

struct EvalReport {
  std::vector<LandmarkEval> landmarks;  // one row per fitted landmark, ascending id
  std::vector<double> truth_iou;        // per truth object; 0 when unmatched
  double mean_iou = 0.0;                // over truth objects
  std::size_t n_landmarks = 0;          // landmarks with a model
  std::size_t n_truth = 0;
  std::vector<std::int64_t> unmatched_landmarks;
  std::vector<std::size_t> unmatched_truth;
};

struct EvalModel {
  std::int64_t id = 0;
  Superquadric sq;
};

inline std::vector<EvalModel> fitted_models(const ObjectMap& map) {
  std::vector<EvalModel> out;
  for (const auto& lm : map.landmarks)
    if (lm.model) out.push_back({lm.id, *lm.model});
  return out;
}

/// Pairs are taken in order of descending IoU; each landmark and each truth
/// object is used at most once, and zero-overlap pairs are never matched.
/// Every pair uses its own seed, so results do not depend on evaluation order.
inline EvalReport evaluate(const std::vector<EvalModel>& models,
                           const std::vector<SceneObject>& truth, std::int64_t n_samples,
                           std::uint64_t seed) {
  EvalReport r;
  r.n_landmarks = models.size();
  r.n_truth = truth.size();
  r.truth_iou.assign(truth.size(), 0.0);

  struct Pair {
    double iou;
    std::size_t m;
    std::size_t t;
  };
  std::vector<Pair> pairs;
  for (std::size_t m = 0; m < models.size(); ++m) {
    for (std::size_t t = 0; t < truth.size(); ++t) {
      const double iou = iou_3d(models[m].sq, truth[t].sq, n_samples,
                                derive_seed(seed, static_cast<std::uint64_t>(models[m].id), t));
      if (iou > 0.0) pairs.push_back({iou, m, t});
    }
  }
  std::stable_sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
    if (a.iou != b.iou) return a.iou > b.iou;
    if (a.m != b.m) return a.m < b.m;
    return a.t < b.t;
  });

  std::vector<std::optional<std::size_t>> match(models.size());
  std::vector<double> iou_of(models.size(), 0.0);
  std::vector<bool> truth_used(truth.size(), false);
  for (const auto& p : pairs) {
    if (match[p.m] || truth_used[p.t]) continue;
    match[p.m] = p.t;
    iou_of[p.m] = p.iou;
    truth_used[p.t] = true;
    r.truth_iou[p.t] = p.iou;
  }
  for (std::size_t m = 0; m < models.size(); ++m) {
    r.landmarks.push_back({models[m].id, match[m], iou_of[m]});
    if (!match[m]) r.unmatched_landmarks.push_back(models[m].id);
  }
  for (std::size_t t = 0; t < truth.size(); ++t)
    if (!truth_used[t]) r.unmatched_truth.push_back(t);
  double sum = 0.0;
  for (double v : r.truth_iou) sum += v;
  r.mean_iou = truth.empty() ? 0.0 : sum / static_cast<double>(truth.size());
  return r;
}

inline EvalReport evaluate(const ObjectMap& map, const SceneSpec& truth, std::int64_t n_samples,
                           std::uint64_t seed) {
  return evaluate(fitted_models(map), truth.objects, n_samples, seed);
}

}  // namespace sqmap
