#pragma once

// Object mapping pipeline. The front stage (association, outlier removal,
// pose update) runs in frame order and is the only writer of landmark state.
// The back stage (shape refits, duplicate detection) works on snapshots taken
// at the end of a frame; its results are applied at the start of the next
// frame, so threaded and inline execution give identical maps.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <future>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sqmap/association.hpp"
#include "sqmap/camera.hpp"
#include "sqmap/geometry.hpp"
#include "sqmap/landmark.hpp"
#include "sqmap/outlier_filter.hpp"
#include "sqmap/pose_estimation.hpp"
#include "sqmap/shape_fit.hpp"

namespace sqmap {

enum class YawPreference { kAuto, kLines, kPca };

struct PipelineConfig {
  EifConfig eif;
  FitConfig fit;
  AssocConfig assoc;
  int refit_interval = 5;
  int merge_interval = 20;
  int min_points_for_fit = 20;
  int min_points_new_landmark = 5;
  /// Tolerance for detector box noise in the reprojection check.
  double reprojection_margin_px = 5.0;
  /// Run the back stage on a worker thread.
  bool async_back_stage = true;
  /// Per-class yaw method; classes not listed use lines with PCA fallback.
  std::map<std::string, YawPreference> yaw_method;

  void validate() const {
    eif.validate();
    fit.validate();
    assoc.validate();
    if (refit_interval < 1 || merge_interval < 1)
      throw DataError("pipeline.refit_interval and merge_interval must be >= 1");
    if (min_points_for_fit < static_cast<int>(kMinFitPoints))
      throw DataError("pipeline.min_points_for_fit must be >= 8");
    if (min_points_new_landmark < 1) throw DataError("pipeline.min_points_new_landmark must be >= 1");
    if (!(reprojection_margin_px >= 0.0)) throw DataError("pipeline.reprojection_margin_px must be >= 0");
  }
};

struct ObjectMap {
  std::vector<ObjectLandmark> landmarks;  // ascending id
  std::int64_t frame_count = 0;
  std::int64_t last_frame_id = -1;
  std::int64_t next_id = 0;

  ObjectLandmark* find(std::int64_t id) {
    auto it = std::lower_bound(landmarks.begin(), landmarks.end(), id,
                               [](const ObjectLandmark& l, std::int64_t v) { return l.id < v; });
    return (it != landmarks.end() && it->id == id) ? &*it : nullptr;
  }
  const ObjectLandmark* find(std::int64_t id) const {
    return const_cast<ObjectMap*>(this)->find(id);
  }
};

enum class AssocMethod { kInterframe, kIsolated, kCreated, kSkipped };

struct AssocRecord {
  std::size_t observation = 0;
  std::int64_t landmark = -1;
  AssocMethod method = AssocMethod::kSkipped;
};

struct FrameReport {
  std::int64_t frame_id = 0;
  std::vector<AssocRecord> associations;
  std::vector<std::int64_t> created;
  std::vector<std::pair<std::int64_t, std::int64_t>> merged;
  std::size_t reprojection_removed = 0;
  std::size_t eif_removed = 0;
  double front_stage_ms = 0.0;
};

class Mapper {
 public:
  explicit Mapper(PipelineConfig cfg = {}) : cfg_(std::move(cfg)) { cfg_.validate(); }

  Mapper(const Mapper&) = delete;
  Mapper& operator=(const Mapper&) = delete;
  ~Mapper() {
    if (pending_.valid()) pending_.wait();
  }

  const ObjectMap& map() const { return map_; }
  const PipelineConfig& config() const { return cfg_; }

  FrameReport process_frame(const CameraFrame& frame, const std::vector<Observation>& observations) {
    if (frame.frame_id() <= map_.last_frame_id)
      throw DataError("frame ids must increase: got " + std::to_string(frame.frame_id()) +
                      " after " + std::to_string(map_.last_frame_id));
    FrameReport report;
    report.frame_id = frame.frame_id();
    apply_back_stage(report);

    const auto t0 = std::chrono::steady_clock::now();
    std::vector<std::int64_t> taken;
    for (std::size_t i = 0; i < observations.size(); ++i) {
      const Observation& obs = observations[i];
      AssocRecord rec{i, -1, AssocMethod::kSkipped};
      if (obs.points_world.empty()) {
        report.associations.push_back(rec);
        continue;
      }
      const auto recent = recent_boxes(frame.frame_id());
      std::optional<std::int64_t> id =
          associate_interframe(obs, map_.landmarks, recent, cfg_.assoc, taken);
      rec.method = AssocMethod::kInterframe;
      if (!id) {
        id = isolated_candidate(obs, taken);
        rec.method = AssocMethod::kIsolated;
      }
      if (id) {
        update_landmark(*map_.find(*id), frame, obs, report);
      } else if (std::ssize(obs.points_world) >= cfg_.min_points_new_landmark) {
        id = create_landmark(frame, obs, &report);
        rec.method = AssocMethod::kCreated;
      } else {
        rec.method = AssocMethod::kSkipped;
      }
      if (id) {
        rec.landmark = *id;
        taken.push_back(*id);
      }
      report.associations.push_back(rec);
    }
    report.front_stage_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();

    map_.frame_count += 1;
    map_.last_frame_id = frame.frame_id();
    submit_back_stage(map_.frame_count % cfg_.merge_interval == 0);
    return report;
  }

  /// Creates a landmark from one observation without attempting association.
  std::int64_t create_landmark(const CameraFrame& frame, const Observation& obs,
                               FrameReport* report = nullptr) {
    ObjectLandmark lm;
    lm.id = map_.next_id++;
    lm.class_label = obs.class_label;
    map_.landmarks.push_back(std::move(lm));
    FrameReport scratch;
    FrameReport& rep = report ? *report : scratch;
    update_landmark(map_.landmarks.back(), frame, obs, rep);
    rep.created.push_back(map_.landmarks.back().id);
    return map_.landmarks.back().id;
  }

  /// Adds an observation to a given landmark, bypassing association.
  void associate_to(std::int64_t id, const CameraFrame& frame, const Observation& obs) {
    ObjectLandmark* lm = map_.find(id);
    if (!lm) throw DataError("no landmark with id " + std::to_string(id));
    FrameReport scratch;
    update_landmark(*lm, frame, obs, scratch);
  }

  /// Final filtering and refit of every landmark, then merge passes until no
  /// same-class pair passes the two-sample test.
  void finalize() {
    FrameReport scratch;
    apply_back_stage(scratch);
    for (auto& lm : map_.landmarks) {
      run_eif(lm, map_.last_frame_id + 1);
      refresh_pose(lm);
      refit_now(lm);
    }
    merge_until_stable(scratch);
  }

 private:
  struct RefitJob {
    std::int64_t id;
    PointList cloud;
    ObjectPose pose;
  };
  struct BackStageResult {
    std::vector<std::pair<std::int64_t, std::optional<Superquadric>>> refits;
    std::vector<std::pair<std::int64_t, std::int64_t>> merges;
  };

  std::map<std::int64_t, BBox> recent_boxes(std::int64_t frame_id) const {
    std::map<std::int64_t, BBox> out;
    for (const auto& lm : map_.landmarks) {
      if (lm.last_assoc_frame < 0 || frame_id - lm.last_assoc_frame > cfg_.assoc.interframe_window)
        continue;
      out.emplace(lm.id, lm.last_bbox);
    }
    return out;
  }

  std::optional<std::int64_t> isolated_candidate(const Observation& obs,
                                                 const std::vector<std::int64_t>& taken) const {
    return associate_isolated(obs.centroid(), obs.class_label, map_.landmarks, cfg_.assoc, taken);
  }

  void update_landmark(ObjectLandmark& lm, const CameraFrame& frame, const Observation& obs,
                       FrameReport& report) {
    for (std::size_t i = 0; i < obs.points_world.size(); ++i) {
      const PointId pid = i < obs.point_ids.size() ? obs.point_ids[i] : next_anonymous_id_++;
      lm.cloud[pid] = obs.points_world[i];
    }
    report.reprojection_removed += run_reprojection(lm, frame, obs.bbox);
    report.eif_removed += run_eif(lm, frame.frame_id());

    lm.centroid_history.add(obs.centroid());
    lm.last_assoc_frame = frame.frame_id();
    lm.last_bbox = obs.bbox;
    lm.n_observations += 1;
    lm.frames_since_refit += 1;

    if (lm.cloud.empty()) return;
    const Vec3 t = centroid_translation(lm.cloud_points());
    if (const auto yaw = estimate_yaw(lm, frame, obs, t))
      lm.yaw_history = update_yaw(lm.yaw_history, normalize_yaw_singularity(*yaw).yaw);
    lm.pose = ObjectPose(normalize_yaw_singularity(lm.yaw_history.yaw_running).yaw, t);
  }

  std::optional<double> estimate_yaw(const ObjectLandmark& lm, const CameraFrame& frame,
                                     const Observation& obs, const Vec3& t) const {
    YawPreference pref = YawPreference::kAuto;
    if (const auto it = cfg_.yaw_method.find(lm.class_label); it != cfg_.yaw_method.end())
      pref = it->second;
    if (pref != YawPreference::kPca && !obs.segments.empty()) {
      const YawEstimate e = estimate_yaw_lines(t, obs.segments, frame);
      if (!e.failed) return e.yaw;
    }
    if (pref == YawPreference::kLines) return std::nullopt;
    const YawEstimate e = estimate_yaw_pca(lm.cloud_points());
    if (!e.failed) return e.yaw;
    return std::nullopt;
  }

  std::size_t run_reprojection(ObjectLandmark& lm, const CameraFrame& frame, const BBox& bbox) {
    if (lm.cloud.empty()) return 0;
    const PointList pts = lm.cloud_points();
    Mask keep = reprojection_filter(pts, frame, bbox, cfg_.reprojection_margin_px);
    std::vector<double> outside(pts.size(), 0.0);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (keep[i]) continue;
      const Vec2 px = *project_point(frame, pts[i]);
      outside[i] = std::max({bbox.xmin - px.x(), px.x() - bbox.xmax, bbox.ymin - px.y(),
                             px.y() - bbox.ymax});
    }
    const std::size_t removed = cap_removals(keep, outside);
    erase_masked(lm, keep);
    return removed;
  }

  std::size_t run_eif(ObjectLandmark& lm, std::int64_t frame_id) {
    if (lm.cloud.size() < kMinPointsToFilter) return 0;
    EifConfig eif = cfg_.eif;
    eif.seed = derive_seed(cfg_.eif.seed, static_cast<std::uint64_t>(lm.id),
                           static_cast<std::uint64_t>(frame_id));
    const FilterResult r = filter_outliers(lm.cloud_points(), eif);
    erase_masked(lm, r.keep);
    return r.removed;
  }

  static void erase_masked(ObjectLandmark& lm, const Mask& keep) {
    std::size_t i = 0;
    for (auto it = lm.cloud.begin(); it != lm.cloud.end(); ++i) {
      if (!keep[i])
        it = lm.cloud.erase(it);
      else
        ++it;
    }
  }

  void refresh_pose(ObjectLandmark& lm) {
    if (lm.cloud.empty()) return;
    lm.pose = ObjectPose(normalize_yaw_singularity(lm.yaw_history.yaw_running).yaw,
                         centroid_translation(lm.cloud_points()));
  }

  static std::optional<Superquadric> fit_job(const RefitJob& job, const FitConfig& cfg) {
    try {
      return fit_landmark(job.cloud, job.pose, cfg);
    } catch (const DataError&) {
      return std::nullopt;
    } catch (const NumericalError&) {
      return std::nullopt;
    }
  }

  void refit_now(ObjectLandmark& lm) {
    if (std::ssize(lm.cloud) < cfg_.min_points_for_fit) return;
    if (auto sq = fit_job({lm.id, lm.cloud_points(), lm.pose}, cfg_.fit)) lm.model = *sq;
    lm.frames_since_refit = 0;
  }

  void submit_back_stage(bool detect_merges) {
    std::vector<RefitJob> jobs;
    for (auto& lm : map_.landmarks) {
      if (std::ssize(lm.cloud) < cfg_.min_points_for_fit) continue;
      if (lm.model && lm.frames_since_refit < cfg_.refit_interval) continue;
      jobs.push_back({lm.id, lm.cloud_points(), lm.pose});
      lm.frames_since_refit = 0;
    }
    std::vector<ObjectLandmark> snapshot;
    if (detect_merges) {
      snapshot.reserve(map_.landmarks.size());
      for (const auto& lm : map_.landmarks) {
        ObjectLandmark s;
        s.id = lm.id;
        s.class_label = lm.class_label;
        s.centroid_history = lm.centroid_history;
        snapshot.push_back(std::move(s));
      }
    }
    if (jobs.empty() && !detect_merges) return;

    auto work = [jobs = std::move(jobs), snapshot = std::move(snapshot), detect_merges,
                 fit = cfg_.fit, assoc = cfg_.assoc]() {
      BackStageResult r;
      for (const auto& job : jobs) r.refits.emplace_back(job.id, fit_job(job, fit));
      if (detect_merges) r.merges = find_merge_pairs(snapshot, assoc);
      return r;
    };
    if (cfg_.async_back_stage) {
      pending_ = std::async(std::launch::async, std::move(work));
    } else {
      std::promise<BackStageResult> p;
      p.set_value(work());
      pending_ = p.get_future();
    }
  }

  void apply_back_stage(FrameReport& report) {
    if (!pending_.valid()) return;
    BackStageResult r = pending_.get();
    for (auto& [id, sq] : r.refits)
      if (ObjectLandmark* lm = map_.find(id); lm && sq) lm->model = *sq;
    execute_merges(r.merges, report);
  }

  void execute_merges(const std::vector<std::pair<std::int64_t, std::int64_t>>& pairs,
                      FrameReport& report) {
    std::vector<std::int64_t> touched;
    for (const auto& [keep_id, drop_id] : pairs) {
      ObjectLandmark* keep = map_.find(keep_id);
      ObjectLandmark* drop = map_.find(drop_id);
      if (!keep || !drop) continue;
      for (const auto& [pid, p] : drop->cloud) keep->cloud.emplace(pid, p);
      keep->centroid_history.append(drop->centroid_history);
      keep->yaw_history = merge_yaw_history(keep->yaw_history, drop->yaw_history);
      keep->n_observations += drop->n_observations;
      if (drop->last_assoc_frame > keep->last_assoc_frame) {
        keep->last_assoc_frame = drop->last_assoc_frame;
        keep->last_bbox = drop->last_bbox;
      }
      std::erase_if(map_.landmarks, [&](const ObjectLandmark& l) { return l.id == drop_id; });
      report.merged.emplace_back(keep_id, drop_id);
      touched.push_back(keep_id);
    }
    std::sort(touched.begin(), touched.end());
    touched.erase(std::unique(touched.begin(), touched.end()), touched.end());
    for (std::int64_t id : touched) {
      ObjectLandmark& lm = *map_.find(id);
      run_eif(lm, map_.last_frame_id + 1);
      refresh_pose(lm);
      refit_now(lm);
    }
  }

  void merge_until_stable(FrameReport& report) {
    for (;;) {
      const auto pairs = find_merge_pairs(map_.landmarks, cfg_.assoc);
      if (pairs.empty()) return;
      execute_merges(pairs, report);
    }
  }

  PipelineConfig cfg_;
  ObjectMap map_;
  std::future<BackStageResult> pending_;
  PointId next_anonymous_id_ = PointId{1} << 62;
};

}  // namespace sqmap
