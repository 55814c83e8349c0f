#include <gtest/gtest.h>

#include "test_support.hpp"

using namespace sqmap;
using sqmap::test::make_sq;

namespace {

SceneSpec two_object_scene() {
  SceneSpec s;
  s.seed = 5;
  s.objects.push_back({"box", make_sq(0.2, 0.2, 0.2, 0.1, 0.1, 0.3, Vec3(0.6, 0.4, 0.2))});
  s.objects.push_back({"ball", make_sq(0.25, 0.2, 0.2, 1.0, 1.0, 0.0, Vec3(-0.6, -0.4, 0.2))});
  return s;
}

TrajectorySpec orbit(int n) {
  TrajectorySpec t;
  t.n_frames = n;
  return t;
}

TEST(Mapper, ColdStartCreatesPendingLandmark) {
  const SceneSpec scene = two_object_scene();
  const Simulator sim(scene, NoiseSpec{});
  const auto frames = generate_trajectory(orbit(10), scene);
  SimulatedFrame sf = sim.observe(frames[0]);
  sf.observations.resize(1);
  Mapper m;
  const FrameReport r = m.process_frame(frames[0], sf.observations);
  ASSERT_EQ(m.map().landmarks.size(), 1u);
  EXPECT_EQ(r.created, std::vector<std::int64_t>{0});
  EXPECT_FALSE(m.map().landmarks[0].model);
  EXPECT_EQ(m.map().landmarks[0].centroid_history.size(), 1u);
}

TEST(Mapper, RejectsOutOfOrderFrames) {
  const SceneSpec scene = two_object_scene();
  const auto frames = generate_trajectory(orbit(10), scene);
  Mapper m;
  m.process_frame(frames[3], {});
  EXPECT_THROW(m.process_frame(frames[3], {}), DataError);
  EXPECT_THROW(m.process_frame(frames[1], {}), DataError);
}

TEST(Mapper, CloudOnlyShrinksUnderFiltering) {
  const SceneSpec scene = two_object_scene();
  const Simulator sim(scene, NoiseSpec{});
  const auto frames = generate_trajectory(orbit(20), scene);
  Mapper m;
  for (const auto& f : frames) {
    const SimulatedFrame sf = sim.observe(f);
    std::map<std::int64_t, std::size_t> before;
    for (const auto& lm : m.map().landmarks) before[lm.id] = lm.cloud.size();
    const FrameReport r = m.process_frame(f, sf.observations);
    for (const auto& rec : r.associations) {
      if (rec.landmark < 0 || !before.count(rec.landmark)) continue;
      const auto& obs = sf.observations[rec.observation];
      EXPECT_LE(m.map().find(rec.landmark)->cloud.size(),
                before[rec.landmark] + obs.points_world.size());
    }
  }
}

TEST(Mapper, ShortSequenceFindsBothObjects) {
  const SceneSpec scene = two_object_scene();
  PipelineConfig cfg;
  cfg.async_back_stage = false;
  const ScenarioResult r = run_scenario(scene, orbit(60), NoiseSpec{}, cfg, EvalSpec{50000, 3});
  EXPECT_EQ(r.map.landmarks.size(), 2u);
  EXPECT_EQ(r.report.unmatched_truth.size(), 0u);
  for (const auto& lm : r.map.landmarks) {
    ASSERT_TRUE(lm.model);
    EXPECT_EQ(static_cast<std::size_t>(lm.n_observations), lm.centroid_history.size());
  }
}

TEST(Mapper, AsyncAndInlineBackStageAgree) {
  const SceneSpec scene = two_object_scene();
  PipelineConfig a;
  a.async_back_stage = true;
  PipelineConfig b = a;
  b.async_back_stage = false;
  const ScenarioResult ra = run_scenario(scene, orbit(40), NoiseSpec{}, a, EvalSpec{20000, 1});
  const ScenarioResult rb = run_scenario(scene, orbit(40), NoiseSpec{}, b, EvalSpec{20000, 1});
  EXPECT_EQ(map_to_json(ra.map).dump(), map_to_json(rb.map).dump());
  EXPECT_EQ(evaluation_csv(ra.report), evaluation_csv(rb.report));
}

// Association is switched off for 50 frames: every detection in that window
// feeds a second landmark per object. The merge passes must fold the
// duplicates back.
TEST(Mapper, DuplicateInjectionIsMerged) {
  const SceneSpec scene = two_object_scene();
  const Simulator sim(scene, NoiseSpec{});
  const auto frames = generate_trajectory(orbit(120), scene);
  Mapper m;
  std::map<std::string, std::int64_t> duplicate;
  std::size_t peak = 0;
  for (const auto& f : frames) {
    const SimulatedFrame sf = sim.observe(f);
    const bool injecting = f.frame_id() >= 30 && f.frame_id() < 80;
    if (!injecting) {
      m.process_frame(f, sf.observations);
      continue;
    }
    for (const auto& obs : sf.observations) {
      const auto it = duplicate.find(obs.class_label);
      if (it == duplicate.end())
        duplicate[obs.class_label] = m.create_landmark(f, obs);
      else
        m.associate_to(it->second, f, obs);
    }
    m.process_frame(f, {});
    peak = std::max(peak, m.map().landmarks.size());
  }
  EXPECT_GE(peak, 4u);
  m.finalize();
  EXPECT_EQ(m.map().landmarks.size(), 2u);
  EXPECT_TRUE(find_merge_pairs(m.map().landmarks, m.config().assoc).empty());
}

TEST(Mapper, FinalizeFitsPendingLandmark) {
  const Superquadric truth = make_sq(0.3, 0.3, 0.3, 1.0, 1.0, 0.0, Vec3(0, 0, 0.3));
  const CameraFrame f = test::frame_at(Vec3(2, 0, 1), truth.pose.translation());
  Rng rng(4);
  Observation obs;
  obs.class_label = "ball";
  obs.bbox = BBox{0, 0, 640, 480};
  for (const auto& p : test::noisy_surface(truth, 50, 0.0, rng))
    obs.points_world.push_back(object_to_world(truth.pose, p));
  PipelineConfig cfg;
  cfg.min_points_for_fit = 20;
  cfg.refit_interval = 1000;
  Mapper m(cfg);
  m.create_landmark(f, obs);
  ASSERT_FALSE(m.map().landmarks[0].model);
  m.finalize();
  EXPECT_TRUE(m.map().landmarks[0].model);
}

TEST(Mapper, FinalizeOnConvergedMapKeepsCount) {
  const SceneSpec scene = two_object_scene();
  PipelineConfig cfg;
  cfg.async_back_stage = false;
  const Simulator sim(scene, NoiseSpec{});
  Mapper m(cfg);
  for (const auto& f : generate_trajectory(orbit(40), scene)) m.process_frame(f, sim.observe(f).observations);
  m.finalize();
  const std::size_t n = m.map().landmarks.size();
  m.finalize();
  EXPECT_EQ(m.map().landmarks.size(), n);
}

TEST(PipelineConfigTest, Validation) {
  PipelineConfig cfg;
  cfg.min_points_for_fit = 7;
  EXPECT_THROW(Mapper{cfg}, DataError);
  cfg = {};
  cfg.refit_interval = 0;
  EXPECT_THROW(Mapper{cfg}, DataError);
}

TEST(Evaluate, MapEqualToTruth) {
  const SceneSpec scene = two_object_scene();
  std::vector<EvalModel> models;
  for (std::size_t i = 0; i < scene.objects.size(); ++i)
    models.push_back({static_cast<std::int64_t>(i), scene.objects[i].sq});
  const EvalReport r = evaluate(models, scene.objects, 100000, 2);
  EXPECT_EQ(r.n_landmarks, r.n_truth);
  for (const auto& lm : r.landmarks) {
    ASSERT_TRUE(lm.truth_index);
    EXPECT_EQ(*lm.truth_index, static_cast<std::size_t>(lm.landmark_id));
    EXPECT_NEAR(lm.iou, 1.0, 0.01);
  }
}

TEST(Evaluate, EmptyMap) {
  const SceneSpec scene = two_object_scene();
  const EvalReport r = evaluate(ObjectMap{}, scene, 10000, 0);
  EXPECT_EQ(r.mean_iou, 0.0);
  EXPECT_EQ(r.unmatched_truth, (std::vector<std::size_t>{0, 1}));
}

TEST(Evaluate, InflatedTruthMatchesVoxelOracle) {
  const SceneSpec scene = two_object_scene();
  std::vector<EvalModel> models;
  for (std::size_t i = 0; i < scene.objects.size(); ++i) {
    Superquadric sq = scene.objects[i].sq;
    sq.size = SizeParams(sq.size.vec() * 1.05);
    models.push_back({static_cast<std::int64_t>(i), sq});
  }
  const EvalReport r = evaluate(models, scene.objects, 400000, 7);
  for (std::size_t i = 0; i < models.size(); ++i) {
    const double voxel = oracle::voxel_iou(test::to_body(models[i].sq), test::to_body(scene.objects[i].sq));
    EXPECT_NEAR(r.truth_iou[i], voxel, 0.01);
    // Nested scaled copies: the ratio of volumes.
    EXPECT_NEAR(voxel, 1.0 / (1.05 * 1.05 * 1.05), 0.02);
  }
}

}  // namespace
