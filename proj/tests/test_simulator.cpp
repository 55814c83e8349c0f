#include <gtest/gtest.h>

#include <set>

#include "test_support.hpp"

using namespace sqmap;
using sqmap::test::make_sq;

namespace {

SceneSpec cube_scene() {
  SceneSpec s;
  s.seed = 3;
  s.objects.push_back({"box", make_sq(0.3, 0.3, 0.3, 0.1, 0.1, 0.2, Vec3(0, 0, 0.3))});
  return s;
}

TEST(Trajectory, OrbitOfFourLooksAtCentroid) {
  const SceneSpec scene = cube_scene();
  TrajectorySpec spec;
  spec.n_frames = 4;
  const auto frames = generate_trajectory(spec, scene);
  ASSERT_EQ(frames.size(), 4u);
  const Vec3 c = scene.centroid();
  for (std::size_t i = 0; i < frames.size(); ++i) {
    EXPECT_EQ(frames[i].frame_id(), static_cast<std::int64_t>(i));
    const Vec2 px = *project_point(frames[i], c);
    EXPECT_LT((px - Vec2(spec.intrinsics.cx, spec.intrinsics.cy)).norm(), 10.0);
    const Vec3 d0 = frames[i].center() - c;
    const Vec3 d1 = frames[(i + 1) % 4].center() - c;
    EXPECT_NEAR(d0.head<2>().dot(d1.head<2>()), 0.0, 1e-9);
    EXPECT_NEAR(d0.z(), spec.height, 1e-12);
  }
}

TEST(Trajectory, SingleFrameAndDeterminism) {
  const SceneSpec scene = cube_scene();
  TrajectorySpec spec;
  spec.n_frames = 1;
  EXPECT_EQ(generate_trajectory(spec, scene).size(), 1u);
  spec.kind = TrajectoryKind::kLinear;
  spec.n_frames = 7;
  const auto a = generate_trajectory(spec, scene);
  const auto b = generate_trajectory(spec, scene);
  ASSERT_EQ(a.size(), 7u);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].rotation(), b[i].rotation());
    EXPECT_EQ(a[i].center(), b[i].center());
  }
  EXPECT_TRUE(a.front().center().isApprox(spec.start));
  EXPECT_TRUE(a.back().center().isApprox(spec.end));
}

TEST(Trajectory, Validation) {
  const SceneSpec scene = cube_scene();
  TrajectorySpec spec;
  spec.kind = TrajectoryKind::kWaypoints;
  EXPECT_THROW(generate_trajectory(spec, scene), DataError);
  spec.waypoints.push_back(scene.centroid());
  EXPECT_THROW(generate_trajectory(spec, scene), DataError);
}

TEST(Simulator, NoiselessRoundTrip) {
  const SceneSpec scene = cube_scene();
  NoiseSpec noise;
  noise.point_sigma = noise.bbox_sigma = noise.segment_angle_sigma = 0.0;
  noise.outlier_fraction = noise.detection_dropout = 0.0;
  const CameraFrame f = test::frame_at(Vec3(2, 0.5, 1.2), scene.centroid());
  const SimulatedFrame sf = observe_frame(scene, f, noise);
  ASSERT_EQ(sf.observations.size(), 1u);
  const Observation& obs = sf.observations[0];
  ASSERT_GE(obs.points_world.size(), 3u);
  BBox tight{1e9, 1e9, -1e9, -1e9};
  const Superquadric& sq = scene.objects[0].sq;
  for (const auto& p : obs.points_world) {
    EXPECT_NEAR(inside_outside(sq, world_to_object(sq.pose, p)), 1.0, 1e-9);
    const Vec2 px = *project_point(f, p);
    tight = {std::min(tight.xmin, px.x()), std::min(tight.ymin, px.y()), std::max(tight.xmax, px.x()),
             std::max(tight.ymax, px.y())};
  }
  EXPECT_EQ(obs.bbox, tight);
  EXPECT_FALSE(obs.segments.empty());
}

TEST(Simulator, OutliersOutsideBody) {
  const SceneSpec scene = cube_scene();
  NoiseSpec noise;
  noise.outlier_fraction = 0.1;
  noise.detection_dropout = 0.0;
  const Simulator sim(scene, noise);
  const CameraFrame f = test::frame_at(Vec3(2, 0.5, 1.2), scene.centroid());
  const SimulatedFrame sf = sim.observe(f);
  ASSERT_EQ(sf.observations.size(), 1u);
  const Observation& obs = sf.observations[0];
  const Mask& out = sf.truth[0].is_outlier;
  const auto n_out = static_cast<std::size_t>(std::count(out.begin(), out.end(), true));
  const std::size_t n_in = obs.points_world.size() - n_out;
  EXPECT_EQ(n_out, static_cast<std::size_t>(std::lround(0.1 * static_cast<double>(n_in))));
  const Superquadric& sq = scene.objects[0].sq;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (!out[i]) continue;
    EXPECT_GT(inside_outside(sq, world_to_object(sq.pose, obs.points_world[i])), 1.0);
    EXPECT_NE(obs.point_ids[i] & kOutlierIdBit, 0u);
  }
}

TEST(Simulator, FullDropoutGivesNothing) {
  const SceneSpec scene = cube_scene();
  NoiseSpec noise;
  noise.detection_dropout = 1.0;
  const CameraFrame f = test::frame_at(Vec3(2, 0.5, 1.2), scene.centroid());
  EXPECT_TRUE(observe_frame(scene, f, noise).observations.empty());
}

TEST(Simulator, MapPointIdsPersistAcrossFrames) {
  const SceneSpec scene = cube_scene();
  NoiseSpec noise;
  noise.outlier_fraction = 0.0;
  noise.detection_dropout = 0.0;
  const Simulator sim(scene, noise);
  TrajectorySpec spec;
  spec.n_frames = 40;
  const auto frames = generate_trajectory(spec, scene);
  const Observation a = sim.observe(frames[0]).observations.at(0);
  const Observation b = sim.observe(frames[1]).observations.at(0);
  const std::set<PointId> ids(a.point_ids.begin(), a.point_ids.end());
  std::size_t shared = 0;
  for (std::size_t i = 0; i < b.point_ids.size(); ++i) {
    if (!ids.count(b.point_ids[i])) continue;
    ++shared;
    const auto j = std::find(a.point_ids.begin(), a.point_ids.end(), b.point_ids[i]) - a.point_ids.begin();
    EXPECT_EQ(a.points_world[static_cast<std::size_t>(j)], b.points_world[i]);
  }
  EXPECT_GT(shared, 10u);
}

TEST(Simulator, FramesIndependentOfOrder) {
  const SceneSpec scene = cube_scene();
  const Simulator sim(scene, NoiseSpec{});
  TrajectorySpec spec;
  spec.n_frames = 10;
  const auto frames = generate_trajectory(spec, scene);
  const SimulatedFrame late = sim.observe(frames[7]);
  sim.observe(frames[2]);
  const SimulatedFrame again = sim.observe(frames[7]);
  ASSERT_EQ(late.observations.size(), again.observations.size());
  for (std::size_t i = 0; i < late.observations.size(); ++i) {
    EXPECT_EQ(late.observations[i].point_ids, again.observations[i].point_ids);
    EXPECT_EQ(late.observations[i].bbox, again.observations[i].bbox);
  }
}

TEST(Scenario, EmptySceneGivesEmptyResult) {
  const ScenarioResult r = run_scenario(SceneSpec{}, TrajectorySpec{}, NoiseSpec{}, PipelineConfig{},
                                        EvalSpec{10000, 0});
  EXPECT_TRUE(r.map.landmarks.empty());
  EXPECT_TRUE(r.report.landmarks.empty());
  EXPECT_EQ(r.report.n_truth, 0u);
}

TEST(Scenario, SceneValidation) {
  SceneSpec s = cube_scene();
  s.objects[0].sq.pose = ObjectPose(0.0, Vec3(100, 0, 0));
  EXPECT_THROW(s.validate(), DataError);
  NoiseSpec n;
  n.detection_dropout = 1.5;
  EXPECT_THROW(n.validate(), DataError);
}

}  // namespace
