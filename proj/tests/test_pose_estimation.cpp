#include <gtest/gtest.h>

#include "test_support.hpp"

using namespace sqmap;

namespace {

TEST(CentroidTranslation, Basics) {
  EXPECT_TRUE(centroid_translation({Vec3(0, 0, 0), Vec3(2, 0, 0)}).isApprox(Vec3(1, 0, 0)));
  EXPECT_TRUE(centroid_translation({Vec3(3, -1, 2)}).isApprox(Vec3(3, -1, 2)));
  EXPECT_THROW(centroid_translation({}), DataError);
}

TEST(CentroidTranslation, StandardErrorBound) {
  const Vec3 mu(1.0, -2.0, 0.5);
  const double sigma = 0.3;
  int inside = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(seed);
    PointList pts;
    for (int i = 0; i < 1000; ++i) pts.push_back(mu + gaussian_vec3(rng, sigma));
    const Vec3 c = centroid_translation(pts);
    inside += ((c - mu).cwiseAbs().array() <= 4.0 * sigma / std::sqrt(1000.0)).all();
  }
  EXPECT_GE(inside, 99);
}

TEST(AxisSegments, IdentityAndQuarterTurn) {
  const auto id = axis_segments(0.0, Vec3::Zero());
  EXPECT_TRUE(id[0].b.isApprox(Vec3::UnitX()));
  EXPECT_TRUE(id[1].b.isApprox(Vec3::UnitY()));
  EXPECT_TRUE(id[2].b.isApprox(Vec3::UnitZ()));
  const auto q = axis_segments(kPi / 2.0, Vec3(1, 1, 1));
  EXPECT_TRUE((q[0].b - q[0].a).isApprox(Vec3::UnitY(), 1e-12));
}

Segment2D seg_at(double deg, const Vec2& c = Vec2(100, 100), double len = 50.0) {
  const Vec2 d(std::cos(deg2rad(deg)), std::sin(deg2rad(deg)));
  return {c - 0.5 * len * d, c + 0.5 * len * d};
}

TEST(MatchSegments, ExactCopiesMatchWithZeroError) {
  const std::array<std::optional<Segment2D>, 3> proj{seg_at(0), seg_at(60), seg_at(120)};
  const auto m = match_segments(proj, {*proj[0], *proj[1], *proj[2]});
  ASSERT_EQ(m.size(), 3u);
  for (int a = 0; a < 3; ++a) {
    EXPECT_EQ(m[a].axis, a);
    EXPECT_EQ(m[a].detected, static_cast<std::size_t>(a));
    EXPECT_NEAR(m[a].error, 0.0, 1e-12);
  }
}

TEST(MatchSegments, TenDegreesOffMatchesNothing) {
  const std::array<std::optional<Segment2D>, 3> proj{seg_at(0), seg_at(60), seg_at(120)};
  EXPECT_TRUE(match_segments(proj, {seg_at(10), seg_at(70), seg_at(130)}).empty());
}

TEST(MatchSegments, SmallerErrorAxisWins) {
  const std::array<std::optional<Segment2D>, 3> proj{seg_at(0), seg_at(3), std::nullopt};
  const auto m = match_segments(proj, {seg_at(2.5)});
  ASSERT_EQ(m.size(), 1u);
  EXPECT_EQ(m[0].axis, 1);
}

class LineYawTest : public ::testing::Test {
 protected:
  static Superquadric cuboid(double yaw_deg) {
    return test::make_sq(0.3, 0.2, 0.25, 0.1, 0.1, deg2rad(yaw_deg), Vec3(0.2, 0.1, 0.25));
  }
  CameraFrame frame = test::frame_at(Vec3(2.4, -1.6, 1.6), Vec3(0.2, 0.1, 0.25));
};

TEST_F(LineYawTest, NoiselessRecoversYaw) {
  Rng rng(0);
  const Superquadric sq = cuboid(20.0);
  const auto segs = test::cuboid_segments(sq, frame, 0.0, rng);
  const YawEstimate e = estimate_yaw_lines(sq.pose.translation(), segs, frame);
  ASSERT_FALSE(e.failed);
  EXPECT_EQ(e.method, YawMethod::kLineAlignment);
  EXPECT_LE(std::abs(rad2deg(test::yaw_error(e.yaw, sq.pose.yaw()))), 0.5);
}

TEST_F(LineYawTest, SingleStartRuleRecoversYaw) {
  Rng rng(0);
  const Superquadric sq = cuboid(20.0);
  LineYawOptions opt;
  opt.refine_all_samples = false;
  const YawEstimate e = estimate_yaw_lines(sq.pose.translation(), test::cuboid_segments(sq, frame, 0.0, rng), frame, opt);
  ASSERT_FALSE(e.failed);
  EXPECT_EQ(e.n_matches, 3);
  EXPECT_LE(std::abs(rad2deg(test::yaw_error(e.yaw, sq.pose.yaw()))), 0.5);
}

// An axis pointing almost at the camera: its image angle swings fast with yaw,
// so the nearest raw sample can lock onto the wrong edge.
TEST(LineYaw, FaceOnViewNoiseless) {
  const Superquadric sq = test::make_sq(0.3, 0.2, 0.25, 0.1, 0.1, deg2rad(6.2), Vec3(0, 0, 0.3));
  const CameraFrame f = test::frame_at(Vec3(3.0 * std::cos(deg2rad(-89.2)), 3.0 * std::sin(deg2rad(-89.2)), 1.8),
                                       sq.pose.translation());
  Rng rng(0);
  const YawEstimate e = estimate_yaw_lines(sq.pose.translation(), test::cuboid_segments(sq, f, 0.0, rng), f);
  ASSERT_FALSE(e.failed);
  EXPECT_LE(std::abs(rad2deg(test::yaw_error(e.yaw, sq.pose.yaw()))), 0.5);
}

TEST_F(LineYawTest, TwoDegreeNoise) {
  Rng rng(11);
  int ok = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const Superquadric sq = cuboid(20.0);
    const auto segs = test::cuboid_segments(sq, frame, 2.0, rng);
    const YawEstimate e = estimate_yaw_lines(sq.pose.translation(), segs, frame);
    ok += !e.failed && std::abs(rad2deg(test::yaw_error(e.yaw, sq.pose.yaw()))) <= 3.0;
  }
  EXPECT_GE(ok, 90);
}

TEST(LineYaw, FailsWithoutMatches) {
  // Level camera: every sampled axis projects horizontal or vertical.
  const CameraFrame frame = test::frame_at(Vec3(3, 0, 0), Vec3::Zero());
  EXPECT_TRUE(estimate_yaw_lines(Vec3::Zero(), {}, frame).failed);
  const Vec2 c(frame.intrinsics().cx, frame.intrinsics().cy);
  EXPECT_TRUE(estimate_yaw_lines(Vec3::Zero(), {seg_at(45, c), seg_at(135, c)}, frame).failed);
}

PointList line_cloud(double yaw, std::uint64_t seed) {
  Rng rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::normal_distribution<double> g(0.0, 0.02);
  PointList pts;
  for (int i = 0; i < 200; ++i) pts.push_back(rot_z(yaw) * Vec3(u(rng), g(rng), g(rng)));
  return pts;
}

TEST(PcaYaw, PrincipalDirection) {
  const YawEstimate e = estimate_yaw_pca(line_cloud(0.0, 1));
  ASSERT_FALSE(e.failed);
  EXPECT_EQ(e.method, YawMethod::kPca);
  EXPECT_NEAR(e.yaw, 0.0, deg2rad(1.0));
}

TEST(PcaYaw, RotationEquivariance) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const YawEstimate e = estimate_yaw_pca(line_cloud(deg2rad(30.0), seed));
    ASSERT_FALSE(e.failed);
    EXPECT_NEAR(rad2deg(e.yaw), 30.0, 2.0);
  }
}

TEST(PcaYaw, IsotropicFails) {
  const PointList pts{Vec3(1, 0, 0), Vec3(-1, 0, 0), Vec3(0, 1, 0), Vec3(0, -1, 0)};
  EXPECT_TRUE(estimate_yaw_pca(pts).failed);
}

TEST(NormalizeYaw, QuarterTurns) {
  const auto a = normalize_yaw_singularity(deg2rad(30.0));
  EXPECT_NEAR(rad2deg(a.yaw), 30.0, 1e-12);
  EXPECT_FALSE(a.swap_xy);
  const auto b = normalize_yaw_singularity(deg2rad(120.0));
  EXPECT_NEAR(rad2deg(b.yaw), 30.0, 1e-12);
  EXPECT_TRUE(b.swap_xy);
  const auto c = normalize_yaw_singularity(deg2rad(-170.0));
  EXPECT_NEAR(rad2deg(c.yaw), 10.0, 1e-12);
  EXPECT_FALSE(c.swap_xy);
}

TEST(NormalizeYaw, RangeProperty) {
  Rng rng(2);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  for (int i = 0; i < 1000; ++i) {
    const auto n = normalize_yaw_singularity(u(rng));
    EXPECT_GT(n.yaw, -kPi / 4.0);
    EXPECT_LE(n.yaw, kPi / 4.0 + 1e-15);
  }
  EXPECT_NEAR(normalize_yaw_singularity(kPi / 4.0).yaw, kPi / 4.0, 1e-15);
}

TEST(UpdateYaw, RunningMean) {
  YawHistory h;
  h = update_yaw(h, 0.7);
  EXPECT_EQ(h.n, 1);
  EXPECT_DOUBLE_EQ(h.yaw_running, 0.7);

  YawHistory g{1, deg2rad(10.0)};
  g = update_yaw(g, deg2rad(20.0));
  EXPECT_NEAR(rad2deg(g.yaw_running), 15.0, 1e-12);
}

TEST(UpdateYaw, UnwrapsAcrossQuarterTurn) {
  const YawHistory h = update_yaw({1, deg2rad(89.0)}, deg2rad(-89.0));
  const YawHistory ref = update_yaw({1, deg2rad(89.0)}, deg2rad(91.0));
  EXPECT_NEAR(rad2deg(h.yaw_running), 90.0, 1e-9);
  EXPECT_NEAR(h.yaw_running, ref.yaw_running, 1e-12);
}

TEST(MergeYawHistory, EqualsSequentialAveraging) {
  YawHistory a;
  YawHistory b;
  YawHistory all;
  for (double y : {0.1, 0.12, 0.08}) {
    a = update_yaw(a, y);
    all = update_yaw(all, y);
  }
  for (double y : {0.2, 0.18}) {
    b = update_yaw(b, y);
    all = update_yaw(all, y);
  }
  const YawHistory m = merge_yaw_history(a, b);
  EXPECT_EQ(m.n, 5);
  EXPECT_NEAR(m.yaw_running, all.yaw_running, 1e-12);
}

}  // namespace
