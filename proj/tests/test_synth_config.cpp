#include <gtest/gtest.h>

#include <map>
#include <set>

#include "shaftdock/config.hpp"
#include "shaftdock/helix.hpp"
#include "shaftdock/synth.hpp"
#include "support.hpp"

using namespace shaftdock;

TEST(Synth, Deterministic) {
  SceneSpec spec;
  spec.outlier_fraction = 0.05;
  const auto a = gen_flange_pair(spec), b = gen_flange_pair(spec);
  EXPECT_EQ(a.a.cloud.points(), b.a.cloud.points());
  EXPECT_EQ(a.b.cloud.points(), b.b.cloud.points());
  EXPECT_EQ(a.a.labels, b.a.labels);
  spec.seed = 2;
  EXPECT_NE(gen_flange_pair(spec).a.cloud.points(), a.a.cloud.points());
}

TEST(Synth, OutlierCount) {
  LabeledCloud in;
  std::vector<Point3d> pts;
  for (int i = 0; i < 1000; ++i) pts.emplace_back(i, i % 7, i % 13);
  in.cloud = PointCloudd::from_points(pts);
  in.labels.assign(1000, PointLabel{LabelKind::FaceA, -1});
  const auto out = inject_outliers(in, 0.2, 1.2, 3);
  EXPECT_EQ(out.cloud.size(), 1250);
  EXPECT_EQ(out.indices_of(LabelKind::Outlier).size(), 250u);
}

TEST(Synth, HelixPointsLieOnCurve) {
  SceneSpec spec;
  spec.noise_sigma = 0;
  spec.helix.core_points_per_turn = 0;
  const auto h = gen_helix(spec);
  ASSERT_GT(h.cloud.size(), 0);
  const HelixParams p{spec.helix.radius, spec.helix.pitch, spec.helix.phase};
  const AxisFrame frame{spec.helix.origin, Eigen::Matrix3d::Identity()};  // the generator frame for a z axis
  for (Eigen::Index i = 0; i < h.cloud.size(); ++i) EXPECT_LT(helix_distance(frame.to_local(h.cloud.point(i)), p), 1e-9);
  EXPECT_EQ(h.indices_of(LabelKind::Thread).size(), static_cast<std::size_t>(h.cloud.size()));
}

TEST(Synth, BoltHasCoreInsideThread) {
  SceneSpec spec;
  const auto bolt = gen_bolt(spec);
  EXPECT_FALSE(bolt.indices_of(LabelKind::BoltCore).empty());
  EXPECT_FALSE(bolt.indices_of(LabelKind::Thread).empty());
}

TEST(Synth, FlangeTruthConsistent) {
  SceneSpec spec;
  spec.noise_sigma = 0;
  const auto s = gen_flange_pair(spec);
  EXPECT_EQ(s.truth.holes_a.size(), 6u);
  for (auto i : s.b.indices_of(LabelKind::FaceB)) EXPECT_NEAR(s.truth.plane_b.signed_distance(s.b.cloud.point(i)), 0, 1e-9);
  for (auto i : s.a.indices_of(LabelKind::FaceA)) EXPECT_NEAR(s.truth.plane_a.signed_distance(s.a.cloud.point(i)), 0, 1e-9);
  // the true pose puts the rim on the nominal gap
  for (const auto& p : s.truth.face_a_rim)
    EXPECT_NEAR(s.truth.plane_b.signed_distance(s.truth.pose.xf(p)), spec.pose.nominal_gap, 1e-9);
}

TEST(Synth, OverlappingHolesRejected) {
  SceneSpec spec;
  spec.flange.hole_count = 40;
  try {
    spec.validate();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Config);
    EXPECT_NE(std::string(e.what()).find("hole spacing"), std::string::npos);
  }
}

TEST(Config, DefaultConstantsAppearOnce) {
  const auto entries = config_entries(PipelineConfig{});
  std::map<std::string, std::string> m;
  for (const auto& [k, v] : entries) EXPECT_TRUE(m.emplace(k, v).second) << "duplicate key " << k;
  EXPECT_EQ(m.at("plane.k1"), "1000");
  EXPECT_EQ(m.at("plane.k2"), "1500");
  EXPECT_EQ(m.at("plane.tau"), "0.05");
  EXPECT_EQ(m.at("plane.count"), "2");
  EXPECT_EQ(m.at("hole.k"), "1000");
  EXPECT_EQ(m.at("hole.tau"), "0.05");
  EXPECT_EQ(m.at("hole.count"), "6");
  EXPECT_EQ(m.at("hough.res"), "0.01");
}

TEST(Config, RoundTripThroughText) {
  PipelineConfig cfg;
  cfg.sor.k = 12;
  cfg.gap = 2.5;
  cfg.seed = 9;
  std::string text;
  for (const auto& [k, v] : config_entries(cfg)) text += k + " = " + v + "\n";
  EXPECT_EQ(config_entries(parse_config(text)), config_entries(cfg));
}

TEST(Config, Errors) {
  auto expect_config_error = [](const std::string& text, const std::string& needle) {
    try {
      parse_config(text, "c.cfg");
      ADD_FAILURE() << "accepted: " << text;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::Config);
      EXPECT_NE(std::string(e.what()).find(needle), std::string::npos) << e.what();
    }
  };
  expect_config_error("bogus.key = 1\n", "c.cfg:1");
  expect_config_error("# comment\nsor.k = 3\nsor.k = 4\n", "c.cfg:3");
  expect_config_error("plane.count = 0\n", "plane");
  expect_config_error("sor.k = abc\n", "sor.k");
  expect_config_error("pca.view = 14\n", "pca.view");
}

TEST(Config, SceneFile) {
  const auto spec = parse_scene("flange.hole_count = 8\npose.theta_deg = 2.5\nseed = 4\n");
  EXPECT_EQ(spec.flange.hole_count, 8);
  EXPECT_DOUBLE_EQ(spec.pose.theta_deg, 2.5);
  EXPECT_EQ(spec.seed, 4u);
  EXPECT_THROW(parse_scene("flange.nope = 1\n"), Error);
}

TEST(Config, MissingFileIsIoError) {
  try {
    load_config("/no/such/file.cfg");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::Io);
  }
}
