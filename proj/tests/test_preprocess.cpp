#include <gtest/gtest.h>

#include "oracles.hpp"
#include "shaftdock/pca.hpp"
#include "shaftdock/sor.hpp"
#include "shaftdock/synth.hpp"
#include "support.hpp"

using namespace shaftdock;

TEST(Sor, MatchesBruteForce) {
  for (std::uint64_t s = 0; s < 12; ++s) {
    CounterRng rng(s, 1);
    auto cloud = support::gaussian_cloud(rng, 60 + static_cast<int>(rng.below(400)));
    for (auto stat : {SorStatistic::Mean, SorStatistic::Sum}) {
      SorParams p;
      p.k = 3 + static_cast<int>(rng.below(20));
      p.n_sigma = rng.uniform(0.5, 3.0);
      p.statistic = stat;
      const auto fast = sor_filter(cloud, p);
      EXPECT_EQ(fast.kept, oracle::sor_kept(cloud, p.k, p.n_sigma, stat == SorStatistic::Sum));
      EXPECT_EQ(fast.cloud.size() + fast.stats.removed_count, cloud.size());
    }
  }
}

TEST(Sor, RemovesFarPoint) {
  CounterRng rng(9);
  std::vector<Point3d> pts;
  for (int i = 0; i < 500; ++i) pts.emplace_back(rng.uniform(0, 10), rng.uniform(0, 10), rng.uniform(0, 0.1));
  pts.emplace_back(5, 5, 500);
  const auto r = sor_filter(PointCloudd::from_points(pts), SorParams{});
  EXPECT_TRUE(std::find(r.kept.begin(), r.kept.end(), 500) == r.kept.end());
  EXPECT_GE(r.kept.size(), 490u);
}

TEST(Sor, RejectsBadParameters) {
  CounterRng rng(1);
  const auto cloud = support::gaussian_cloud(rng, 10);
  SorParams p;
  p.k = 10;  // needs more than k points
  EXPECT_THROW(sor_filter(cloud, p), Error);
  p.k = 0;
  EXPECT_THROW(sor_filter(cloud, p), Error);
}

TEST(Pca, OrthonormalDescending) {
  CounterRng rng(2);
  for (int t = 0; t < 50; ++t) {
    std::vector<Point3d> pts;
    const Point3d scale(rng.uniform(0.1, 5), rng.uniform(0.1, 5), rng.uniform(0.1, 5));
    for (int i = 0; i < 100; ++i) pts.push_back(scale.cwiseProduct(Point3d(rng.normal(), rng.normal(), rng.normal())));
    const auto b = pca_basis(PointCloudd::from_points(pts));
    EXPECT_LT((b.axes.transpose() * b.axes - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_NEAR(std::abs(b.axes.determinant()), 1.0, 1e-12);
    for (int k = 0; k < 3; ++k) {
      Eigen::Index at = 0;
      b.axes.col(k).cwiseAbs().maxCoeff(&at);
      EXPECT_GT(b.axes(at, k), 0.0);
    }
    EXPECT_GE(b.eigenvalues(0), b.eigenvalues(1));
    EXPECT_GE(b.eigenvalues(1), b.eigenvalues(2));
  }
}

TEST(Pca, RotationEquivariance) {
  CounterRng rng(8);
  std::vector<Point3d> pts;
  for (int i = 0; i < 300; ++i) pts.emplace_back(5 * rng.normal(), 2 * rng.normal(), 0.5 * rng.normal());
  const auto cloud = PointCloudd::from_points(pts);
  const RigidTransformd xf{axis_rotation<double>(support::random_unit(rng), 0.9), Point3d(10, -3, 2)};
  const auto a = pca_basis(cloud), b = pca_basis(apply_transform(cloud, xf));
  for (int k = 0; k < 3; ++k) {
    EXPECT_NEAR(a.eigenvalues(k), b.eigenvalues(k), 1e-9);
    EXPECT_NEAR(std::abs((xf.rotation * a.axes.col(k)).dot(b.axes.col(k))), 1.0, 1e-9);
  }
}

TEST(Pca, LongHelixAxisIsPrincipal) {
  SceneSpec spec;
  spec.helix.radius = 1.0;
  spec.helix.pitch = 2.0;
  spec.helix.turns = 20;
  spec.noise_sigma = 0;
  spec.helix.axis = Point3d(0.2, -0.1, 1.0);
  const auto cloud = gen_helix(spec).cloud;
  const auto b = pca_basis(cloud);
  EXPECT_GT(std::abs(b.axes.col(0).dot(spec.helix.axis.normalized())), std::cos(deg2rad(1.0)));
}

TEST(Pca, ProjectionDropsViewAxis) {
  CounterRng rng(6);
  const auto cloud = support::gaussian_cloud(rng, 40);
  const auto b = pca_basis(cloud);
  for (auto plane : {ProjectionPlane::P12, ProjectionPlane::P13, ProjectionPlane::P23}) {
    const auto proj = project(cloud, b, plane);
    const auto [i, j] = plane_axes(plane);
    for (Eigen::Index c = 0; c < cloud.size(); ++c) {
      const Point3d q = b.axes.transpose() * (cloud.point(c) - b.mean);
      EXPECT_NEAR(proj.points(0, c), q(i), 1e-12);
      EXPECT_NEAR(proj.points(1, c), q(j), 1e-12);
    }
  }
}
