#pragma once

#include <Eigen/Eigenvalues>

#include <numeric>
#include <string>
#include <vector>

#include "shaftdock/cloud.hpp"
#include "shaftdock/pca.hpp"
#include "shaftdock/rng.hpp"

namespace shaftdock {

/// Plane through `point` with unit `normal`; equivalent to Ax + By + Cz + D = 0.
template <typename Scalar>
struct PlaneModel {
  Point3<Scalar> normal = Point3<Scalar>::UnitZ();
  Point3<Scalar> point = Point3<Scalar>::Zero();

  Eigen::Matrix<Scalar, 4, 1> coefficients() const {
    Eigen::Matrix<Scalar, 4, 1> c;
    c << normal, -normal.dot(point);
    return c;
  }

  Scalar signed_distance(const Point3<Scalar>& p) const { return normal.dot(p - point); }

  /// Same plane with the normal reversed.
  PlaneModel flipped() const { return {-normal, point}; }
};

using PlaneModeld = PlaneModel<double>;

struct RansacConfig {
  int iterations = 1000;
  double threshold = 0.05;  // mm
  int models = 1;
  std::vector<int> per_model_iterations;  // overrides `iterations` for model i when present

  int iterations_for(int model) const {
    const auto m = static_cast<std::size_t>(model);
    return m < per_model_iterations.size() ? per_model_iterations[m] : iterations;
  }

  void validate(const std::string& what) const {
    if (iterations < 1) throw config_error(what + ": ransac iterations must be >= 1");
    if (!(threshold > 0.0)) throw config_error(what + ": ransac threshold must be > 0");
    if (models < 1) throw config_error(what + ": model count must be >= 1");
    for (int k : per_model_iterations)
      if (k < 1) throw config_error(what + ": ransac iterations must be >= 1");
  }
};

template <typename Scalar>
struct PlaneFit {
  PlaneModel<Scalar> plane;
  std::vector<Eigen::Index> inliers;  // ascending indices into the segmented cloud
};

/// Least-squares plane: centroid and smallest principal axis.
template <typename Scalar>
PlaneModel<Scalar> fit_plane_lsq(const PointCloud<Scalar>& cloud) {
  if (cloud.size() < 3) throw processing_error("plane fit: need at least 3 points");
  const Point3<Scalar> c = cloud.centroid();
  const typename PointCloud<Scalar>::Matrix centered = cloud.points().colwise() - c;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix<Scalar, 3, 3>> solver(centered * centered.transpose());
  return {canonical_sign<Scalar>(solver.eigenvectors().col(0)), c};
}

template <typename Scalar>
std::vector<Eigen::Index> plane_inliers(const PointCloud<Scalar>& cloud, const PlaneModel<Scalar>& plane,
                                        double threshold) {
  const Eigen::Array<Scalar, 1, Eigen::Dynamic> dist =
      (plane.normal.transpose() * cloud.points()).array() - plane.normal.dot(plane.point);
  std::vector<Eigen::Index> out;
  for (Eigen::Index i = 0; i < cloud.size(); ++i)
    if (std::abs(dist(i)) < static_cast<Scalar>(threshold)) out.push_back(i);
  return out;
}

/// Three-point RANSAC with |n^T (p - p0)| < threshold as the inlier test.
/// The winning hypothesis (most inliers, earliest iteration on ties) is refit
/// by least squares and its inliers recomputed against the refit plane.
template <typename Scalar>
PlaneFit<Scalar> ransac_plane(const PointCloud<Scalar>& cloud, int iterations, double threshold, std::uint64_t seed) {
  if (cloud.size() < 3) throw processing_error("ransac_plane: need at least 3 points");
  if (iterations < 1 || !(threshold > 0.0)) throw config_error("ransac_plane: invalid iterations or threshold");
  CounterRng rng(seed, 0x706c616e65ULL);
  const auto& pts = cloud.points();
  const auto n = static_cast<std::uint64_t>(cloud.size());
  const auto tau = static_cast<Scalar>(threshold);

  Eigen::Index best_count = -1;
  PlaneModel<Scalar> best;
  for (int it = 0; it < iterations; ++it) {
    Point3<Scalar> normal;
    Eigen::Index i0 = 0;
    bool ok = false;
    for (int attempt = 0; attempt < 100 && !ok; ++attempt) {
      i0 = static_cast<Eigen::Index>(rng.below(n));
      const auto i1 = static_cast<Eigen::Index>(rng.below(n));
      const auto i2 = static_cast<Eigen::Index>(rng.below(n));
      if (i0 == i1 || i0 == i2 || i1 == i2) continue;
      const Point3<Scalar> a = pts.col(i1) - pts.col(i0), b = pts.col(i2) - pts.col(i0);
      normal = a.cross(b);
      // collinear samples are redrawn
      ok = normal.norm() > Scalar(1e-12) * a.norm() * b.norm() && normal.norm() > Scalar(0);
    }
    if (!ok) continue;
    normal.normalize();
    const Scalar offset = normal.dot(pts.col(i0));
    const Eigen::Index count =
        (((normal.transpose() * pts).array() - offset).abs() < tau).template cast<Eigen::Index>().sum();
    if (count > best_count) {
      best_count = count;
      best = {normal, pts.col(i0)};
    }
  }
  if (best_count < 3) throw processing_error("ransac_plane: fewer than 3 inliers for the best model");

  PlaneFit<Scalar> fit{best, plane_inliers(cloud, best, threshold)};
  for (int pass = 0; pass < 2 && fit.inliers.size() >= 3; ++pass) {
    const PlaneModel<Scalar> refit = fit_plane_lsq(cloud.select(fit.inliers));
    auto inl = plane_inliers(cloud, refit, threshold);
    if (inl.size() < 3) break;
    fit = {refit, std::move(inl)};
  }
  return fit;
}

template <typename Scalar>
struct Segmentation {
  std::vector<PlaneFit<Scalar>> planes;  // inliers index the original cloud
  std::vector<std::string> warnings;
};

/// Sequential extraction: fit the best plane, drop its inliers, repeat.
template <typename Scalar>
Segmentation<Scalar> segment_planes(const PointCloud<Scalar>& cloud, const RansacConfig& cfg, std::uint64_t seed) {
  cfg.validate("segment_planes");
  Segmentation<Scalar> out;
  std::vector<Eigen::Index> remaining(static_cast<std::size_t>(cloud.size()));
  std::iota(remaining.begin(), remaining.end(), Eigen::Index{0});
  for (int m = 0; m < cfg.models; ++m) {
    if (remaining.size() < 3) {
      out.warnings.push_back("segment_planes: only " + std::to_string(m) + " of " + std::to_string(cfg.models) +
                             " planes extracted; residual cloud exhausted");
      break;
    }
    const PointCloud<Scalar> rest = cloud.select(remaining);
    PlaneFit<Scalar> fit;
    try {
      fit = ransac_plane(rest, cfg.iterations_for(m), cfg.threshold, seed + static_cast<std::uint64_t>(m));
    } catch (const Error& e) {
      out.warnings.push_back("segment_planes: plane " + std::to_string(m) + " failed: " + e.what());
      break;
    }
    std::vector<char> taken(remaining.size(), 0);
    for (auto& i : fit.inliers) {
      taken[static_cast<std::size_t>(i)] = 1;
      i = remaining[static_cast<std::size_t>(i)];
    }
    std::vector<Eigen::Index> next;
    for (std::size_t i = 0; i < remaining.size(); ++i)
      if (!taken[i]) next.push_back(remaining[i]);
    remaining = std::move(next);
    out.planes.push_back(std::move(fit));
  }
  return out;
}

}  // namespace shaftdock
