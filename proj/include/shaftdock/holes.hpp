#pragma once

#include <cstdint>
#include <vector>

#include "shaftdock/cloud.hpp"
#include "shaftdock/ransac.hpp"

namespace shaftdock {

/// Orthonormal 2D coordinate system on a plane (u, v in-plane, n the normal).
struct PlaneFrame {
  Point3d origin;
  Point3d u, v, n;

  explicit PlaneFrame(const PlaneModeld& plane);

  Point2d to_2d(const Point3d& p) const { return {u.dot(p - origin), v.dot(p - origin)}; }
  double height(const Point3d& p) const { return n.dot(p - origin); }
  Point3d to_3d(const Point2d& q, double h = 0.0) const { return origin + q.x() * u + q.y() * v + h * n; }
  Eigen::Matrix2Xd to_2d(const PointCloudd& cloud) const;
};

/// Hole axis line (x - x0)/nx = (y - y0)/ny = (z - z0)/nz with bore radius.
struct HoleAxis {
  Point3d point = Point3d::Zero();
  Point3d direction = Point3d::UnitZ();
  double radius = 0.0;
  std::size_t inliers = 0;
};

struct HoleSet {
  std::vector<HoleAxis> holes;
  PlaneModeld source_plane;
};

struct HoleCandidate {
  Point2d center;                 // plane-frame coordinates
  Point3d center3d;               // on the plane
  std::vector<Point2d> polygon;   // convex crop polygon, counter-clockwise
  int cells = 0;                  // empty-cell area of the component
};

struct PresearchOptions {
  int min_cells = 5;
  int grow_cells = 2;
  double cell_scale = 2.0;  // cell size as a multiple of the median nearest-neighbour distance
};

/// Locates point-free disks inside a planar face. Candidates are ordered by
/// azimuth about the face centroid.
std::vector<HoleCandidate> presearch_holes(const PointCloudd& plane_inliers, const PlaneModeld& plane,
                                           int expected_holes, const PresearchOptions& options = {});

/// Monotone-chain convex hull, counter-clockwise without repeated endpoint.
std::vector<Point2d> convex_hull(std::vector<Point2d> pts);

bool inside_convex(const std::vector<Point2d>& polygon, const Point2d& q);

/// Points whose plane projection falls inside `polygon`.
std::vector<Eigen::Index> crop_to_polygon(const PointCloudd& cloud, const PlaneFrame& frame,
                                          const std::vector<Point2d>& polygon);

struct HoleFitOptions {
  double max_tilt_deg = 15.0;
  double min_radius = 0.0;
  double max_radius = 1e9;
  int min_inliers = 30;
};

/// RANSAC circle in the plane frame followed by a least-squares cylinder whose
/// axis stays inside the tilt cone about the plane normal. Inlier test:
/// |distance to axis - r| < threshold.
HoleAxis fit_hole_axis(const PointCloudd& region, const PlaneModeld& plane, int iterations, double threshold,
                       std::uint64_t seed, const HoleFitOptions& options = {});

/// Indices of `region` within threshold of the cylinder described by `axis`.
std::vector<Eigen::Index> hole_inliers(const PointCloudd& region, const HoleAxis& axis, double threshold);

}  // namespace shaftdock
