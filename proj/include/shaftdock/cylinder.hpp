#pragma once

#include <vector>

#include "shaftdock/cloud.hpp"

namespace shaftdock {

/// Infinite cylinder: axis through `point` along unit `direction`.
struct Cylinder {
  Point3d point = Point3d::Zero();
  Point3d direction = Point3d::UnitZ();
  double radius = 1.0;
};

inline double distance_to_line(const Point3d& p, const Point3d& line_point, const Point3d& line_dir) {
  const Point3d w = p - line_point;
  return (w - w.dot(line_dir) * line_dir).norm();
}

struct CylinderFitOptions {
  int max_iterations = 50;
  bool fix_direction = false;
  /// Half-angle of the cone around the initial direction the axis must stay in (radians); <= 0 disables.
  double max_tilt = 0.0;
};

struct CylinderFitResult {
  Cylinder cylinder;
  double rms = 0.0;
  int iterations = 0;
};

/// Levenberg-Marquardt fit of |dist(p, axis)| - r over all points, started from
/// `init`. The axis point stays in the plane through init.point orthogonal to
/// init.direction.
CylinderFitResult fit_cylinder_lsq(const PointCloudd::Matrix& points, const Cylinder& init,
                                   const CylinderFitOptions& options = {});

}  // namespace shaftdock
