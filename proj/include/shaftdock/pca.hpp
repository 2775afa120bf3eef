#pragma once

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <utility>

#include "shaftdock/cloud.hpp"

namespace shaftdock {

/// Principal axes of a cloud. Columns of `axes` are u1, u2, u3 ordered by
/// descending eigenvalue of the scatter matrix H = X~ X~^T.
template <typename Scalar>
struct PcaBasis {
  Point3<Scalar> mean = Point3<Scalar>::Zero();
  Eigen::Matrix<Scalar, 3, 3> axes = Eigen::Matrix<Scalar, 3, 3>::Identity();
  Point3<Scalar> eigenvalues = Point3<Scalar>::Zero();
  Eigen::Index count = 0;
  bool near_degenerate = false;

  Point3<Scalar> axis(int i) const { return axes.col(i); }
  /// Per-axis variance (eigenvalue divided by the point count).
  Point3<Scalar> variances() const { return eigenvalues / Scalar(count); }
};

using PcaBasisd = PcaBasis<double>;

/// Flips v so that its largest-magnitude component is positive (first index wins ties).
template <typename Scalar>
Point3<Scalar> canonical_sign(const Point3<Scalar>& v) {
  Eigen::Index at = 0;
  v.cwiseAbs().maxCoeff(&at);
  return v(at) < Scalar(0) ? Point3<Scalar>(-v) : v;
}

template <typename Scalar>
PcaBasis<Scalar> pca_basis(const PointCloud<Scalar>& cloud) {
  if (cloud.size() < 2) throw processing_error("pca: need at least 2 points");
  PcaBasis<Scalar> basis;
  basis.count = cloud.size();
  basis.mean = cloud.centroid();
  const typename PointCloud<Scalar>::Matrix centered = cloud.points().colwise() - basis.mean;
  const Eigen::Matrix<Scalar, 3, 3> scatter = centered * centered.transpose();

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix<Scalar, 3, 3>> solver(scatter);
  if (solver.info() != Eigen::Success) throw processing_error("pca: eigendecomposition failed");
  for (int i = 0; i < 3; ++i) {
    // the solver sorts ascending
    basis.eigenvalues(i) = std::max(Scalar(0), solver.eigenvalues()(2 - i));
    basis.axes.col(i) = canonical_sign<Scalar>(solver.eigenvectors().col(2 - i));
  }
  const Scalar scale = basis.eigenvalues(0);
  if (!(scale > Scalar(0))) throw processing_error("pca: degenerate cloud (all points identical)");
  const Scalar rel = Scalar(1e-6);
  basis.near_degenerate = (basis.eigenvalues(0) - basis.eigenvalues(1)) <= rel * basis.eigenvalues(0) ||
                          (basis.eigenvalues(1) - basis.eigenvalues(2)) <= rel * basis.eigenvalues(1);
  return basis;
}

/// Principal plane spanned by two axes; P12 views the cloud along u3.
enum class ProjectionPlane { P23, P13, P12 };

inline std::pair<int, int> plane_axes(ProjectionPlane plane) {
  switch (plane) {
    case ProjectionPlane::P23: return {1, 2};
    case ProjectionPlane::P13: return {0, 2};
    case ProjectionPlane::P12: break;
  }
  return {0, 1};
}

/// The axis a plane looks along (the one it omits).
inline int view_axis(ProjectionPlane plane) {
  switch (plane) {
    case ProjectionPlane::P23: return 0;
    case ProjectionPlane::P13: return 1;
    case ProjectionPlane::P12: break;
  }
  return 2;
}

template <typename Scalar>
struct Projection2D {
  Eigen::Matrix<Scalar, 2, Eigen::Dynamic> points;
  ProjectionPlane plane = ProjectionPlane::P12;

  Eigen::Index size() const { return points.cols(); }
};

/// Mean-centred coordinates of every point along the two axes of `plane`.
template <typename Scalar>
Projection2D<Scalar> project(const PointCloud<Scalar>& cloud, const PcaBasis<Scalar>& basis, ProjectionPlane plane) {
  const auto [a, b] = plane_axes(plane);
  Eigen::Matrix<Scalar, 2, 3> rows;
  rows.row(0) = basis.axes.col(a).transpose();
  rows.row(1) = basis.axes.col(b).transpose();
  Projection2D<Scalar> out;
  out.plane = plane;
  out.points = rows * (cloud.points().colwise() - basis.mean);
  return out;
}

}  // namespace shaftdock
