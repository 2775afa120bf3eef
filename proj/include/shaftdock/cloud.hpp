#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "shaftdock/error.hpp"

namespace shaftdock {

template <typename Scalar>
using Point3 = Eigen::Matrix<Scalar, 3, 1>;

template <typename Scalar>
using Point2 = Eigen::Matrix<Scalar, 2, 1>;

enum class Frame { Camera, TurbineAxis };

inline const char* to_string(Frame f) { return f == Frame::Camera ? "camera" : "turbine-axis"; }

/// Immutable set of 3D points (millimetres) stored column-wise.
template <typename Scalar>
class PointCloud {
 public:
  using Matrix = Eigen::Matrix<Scalar, 3, Eigen::Dynamic>;

  PointCloud() = default;

  explicit PointCloud(Matrix points, Frame frame = Frame::Camera)
      : points_(std::move(points)), frame_(frame) {
    if (!points_.allFinite()) throw processing_error("point cloud contains non-finite coordinates");
  }

  static PointCloud from_points(const std::vector<Point3<Scalar>>& pts, Frame frame = Frame::Camera) {
    Matrix m(3, static_cast<Eigen::Index>(pts.size()));
    for (std::size_t i = 0; i < pts.size(); ++i) m.col(static_cast<Eigen::Index>(i)) = pts[i];
    return PointCloud(std::move(m), frame);
  }

  Eigen::Index size() const { return points_.cols(); }
  bool empty() const { return points_.cols() == 0; }
  const Matrix& points() const { return points_; }
  Point3<Scalar> point(Eigen::Index i) const { return points_.col(i); }
  Frame frame() const { return frame_; }

  Point3<Scalar> centroid() const {
    if (empty()) throw processing_error("centroid of empty cloud");
    return points_.rowwise().mean();
  }

  PointCloud select(std::span<const Eigen::Index> indices) const {
    Matrix m(3, static_cast<Eigen::Index>(indices.size()));
    for (std::size_t i = 0; i < indices.size(); ++i) m.col(static_cast<Eigen::Index>(i)) = points_.col(indices[i]);
    return PointCloud(std::move(m), frame_);
  }

  PointCloud with_frame(Frame frame) const { return PointCloud(points_, frame); }

 private:
  Matrix points_;
  Frame frame_ = Frame::Camera;
};

using Point3d = Point3<double>;
using Point2d = Point2<double>;
using PointCloudd = PointCloud<double>;

/// Concatenates clouds in argument order; the frame of the first cloud is kept.
template <typename Scalar>
PointCloud<Scalar> concatenate(std::span<const PointCloud<Scalar>> clouds) {
  Eigen::Index total = 0;
  for (const auto& c : clouds) total += c.size();
  typename PointCloud<Scalar>::Matrix m(3, total);
  Eigen::Index at = 0;
  for (const auto& c : clouds) {
    m.middleCols(at, c.size()) = c.points();
    at += c.size();
  }
  return PointCloud<Scalar>(std::move(m), clouds.empty() ? Frame::Camera : clouds.front().frame());
}

/// Rotation followed by translation: p -> R p + t.
template <typename Scalar>
struct RigidTransform {
  using Matrix3 = Eigen::Matrix<Scalar, 3, 3>;
  using Vector3 = Eigen::Matrix<Scalar, 3, 1>;

  Matrix3 rotation = Matrix3::Identity();
  Vector3 translation = Vector3::Zero();

  static RigidTransform identity() { return {}; }

  bool is_valid(Scalar tol = Scalar(1e-9)) const {
    if (!rotation.allFinite() || !translation.allFinite()) return false;
    const Scalar ortho = (rotation.transpose() * rotation - Matrix3::Identity()).cwiseAbs().maxCoeff();
    return ortho <= tol && std::abs(rotation.determinant() - Scalar(1)) <= tol;
  }

  Vector3 operator()(const Vector3& p) const { return rotation * p + translation; }

  RigidTransform inverse() const {
    return {rotation.transpose(), -(rotation.transpose() * translation)};
  }

  friend RigidTransform operator*(const RigidTransform& a, const RigidTransform& b) {
    return {a.rotation * b.rotation, a.rotation * b.translation + a.translation};
  }
};

using RigidTransformd = RigidTransform<double>;

template <typename Scalar>
PointCloud<Scalar> apply_transform(const PointCloud<Scalar>& cloud, const RigidTransform<Scalar>& xf) {
  if (!xf.is_valid()) throw processing_error("rigid transform rotation is not orthonormal with det +1");
  typename PointCloud<Scalar>::Matrix m = (xf.rotation * cloud.points()).colwise() + xf.translation;
  return PointCloud<Scalar>(std::move(m), cloud.frame());
}

/// Camera frame to turbine-axis frame as a pure translation: X_T = X_T0 - offset.
template <typename Scalar>
PointCloud<Scalar> transform_to_turbine_frame(const PointCloud<Scalar>& cloud, const Point3<Scalar>& offset) {
  if (cloud.empty()) throw processing_error("transform_to_turbine_frame: empty cloud");
  if (cloud.frame() != Frame::Camera) throw processing_error("transform_to_turbine_frame: cloud is not in the camera frame");
  typename PointCloud<Scalar>::Matrix m = cloud.points().colwise() - offset;
  return PointCloud<Scalar>(std::move(m), Frame::TurbineAxis);
}

/// Rotation matrix about a unit axis (Rodrigues).
template <typename Scalar>
Eigen::Matrix<Scalar, 3, 3> axis_rotation(const Point3<Scalar>& axis, Scalar angle) {
  return Eigen::AngleAxis<Scalar>(angle, axis.normalized()).toRotationMatrix();
}

/// Any unit vector orthogonal to n, chosen deterministically.
template <typename Scalar>
Point3<Scalar> any_orthogonal(const Point3<Scalar>& n) {
  const Point3<Scalar> helper = std::abs(n.x()) < Scalar(0.9) ? Point3<Scalar>::UnitX() : Point3<Scalar>::UnitY();
  return n.cross(helper).normalized();
}

constexpr double kPi = 3.14159265358979323846;
inline double deg2rad(double deg) { return deg * kPi / 180.0; }
inline double rad2deg(double rad) { return rad * 180.0 / kPi; }

}  // namespace shaftdock
