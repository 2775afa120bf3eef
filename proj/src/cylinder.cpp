#include "shaftdock/cylinder.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

namespace shaftdock {
namespace {

struct Param {
  Point3d u, v;
  Cylinder init;

  Cylinder decode(const Eigen::Matrix<double, 5, 1>& x) const {
    Cylinder c;
    c.direction = (init.direction + x(0) * u + x(1) * v).normalized();
    c.point = init.point + x(2) * u + x(3) * v;
    c.radius = x(4);
    return c;
  }
};

Eigen::VectorXd residuals(const PointCloudd::Matrix& pts, const Cylinder& c) {
  Eigen::VectorXd r(pts.cols());
  for (Eigen::Index i = 0; i < pts.cols(); ++i) r(i) = distance_to_line(pts.col(i), c.point, c.direction) - c.radius;
  return r;
}

}  // namespace

CylinderFitResult fit_cylinder_lsq(const PointCloudd::Matrix& points, const Cylinder& init,
                                   const CylinderFitOptions& options) {
  if (points.cols() < 5) throw processing_error("cylinder fit: need at least 5 points");
  Param param{any_orthogonal<double>(init.direction.normalized()), {}, init};
  param.init.direction.normalize();
  param.v = param.init.direction.cross(param.u);

  const int free_begin = options.fix_direction ? 2 : 0;
  Eigen::Matrix<double, 5, 1> x;
  x << 0, 0, 0, 0, init.radius;
  Eigen::VectorXd r = residuals(points, param.decode(x));
  double cost = r.squaredNorm();
  double lambda = 1e-3;
  int it = 0;
  bool converged = false;
  for (; it < options.max_iterations && !converged; ++it) {
    Eigen::MatrixXd jac(points.cols(), 5);
    jac.setZero();
    for (int k = free_begin; k < 5; ++k) {
      const double h = 1e-7 * std::max(1.0, std::abs(x(k)));
      Eigen::Matrix<double, 5, 1> xp = x;
      xp(k) += h;
      jac.col(k) = (residuals(points, param.decode(xp)) - r) / h;
    }
    const Eigen::MatrixXd jtj = jac.transpose() * jac;
    const Eigen::VectorXd jtr = jac.transpose() * r;
    bool improved = false;
    for (int attempt = 0; attempt < 10 && !improved; ++attempt) {
      Eigen::MatrixXd a = jtj;
      for (int k = 0; k < 5; ++k) a(k, k) = k < free_begin ? 1.0 : a(k, k) * (1.0 + lambda) + 1e-12;
      Eigen::Matrix<double, 5, 1> step = -a.ldlt().solve(jtr);
      for (int k = 0; k < free_begin; ++k) step(k) = 0.0;
      const Eigen::Matrix<double, 5, 1> xn = x + step;
      const Eigen::VectorXd rn = residuals(points, param.decode(xn));
      const double cn = rn.squaredNorm();
      if (cn < cost) {
        improved = true;
        const double gain = cost - cn;
        x = xn;
        r = rn;
        cost = cn;
        lambda = std::max(lambda * 0.3, 1e-12);
        converged = gain <= 1e-15 * std::max(1.0, cost) || step.norm() < 1e-13;
      } else {
        lambda *= 10.0;
      }
    }
    if (!improved) break;
  }

  CylinderFitResult out{param.decode(x), 0.0, it};
  if (options.max_tilt > 0.0 && !options.fix_direction) {
    const double tilt = std::acos(std::clamp(out.cylinder.direction.dot(param.init.direction), -1.0, 1.0));
    if (tilt > options.max_tilt) {
      // clamp onto the cone boundary and re-solve position and radius
      const Point3d lateral = (out.cylinder.direction - out.cylinder.direction.dot(param.init.direction) *
                                                            param.init.direction).normalized();
      Cylinder clamped = out.cylinder;
      clamped.direction = std::cos(options.max_tilt) * param.init.direction + std::sin(options.max_tilt) * lateral;
      CylinderFitOptions fixed = options;
      fixed.fix_direction = true;
      fixed.max_tilt = 0.0;
      out = fit_cylinder_lsq(points, clamped, fixed);
    }
  }
  if (out.cylinder.radius < 0) out.cylinder.radius = -out.cylinder.radius;
  out.rms = std::sqrt(residuals(points, out.cylinder).squaredNorm() / static_cast<double>(points.cols()));
  return out;
}

}  // namespace shaftdock
