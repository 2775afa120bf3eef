#pragma once

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "shaftdock/cloud.hpp"
#include "shaftdock/optimize.hpp"

namespace shaftdock {

// ---------------------------------------------------------------------------
// Face-to-face matching

/// Which directional-distance populations enter the face index.
enum class FaceCombination { AOnly, BOnly, Symmetric };

template <typename Scalar>
struct FaceMatchInput {
  PointCloud<Scalar> cloud_a;  // moving face inliers
  PointCloud<Scalar> cloud_b;  // fixed face inliers
  Point3<Scalar> n_a, n_b;     // outward face normals (n_a towards B, n_b towards A)
  Point3<Scalar> p_ac, p_bc;   // face centroids
  Scalar h0 = Scalar(1);       // normaliser (mm)
};

template <typename Scalar>
struct DirectionalDistances {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> h_a;  // per point of A: n_B^T (R p_Ai + t - p_Bc)
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> h_b;  // per point of B: n_A^T R^T (p_Bi - R p_Ac - t)
};

template <typename Scalar>
DirectionalDistances<Scalar> directional_distances(const RigidTransform<Scalar>& xf, const FaceMatchInput<Scalar>& in) {
  DirectionalDistances<Scalar> out;
  out.h_a = ((in.n_b.transpose() * (xf.rotation * in.cloud_a.points())).array() +
             in.n_b.dot(xf.translation - in.p_bc)).transpose();
  const Point3<Scalar> moved_centroid = xf.rotation * in.p_ac + xf.translation;
  const Point3<Scalar> axis = xf.rotation * in.n_a;  // (n_A^T R^T)^T
  out.h_b = ((axis.transpose() * in.cloud_b.points()).array() - axis.dot(moved_centroid)).transpose();
  return out;
}

template <typename Scalar>
struct FaceMatchResult {
  RigidTransform<Scalar> xf;
  Scalar eps_pla = 0;
  Scalar h_max = 0;
  Scalar h_mean = 0;
  Scalar eps_pla_initial = 0;
  int evaluations = 0;
  bool converged = true;
};

/// Relative face deviation (h_max - h_mean) / h0 over absolute directional distances.
template <typename Scalar>
FaceMatchResult<Scalar> eps_pla(const RigidTransform<Scalar>& xf, const FaceMatchInput<Scalar>& in,
                                FaceCombination combination = FaceCombination::Symmetric) {
  if (!(in.h0 > Scalar(0))) throw processing_error("eps_pla: h0 must be > 0");
  const auto d = directional_distances(xf, in);
  Scalar max = -std::numeric_limits<Scalar>::infinity(), sum = 0;
  Eigen::Index count = 0;
  auto take = [&](const auto& h) {
    if (h.size() == 0) return;
    max = std::max(max, h.cwiseAbs().maxCoeff());
    sum += h.cwiseAbs().sum();
    count += h.size();
  };
  if (combination != FaceCombination::BOnly) take(d.h_a);
  if (combination != FaceCombination::AOnly) take(d.h_b);
  if (count == 0) throw processing_error("eps_pla: no directional distances");
  FaceMatchResult<Scalar> out;
  out.xf = xf;
  out.h_max = max;
  out.h_mean = sum / Scalar(count);
  out.eps_pla = (out.h_max - out.h_mean) / in.h0;
  return out;
}

/// Closed-form start: n_A onto -n_B, p_Ac onto p_Bc + gap n_B.
template <typename Scalar>
RigidTransform<Scalar> initial_face_pose(const FaceMatchInput<Scalar>& in, Scalar gap) {
  RigidTransform<Scalar> xf;
  xf.rotation = Eigen::Quaternion<Scalar>::FromTwoVectors(in.n_a.normalized(), Point3<Scalar>(-in.n_b.normalized()))
                    .toRotationMatrix();
  xf.translation = in.p_bc + gap * in.n_b - xf.rotation * in.p_ac;
  return xf;
}

/// Pose obtained by tilting `base` about the two in-plane axes of B through the
/// moved A centroid; tilting about the centroid leaves the mean gap unchanged.
template <typename Scalar>
RigidTransform<Scalar> tilt_pose(const RigidTransform<Scalar>& base, const FaceMatchInput<Scalar>& in, Scalar tilt_u,
                                 Scalar tilt_v) {
  const Point3<Scalar> e1 = any_orthogonal<Scalar>(in.n_b.normalized());
  const Point3<Scalar> e2 = in.n_b.normalized().cross(e1);
  const Eigen::Matrix<Scalar, 3, 3> tilt =
      (Eigen::AngleAxis<Scalar>(tilt_u, e1) * Eigen::AngleAxis<Scalar>(tilt_v, e2)).toRotationMatrix();
  const Point3<Scalar> pivot = base.rotation * in.p_ac + base.translation;
  RigidTransform<Scalar> out;
  out.rotation = tilt * base.rotation;
  out.translation = tilt * (base.translation - pivot) + pivot;
  return out;
}

struct FaceOptimizeOptions {
  double nominal_gap = 1.0;  // mm
  int max_evaluations = 500;
  double initial_step = 1e-3;  // rad
  double x_tol = 1e-9;         // rad
  FaceCombination combination = FaceCombination::Symmetric;
};

/// Minimises eps_pla over the two out-of-plane tilts with a simplex started at
/// the closed-form alignment. The gap stays at the nominal value because the
/// index is invariant to a common shift of all distances.
template <typename Scalar>
FaceMatchResult<Scalar> optimize_face_pose(const FaceMatchInput<Scalar>& in, const FaceOptimizeOptions& opts = {}) {
  if (in.cloud_a.empty() || in.cloud_b.empty()) throw processing_error("optimize_face_pose: empty face cloud");
  const RigidTransform<Scalar> base = initial_face_pose(in, static_cast<Scalar>(opts.nominal_gap));
  auto objective = [&](const Eigen::Matrix<Scalar, 2, 1>& x) {
    return eps_pla(tilt_pose(base, in, x(0), x(1)), in, opts.combination).eps_pla;
  };
  const Scalar initial = objective(Eigen::Matrix<Scalar, 2, 1>::Zero());
  const auto res = nelder_mead<Scalar, 2>(objective, Eigen::Matrix<Scalar, 2, 1>::Zero(),
                                          static_cast<Scalar>(opts.initial_step), opts.max_evaluations,
                                          static_cast<Scalar>(opts.x_tol), Scalar(0));
  FaceMatchResult<Scalar> out = eps_pla(tilt_pose(base, in, res.x(0), res.x(1)), in, opts.combination);
  out.eps_pla_initial = initial;
  out.evaluations = res.evaluations + 1;
  out.converged = res.converged;
  return out;
}

// ---------------------------------------------------------------------------
// Hole-position matching

template <typename Scalar>
struct AxisLine {
  Point3<Scalar> point;
  Point3<Scalar> direction;
};

/// Rotation of p about the line through `center` along `axis` by `theta` (radians).
template <typename Scalar>
Point3<Scalar> rotate_about_axis(const Point3<Scalar>& p, const Point3<Scalar>& axis, const Point3<Scalar>& center,
                                 Scalar theta) {
  if (!(axis.norm() > Scalar(0))) throw processing_error("rotate_about_axis: zero axis");
  return center + axis_rotation<Scalar>(axis, theta) * (p - center);
}

/// Choice of objective for the shaft rotation search.
///   Spread: eps_cyc = (d_max - d_mean) / d0, which is flat for exactly symmetric patterns.
///   Max:    d_max / d0 = eps_cyc + d_mean / d0.
enum class HoleObjective { Spread, Max };

template <typename Scalar>
struct HoleMatchInput {
  std::vector<Point3<Scalar>> studs;      // stud reference points p_k
  std::vector<AxisLine<Scalar>> holes;    // hole axes (p_l, n_l); holes[k] pairs with studs[k]
  Point3<Scalar> axis = Point3<Scalar>::UnitZ();    // shaft rotation axis n
  Point3<Scalar> center = Point3<Scalar>::Zero();   // point p_O on the shaft axis
  Scalar d0 = Scalar(0.5);
  Scalar period_deg = Scalar(360);
};

/// d_k = |n_l x (p~_k - p_l)| / |n_l| for each pair after rotating the studs by theta.
template <typename Scalar>
std::vector<Scalar> hole_deviation(Scalar theta_rad, const HoleMatchInput<Scalar>& in) {
  if (in.studs.size() != in.holes.size()) throw processing_error("hole_deviation: stud/hole counts differ");
  const Eigen::Matrix<Scalar, 3, 3> rot = axis_rotation<Scalar>(in.axis, theta_rad);
  std::vector<Scalar> out;
  out.reserve(in.studs.size());
  for (std::size_t k = 0; k < in.studs.size(); ++k) {
    const Scalar len = in.holes[k].direction.norm();
    if (!(len > Scalar(0))) throw processing_error("hole_deviation: zero hole direction");
    const Point3<Scalar> moved = in.center + rot * (in.studs[k] - in.center);
    out.push_back(in.holes[k].direction.cross(moved - in.holes[k].point).norm() / len);
  }
  return out;
}

template <typename Scalar>
struct SpreadStats {
  Scalar max, mean;
};

template <typename Scalar>
SpreadStats<Scalar> spread(const std::vector<Scalar>& d) {
  if (d.empty()) throw processing_error("empty deviation list");
  Scalar max = d.front(), sum = 0;
  for (Scalar v : d) {
    max = std::max(max, v);
    sum += v;
  }
  return {max, sum / Scalar(d.size())};
}

template <typename Scalar>
Scalar eps_cyc(const std::vector<Scalar>& deviations, Scalar d0) {
  if (!(d0 > Scalar(0))) throw processing_error("eps_cyc: d0 must be > 0");
  const auto s = spread(deviations);
  return (s.max - s.mean) / d0;
}

template <typename Scalar>
Scalar hole_objective(Scalar theta_rad, const HoleMatchInput<Scalar>& in, HoleObjective objective) {
  const auto dev = hole_deviation(theta_rad, in);
  if (objective == HoleObjective::Spread) return eps_cyc(dev, in.d0);
  return spread(dev).max / in.d0;
}

template <typename Scalar>
struct HoleMatchResult {
  Scalar theta_deg = 0;
  Scalar eps_cyc = 0;
  Scalar objective = 0;  // value of the minimised objective at theta
  std::vector<Scalar> deviations;
  Scalar best_grid_objective = 0;
};

struct HoleOptimizeOptions {
  double grid_step_deg = 0.01;
  double tolerance_deg = 1e-4;
  HoleObjective objective = HoleObjective::Spread;
};

/// Grid over [0, period) followed by golden-section refinement around the best
/// sample. The returned objective never exceeds any grid sample.
template <typename Scalar>
HoleMatchResult<Scalar> optimize_hole_rotation(const HoleMatchInput<Scalar>& in, const HoleOptimizeOptions& opts = {}) {
  if (in.studs.empty() || in.studs.size() != in.holes.size())
    throw processing_error("optimize_hole_rotation: need matching, non-empty stud and hole lists");
  if (!(in.period_deg > Scalar(0))) throw processing_error("optimize_hole_rotation: period must be > 0");
  const Scalar step = static_cast<Scalar>(opts.grid_step_deg);
  auto f = [&](Scalar deg) { return hole_objective(static_cast<Scalar>(deg2rad(static_cast<double>(deg))), in, opts.objective); };

  const auto samples = static_cast<long>(std::ceil(static_cast<double>(in.period_deg / step) - 1e-9));
  Scalar best_deg = 0, best = f(Scalar(0));
  for (long i = 1; i < samples; ++i) {
    const Scalar deg = step * Scalar(i);
    const Scalar v = f(deg);
    if (v < best) {
      best = v;
      best_deg = deg;
    }
  }
  Scalar theta = golden_section<Scalar>(f, best_deg - step, best_deg + step, static_cast<Scalar>(opts.tolerance_deg));
  Scalar value = f(theta);
  if (!(value <= best)) {
    theta = best_deg;
    value = best;
  }
  theta = std::fmod(theta, in.period_deg);
  if (theta < 0) theta += in.period_deg;

  HoleMatchResult<Scalar> out;
  out.theta_deg = theta;
  out.deviations = hole_deviation(static_cast<Scalar>(deg2rad(static_cast<double>(theta))), in);
  out.eps_cyc = eps_cyc(out.deviations, in.d0);
  out.objective = value;
  out.best_grid_objective = best;
  return out;
}

/// Azimuth of p about (axis, center) measured from a fixed in-plane reference, degrees in [0, 360).
template <typename Scalar>
Scalar azimuth_deg(const Point3<Scalar>& p, const Point3<Scalar>& axis, const Point3<Scalar>& center) {
  const Point3<Scalar> n = axis.normalized();
  const Point3<Scalar> e1 = any_orthogonal<Scalar>(n);
  const Point3<Scalar> e2 = n.cross(e1);
  const Point3<Scalar> w = p - center;
  Scalar a = static_cast<Scalar>(rad2deg(static_cast<double>(std::atan2(w.dot(e2), w.dot(e1)))));
  return a < 0 ? a + Scalar(360) : a;
}

/// Orders both lists by azimuth and pairs them by rank, choosing the cyclic
/// shift whose hole-minus-stud angular offsets (in [0, 360)) are smallest, so
/// each stud is paired with the hole it reaches by a forward rotation.
template <typename Scalar>
void pair_by_azimuth(HoleMatchInput<Scalar>& in) {
  if (in.studs.size() != in.holes.size()) throw processing_error("pair_by_azimuth: stud/hole counts differ");
  const std::size_t n = in.studs.size();
  auto az_stud = [&](const Point3<Scalar>& p) { return azimuth_deg(p, in.axis, in.center); };
  auto az_hole = [&](const AxisLine<Scalar>& l) { return azimuth_deg(l.point, in.axis, in.center); };
  std::stable_sort(in.studs.begin(), in.studs.end(), [&](const auto& a, const auto& b) { return az_stud(a) < az_stud(b); });
  std::stable_sort(in.holes.begin(), in.holes.end(), [&](const auto& a, const auto& b) { return az_hole(a) < az_hole(b); });
  std::size_t best_shift = 0;
  Scalar best_cost = std::numeric_limits<Scalar>::infinity();
  for (std::size_t s = 0; s < n; ++s) {
    Scalar cost = 0;
    for (std::size_t k = 0; k < n; ++k) {
      Scalar off = az_hole(in.holes[(k + s) % n]) - az_stud(in.studs[k]);
      if (off < 0) off += Scalar(360);
      cost += off;
    }
    if (cost < best_cost) {
      best_cost = cost;
      best_shift = s;
    }
  }
  std::rotate(in.holes.begin(), in.holes.begin() + static_cast<std::ptrdiff_t>(best_shift), in.holes.end());
}

// ---------------------------------------------------------------------------

template <typename Scalar>
struct PoseSolution {
  RigidTransform<Scalar> xf;
  Scalar theta_deg = 0;
  Scalar eps_pla = 0;
  Scalar eps_cyc = 0;
  std::vector<Scalar> per_hole_dev_mm;
  std::vector<std::string> warnings;
};

using PoseSolutiond = PoseSolution<double>;

template <typename Scalar>
PoseSolution<Scalar> assemble_pose(const FaceMatchResult<Scalar>& face, const HoleMatchResult<Scalar>& hole,
                                   std::vector<std::string> warnings = {}) {
  PoseSolution<Scalar> out;
  out.xf = face.xf;
  out.theta_deg = hole.theta_deg;
  out.eps_pla = face.eps_pla;
  out.eps_cyc = hole.eps_cyc;
  out.per_hole_dev_mm = hole.deviations;
  out.warnings = std::move(warnings);
  return out;
}

}  // namespace shaftdock
