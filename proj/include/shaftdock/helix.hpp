#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "shaftdock/cloud.hpp"
#include "shaftdock/pca.hpp"

namespace shaftdock {

/// Right-handed local frame; the helix axis is the local z axis.
struct AxisFrame {
  Point3d origin = Point3d::Zero();
  Eigen::Matrix3d axes = Eigen::Matrix3d::Identity();  // columns: local x, y, z in world coordinates

  Point3d to_local(const Point3d& p) const { return axes.transpose() * (p - origin); }
  Point3d to_world(const Point3d& q) const { return axes * q + origin; }
  Point3d axis() const { return axes.col(2); }

  /// Frame with z along `axis`, origin at `origin`.
  static AxisFrame along(const Point3d& origin, const Point3d& axis);
  /// Frame whose z axis is principal axis `axis_index` of `basis`.
  static AxisFrame from_basis(const PcaBasisd& basis, int axis_index);
};

/// Helix x = R cos t, y = R sin t, z = d (t - phase) / 2pi in the frame.
struct HelixParams {
  double radius = 0.0;
  double pitch = 0.0;
  double phase = 0.0;  // [0, 2pi)
};

struct HelixModel {
  HelixParams params;
  AxisFrame frame;
  double residual_rms = 0.0;  // RMS orthogonal distance of the support points (mm)
  std::size_t support = 0;
  std::uint32_t votes = 0;
};

/// Per-point helix parameters from a single local point and a turn hint.
struct PointHelixParams {
  double radius;
  double pitch;
  double theta_total;  // atan2 angle in [0, 2pi) plus 2pi * turn_hint
};

/// Inverts the helix equation for one point: R = |(x, y)|, theta from atan2
/// unwrapped by `turn_hint` full turns, d = 2pi z / theta. Empty when the point
/// lies on the axis or theta is zero.
std::optional<PointHelixParams> point_to_params(const Point3d& local, int turn_hint);

struct HoughConfig {
  double r_min = 1.0, r_max = 50.0;
  double d_min = 0.25, d_max = 5.0;
  double r_res = 0.01, d_res = 0.01, phi_res = 0.01;
  std::uint32_t min_votes = 10;
  int refine_iterations = 5;
  double support_gate = 0.25;  // support band half-width as a fraction of the pitch
  bool keep_votes = false;     // retain the full accumulator (testing / inspection)

  void validate() const;
};

/// Vote space over (R, d, phi). Azimuths are unwrapped along the axis, so a
/// turn hypothesis is one integer offset shared by all points and votes are
/// counted per hypothesis. Only radius bins holding at least `min_votes` points
/// are materialised, since no cell in a thinner bin can win.
class HoughAccumulator {
 public:
  explicit HoughAccumulator(HoughConfig cfg);

  struct Cell {
    int r = -1, d = -1, phi = -1;
    std::uint32_t votes = 0;
    int turn = 0;  // winning turn offset
  };

  /// Adds the votes of `local` points (helix frame coordinates).
  void accumulate(const PointCloudd::Matrix& local);

  const HoughConfig& config() const { return cfg_; }
  int r_bins() const { return r_bins_; }
  int d_bins() const { return d_bins_; }
  int phi_bins() const { return phi_bins_; }
  double r_center(int i) const { return cfg_.r_min + i * cfg_.r_res; }
  double d_center(int i) const { return cfg_.d_min + i * cfg_.d_res; }
  double phi_center(int i) const { return i * cfg_.phi_res; }

  Cell best() const { return best_; }
  std::uint64_t total_votes() const { return total_; }
  /// Count for one cell, the largest over turn hypotheses; requires keep_votes.
  std::uint32_t votes(int r, int d, int phi) const;
  /// Radius bins for which votes are stored (keep_votes only).
  std::vector<int> stored_radius_bins() const;

 private:
  HoughConfig cfg_;
  int r_bins_, d_bins_, phi_bins_;
  Cell best_;
  std::uint64_t total_ = 0;
  std::map<int, std::vector<std::uint32_t>> kept_;
};

struct HoughFit {
  HelixModel bin_model;  // winning cell centre, before refinement
  HelixModel model;      // refined
  bool refined_kept = true;
};

/// Hough voting followed by least-squares refinement on the winning cell's
/// support band. Throws when no cell reaches `min_votes`.
HoughFit hough_fit(const PointCloudd& thread, const AxisFrame& frame, const HoughConfig& cfg);

/// Orthogonal distance from a local point to the helix (Newton on the curve parameter).
double helix_distance(const Point3d& local, const HelixParams& h);

/// Axial residual wrapped into [-d/2, d/2).
double helix_axial_residual(const Point3d& local, const HelixParams& h);

/// Ideal local-frame point at curve parameter t.
inline Point3d helix_point(const HelixParams& h, double t) {
  return {h.radius * std::cos(t), h.radius * std::sin(t), h.pitch * (t - h.phase) / (2.0 * kPi)};
}

/// Re-estimates the axis of a thread cloud by fitting a cylinder to it. The
/// returned frame keeps the orientation sense of `init`.
AxisFrame refine_axis(const PointCloudd& thread, const AxisFrame& init);

}  // namespace shaftdock
