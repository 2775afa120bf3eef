#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "shaftdock/cloud.hpp"
#include "shaftdock/pose.hpp"
#include "shaftdock/ransac.hpp"

namespace shaftdock {

enum class LabelKind { Thread, BoltCore, FaceA, FaceB, HoleWallA, HoleWallB, ShaftBand, Outlier };

struct PointLabel {
  LabelKind kind = LabelKind::Outlier;
  int index = -1;  // hole number for hole-wall labels

  friend bool operator==(const PointLabel&, const PointLabel&) = default;
};

std::string to_string(const PointLabel& label);

struct LabeledCloud {
  PointCloudd cloud;
  std::vector<PointLabel> labels;

  std::vector<Eigen::Index> indices_of(LabelKind kind) const;
};

struct HelixSpec {
  double radius = 5.0;
  double pitch = 1.0;
  double phase = 0.0;  // rad
  double turns = 8.0;
  double points_per_turn = 61.8;  // non-integer so successive turns interleave when viewed along the axis
  double thread_depth = 0.6;   // core cylinder sits this far inside the crest radius
  double core_points_per_turn = 30.9;
  Point3d axis = Point3d::UnitZ();
  Point3d origin = Point3d::Zero();  // turbine-frame position of the helix start
};

struct FlangeSpec {
  double outer_radius = 60.0;
  double inner_radius = 30.0;
  int hole_count = 6;
  double hole_radius = 4.0;
  double bolt_circle_radius = 45.0;
  double hole_phase_deg = 0.0;
  double hole_depth = 8.0;
  double band_height = 10.0;  // shaft outer surface band on face A
  int face_points = 20000;
};

struct TruePoseSpec {
  double tilt_deg = 0.5;
  double tilt_azimuth_deg = 30.0;
  double gap = 2.0;          // scanned gap between the faces at the A centre (mm)
  double theta_deg = 3.7;    // stud lag to be recovered by the shaft rotation
  double offset_x = 0.0;     // in-plane eccentricity of A in the scan (mm)
  double offset_y = 0.0;
  double nominal_gap = 1.0;  // gap of the mated pose
};

struct SceneSpec {
  HelixSpec helix;
  FlangeSpec flange;
  TruePoseSpec pose;
  double noise_sigma = 0.02;
  double outlier_fraction = 0.0;
  double outlier_bbox_scale = 1.2;
  Point3d camera_offset = Point3d::Zero();  // camera = turbine + offset
  std::uint64_t seed = 1;

  void validate() const;
};

/// Uniform samples of the thread curve with noise, camera frame, labelled Thread.
LabeledCloud gen_helix(const SceneSpec& spec);

/// Thread helix plus the core cylinder of the bolt, noise and outliers applied,
/// expressed in the camera frame.
LabeledCloud gen_bolt(const SceneSpec& spec);

struct FlangeTruth {
  PoseSolutiond pose;             // (R, t) maps scanned A onto its mated position; theta from spec
  PlaneModeld plane_a, plane_b;   // ideal faces in the scan (normals face each other)
  std::vector<Point3d> holes_a;   // hole centres on face A in the scan
  std::vector<Point3d> holes_b;
  Point3d shaft_axis, shaft_point;  // shaft axis of A in the scan
  double nominal_gap = 1.0;
  std::vector<Point3d> face_a_rim;  // ideal rim samples of face A in the scan
};

struct FlangeScene {
  LabeledCloud a;
  LabeledCloud b;
  FlangeTruth truth;
};

/// Fixed face B at z = 0 facing +z; face A above it at the spec's tilt, gap and
/// stud lag. Both carry hole bores, A carries the shaft band. Camera frame.
FlangeScene gen_flange_pair(const SceneSpec& spec);

/// Appends uniform points in the bounding box scaled about its centre so that
/// `fraction` of the returned cloud is outliers.
LabeledCloud inject_outliers(const LabeledCloud& in, double fraction, double bbox_scale, std::uint64_t seed);

}  // namespace shaftdock
