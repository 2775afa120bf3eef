#include "shaftdock/synth.hpp"

#include <cmath>

#include "shaftdock/rng.hpp"

namespace shaftdock {
namespace {

constexpr double kGoldenAngle = 2.399963229728653;  // pi (3 - sqrt 5)

enum Stream : std::uint64_t { kHelixNoise = 1, kCore, kFaceA, kFaceB, kWallA, kWallB, kBand, kNoiseA, kNoiseB, kOutliers };

Eigen::Matrix3d helix_axes(const Point3d& axis) {
  return Eigen::Quaterniond::FromTwoVectors(Point3d::UnitZ(), axis.normalized()).toRotationMatrix();
}

void add_noise(std::vector<Point3d>& pts, double sigma, CounterRng& rng) {
  if (sigma <= 0.0) return;
  for (auto& p : pts) p += sigma * Point3d(rng.normal(), rng.normal(), rng.normal());
}

LabeledCloud make_labeled(const std::vector<Point3d>& pts, std::vector<PointLabel> labels) {
  return {PointCloudd::from_points(pts), std::move(labels)};
}

struct FlangeGeometry {
  std::vector<Point3d> points;  // flange-local: face in z = 0, body towards +z
  std::vector<PointLabel> labels;
  std::vector<Point2d> hole_centers;
};

/// Face annulus on a jittered grid, hole bores and (optionally) the outer band.
FlangeGeometry flange_local(const FlangeSpec& f, bool face_a, std::uint64_t seed) {
  FlangeGeometry g;
  const double area = kPi * (f.outer_radius * f.outer_radius - f.inner_radius * f.inner_radius) -
                      f.hole_count * kPi * f.hole_radius * f.hole_radius;
  const double spacing = std::sqrt(area / f.face_points);
  for (int k = 0; k < f.hole_count; ++k) {
    const double az = deg2rad(f.hole_phase_deg + 360.0 * k / f.hole_count);
    g.hole_centers.emplace_back(f.bolt_circle_radius * std::cos(az), f.bolt_circle_radius * std::sin(az));
  }

  CounterRng face_rng(seed, face_a ? kFaceA : kFaceB);
  const int cells = static_cast<int>(std::ceil(f.outer_radius / spacing));
  const PointLabel face_label{face_a ? LabelKind::FaceA : LabelKind::FaceB, -1};
  for (int iy = -cells; iy <= cells; ++iy)
    for (int ix = -cells; ix <= cells; ++ix) {
      const Point2d q((ix + face_rng.uniform(-0.25, 0.25)) * spacing, (iy + face_rng.uniform(-0.25, 0.25)) * spacing);
      const double r = q.norm();
      if (r < f.inner_radius || r > f.outer_radius) continue;
      bool in_hole = false;
      for (const auto& c : g.hole_centers) in_hole = in_hole || (q - c).norm() < f.hole_radius;
      if (in_hole) continue;
      g.points.emplace_back(q.x(), q.y(), 0.0);
      g.labels.push_back(face_label);
    }

  // cylindrical surfaces sampled on a (arc, height) grid
  auto cylinder = [&](const Point2d& c, double radius, double height, PointLabel label, CounterRng& rng) {
    const int around = std::max(8, static_cast<int>(std::round(2.0 * kPi * radius / spacing)));
    const int rows = std::max(2, static_cast<int>(std::round(height / spacing)));
    for (int j = 0; j < rows; ++j)
      for (int i = 0; i < around; ++i) {
        const double a = 2.0 * kPi * (i + rng.uniform(-0.25, 0.25) + 0.5 * (j % 2)) / around;
        const double h = (j + 0.5 + rng.uniform(-0.25, 0.25)) * height / rows;
        g.points.emplace_back(c.x() + radius * std::cos(a), c.y() + radius * std::sin(a), h);
        g.labels.push_back(label);
      }
  };
  CounterRng wall_rng(seed, face_a ? kWallA : kWallB);
  for (int k = 0; k < f.hole_count; ++k)
    cylinder(g.hole_centers[static_cast<std::size_t>(k)], f.hole_radius, f.hole_depth,
             {face_a ? LabelKind::HoleWallA : LabelKind::HoleWallB, k}, wall_rng);
  if (face_a && f.band_height > 0.0) {
    CounterRng band_rng(seed, kBand);
    cylinder(Point2d::Zero(), f.outer_radius, f.band_height, {LabelKind::ShaftBand, -1}, band_rng);
  }
  return g;
}

}  // namespace

std::string to_string(const PointLabel& label) {
  switch (label.kind) {
    case LabelKind::Thread: return "thread";
    case LabelKind::BoltCore: return "bolt-core";
    case LabelKind::FaceA: return "face-A";
    case LabelKind::FaceB: return "face-B";
    case LabelKind::HoleWallA: return "hole-wall-A-" + std::to_string(label.index);
    case LabelKind::HoleWallB: return "hole-wall-B-" + std::to_string(label.index);
    case LabelKind::ShaftBand: return "shaft-band";
    case LabelKind::Outlier: break;
  }
  return "outlier";
}

std::vector<Eigen::Index> LabeledCloud::indices_of(LabelKind kind) const {
  std::vector<Eigen::Index> out;
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i].kind == kind) out.push_back(static_cast<Eigen::Index>(i));
  return out;
}

void SceneSpec::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0)) throw config_error(std::string("scene: ") + name + " must be > 0");
  };
  positive(helix.radius, "helix.radius");
  positive(helix.pitch, "helix.pitch");
  positive(helix.turns, "helix.turns");
  positive(helix.points_per_turn, "helix.points_per_turn");
  if (helix.core_points_per_turn < 0.0) throw config_error("scene: helix.core_points_per_turn must be >= 0");
  if (!(helix.thread_depth > 0.0 && helix.thread_depth < helix.radius))
    throw config_error("scene: helix.thread_depth must be in (0, helix.radius)");
  if (!(helix.axis.norm() > 0.0)) throw config_error("scene: helix.axis must be non-zero");
  positive(flange.outer_radius, "flange.outer_radius");
  positive(flange.hole_radius, "flange.hole_radius");
  positive(flange.bolt_circle_radius, "flange.bolt_circle_radius");
  positive(flange.hole_depth, "flange.hole_depth");
  if (flange.inner_radius < 0.0 || flange.inner_radius >= flange.outer_radius)
    throw config_error("scene: flange.inner_radius must be in [0, flange.outer_radius)");
  if (flange.hole_count < 1) throw config_error("scene: flange.hole_count must be >= 1");
  if (flange.face_points < 100) throw config_error("scene: flange.face_points must be >= 100");
  if (flange.bolt_circle_radius - flange.hole_radius <= flange.inner_radius ||
      flange.bolt_circle_radius + flange.hole_radius >= flange.outer_radius)
    throw config_error("scene: holes must lie inside the face annulus (inner_radius < bolt_circle_radius -/+ hole_radius < outer_radius)");
  if (flange.hole_count > 1 &&
      2.0 * flange.bolt_circle_radius * std::sin(kPi / flange.hole_count) <= 2.0 * flange.hole_radius)
    throw config_error("scene: hole spacing: adjacent holes overlap (2 * bolt_circle_radius * sin(pi / hole_count) must exceed 2 * hole_radius)");
  if (pose.gap < 0.0) throw config_error("scene: pose.gap must be >= 0");
  if (noise_sigma < 0.0) throw config_error("scene: noise_sigma must be >= 0");
  if (!(outlier_fraction >= 0.0 && outlier_fraction < 1.0)) throw config_error("scene: outlier_fraction must be in [0, 1)");
  positive(outlier_bbox_scale, "outlier_bbox_scale");
}

LabeledCloud gen_helix(const SceneSpec& spec) {
  spec.validate();
  const auto& h = spec.helix;
  const auto n = static_cast<long>(std::llround(h.turns * h.points_per_turn));
  const Eigen::Matrix3d axes = helix_axes(h.axis);
  std::vector<Point3d> pts;
  pts.reserve(static_cast<std::size_t>(n));
  for (long i = 0; i < n; ++i) {
    const double t = h.phase + 2.0 * kPi * h.turns * static_cast<double>(i) / static_cast<double>(n);
    const Point3d local(h.radius * std::cos(t), h.radius * std::sin(t), h.pitch * (t - h.phase) / (2.0 * kPi));
    pts.push_back(h.origin + axes * local + spec.camera_offset);
  }
  CounterRng rng(spec.seed, kHelixNoise);
  add_noise(pts, spec.noise_sigma, rng);
  return make_labeled(pts, std::vector<PointLabel>(pts.size(), {LabelKind::Thread, -1}));
}

LabeledCloud gen_bolt(const SceneSpec& spec) {
  LabeledCloud thread = gen_helix(spec);
  const auto& h = spec.helix;
  const Eigen::Matrix3d axes = helix_axes(h.axis);
  const auto n = static_cast<long>(std::llround(h.turns * h.core_points_per_turn));
  const double length = h.turns * h.pitch;
  const double core_r = h.radius - h.thread_depth;
  std::vector<Point3d> core;
  for (long i = 0; i < n; ++i) {
    const double a = kGoldenAngle * static_cast<double>(i);
    const double z = length * (static_cast<double>(i) + 0.5) / static_cast<double>(n);
    core.push_back(h.origin + axes * Point3d(core_r * std::cos(a), core_r * std::sin(a), z) + spec.camera_offset);
  }
  CounterRng rng(spec.seed, kCore);
  add_noise(core, spec.noise_sigma, rng);

  std::vector<Point3d> all;
  for (Eigen::Index i = 0; i < thread.cloud.size(); ++i) all.push_back(thread.cloud.point(i));
  all.insert(all.end(), core.begin(), core.end());
  auto labels = thread.labels;
  labels.resize(all.size(), {LabelKind::BoltCore, -1});
  LabeledCloud out = make_labeled(all, std::move(labels));
  return spec.outlier_fraction > 0.0 ? inject_outliers(out, spec.outlier_fraction, spec.outlier_bbox_scale, spec.seed)
                                     : out;
}

FlangeScene gen_flange_pair(const SceneSpec& spec) {
  spec.validate();
  const auto& f = spec.flange;
  const auto& ps = spec.pose;

  // B: face at z = 0 facing +z, body below.
  FlangeGeometry gb = flange_local(f, false, spec.seed);
  Eigen::Matrix3d flip_b = Eigen::Vector3d(1.0, -1.0, -1.0).asDiagonal();  // body to -z, keeps handedness
  std::vector<Point3d> pts_b;
  for (const auto& p : gb.points) pts_b.push_back(flip_b * p);

  // A: face normal -z, body above; rotated by -theta about z, tilted, lifted by gap.
  FlangeGeometry ga = flange_local(f, true, spec.seed);
  const Eigen::Matrix3d spin = axis_rotation<double>(Point3d::UnitZ(), deg2rad(-ps.theta_deg));
  const double tilt_az = deg2rad(ps.tilt_azimuth_deg);
  const Point3d tilt_axis(std::cos(tilt_az), std::sin(tilt_az), 0.0);
  const Eigen::Matrix3d tilt = axis_rotation<double>(tilt_axis, deg2rad(ps.tilt_deg));
  const Point3d lift(ps.offset_x, ps.offset_y, ps.gap);
  RigidTransformd scan_a{tilt * spin, lift};  // flange-local A -> scan
  std::vector<Point3d> pts_a;
  for (const auto& p : ga.points) pts_a.push_back(scan_a(p));

  CounterRng noise_a(spec.seed, kNoiseA), noise_b(spec.seed, kNoiseB);
  add_noise(pts_a, spec.noise_sigma, noise_a);
  add_noise(pts_b, spec.noise_sigma, noise_b);
  for (auto& p : pts_a) p += spec.camera_offset;
  for (auto& p : pts_b) p += spec.camera_offset;

  FlangeScene scene;
  scene.a = make_labeled(pts_a, ga.labels);
  scene.b = make_labeled(pts_b, gb.labels);
  if (spec.outlier_fraction > 0.0) {
    scene.a = inject_outliers(scene.a, spec.outlier_fraction, spec.outlier_bbox_scale, spec.seed);
    scene.b = inject_outliers(scene.b, spec.outlier_fraction, spec.outlier_bbox_scale, spec.seed + 0x9e37);
  }

  // Ground truth, turbine frame (camera offset removed).
  FlangeTruth& t = scene.truth;
  t.nominal_gap = ps.nominal_gap;
  t.plane_b = {Point3d::UnitZ(), Point3d::Zero()};
  t.plane_a = {scan_a.rotation * Point3d(0, 0, -1), scan_a.translation};
  for (const auto& c : gb.hole_centers) t.holes_b.push_back(flip_b * Point3d(c.x(), c.y(), 0.0));
  for (const auto& c : ga.hole_centers) t.holes_a.push_back(scan_a(Point3d(c.x(), c.y(), 0.0)));
  t.shaft_axis = scan_a.rotation * Point3d::UnitZ();
  t.shaft_point = scan_a.translation;
  for (int i = 0; i < 360; ++i) {
    const double a = deg2rad(i);
    t.face_a_rim.push_back(scan_a(Point3d(f.outer_radius * std::cos(a), f.outer_radius * std::sin(a), 0.0)));
  }
  // mated A: flange-local A spun by -theta and lifted to the nominal gap over B's centre
  const RigidTransformd mated{spin, Point3d(0.0, 0.0, ps.nominal_gap)};
  t.pose.xf = mated * scan_a.inverse();
  t.pose.theta_deg = ps.theta_deg;
  return scene;
}

LabeledCloud inject_outliers(const LabeledCloud& in, double fraction, double bbox_scale, std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction < 1.0)) throw config_error("inject_outliers: fraction must be in [0, 1)");
  if (fraction == 0.0 || in.cloud.empty()) return in;
  const auto n_in = static_cast<double>(in.cloud.size());
  const auto n_out = static_cast<Eigen::Index>(std::llround(fraction * n_in / (1.0 - fraction)));
  const Point3d lo = in.cloud.points().rowwise().minCoeff(), hi = in.cloud.points().rowwise().maxCoeff();
  const Point3d mid = 0.5 * (lo + hi), half = 0.5 * bbox_scale * (hi - lo);
  CounterRng rng(seed, kOutliers);
  PointCloudd::Matrix m(3, in.cloud.size() + n_out);
  m.leftCols(in.cloud.size()) = in.cloud.points();
  for (Eigen::Index i = 0; i < n_out; ++i)
    for (int k = 0; k < 3; ++k) m(k, in.cloud.size() + i) = mid(k) + half(k) * rng.uniform(-1.0, 1.0);
  LabeledCloud out{PointCloudd(std::move(m), in.cloud.frame()), in.labels};
  out.labels.resize(static_cast<std::size_t>(out.cloud.size()), {LabelKind::Outlier, -1});
  return out;
}

}  // namespace shaftdock
