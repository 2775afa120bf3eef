#include "shaftdock/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "shaftdock/cylinder.hpp"

namespace shaftdock {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json vec_json(const Point3d& p) { return json::array({p.x(), p.y(), p.z()}); }

Point3d vec_from_json(const json& j) {
  if (!j.is_array() || j.size() != 3) throw config_error("expected a 3-vector");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

json plane_json(const PlaneModeld& p, std::size_t inliers) {
  const auto c = p.coefficients();
  return {{"coefficients", {c(0), c(1), c(2), c(3)}}, {"normal", vec_json(p.normal)}, {"point", vec_json(p.point)},
          {"inliers", inliers}};
}

json hole_json(const HoleAxis& h) {
  return {{"point", vec_json(h.point)}, {"direction", vec_json(h.direction)}, {"radius", h.radius}, {"inliers", h.inliers}};
}

json timings_json(const StageLog& log) {
  json t = json::object();
  for (const auto& [name, ms] : log.timings()) t[name] = ms;
  return t;
}

void append_warnings(std::vector<std::string>& to, const std::vector<std::string>& from) {
  to.insert(to.end(), from.begin(), from.end());
}

fs::path ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw io_error("cannot create directory '" + dir + "': " + ec.message());
  return fs::path(dir);
}

PointCloudd planar_cloud(const Projection2D<double>& proj) {
  PointCloudd::Matrix m = PointCloudd::Matrix::Zero(3, proj.size());
  m.topRows<2>() = proj.points;
  return PointCloudd(std::move(m), Frame::TurbineAxis);
}

PointCloudd helix_samples(const HelixModel& model, const PointCloudd& support) {
  double zmin = 0.0, zmax = 0.0;
  for (Eigen::Index i = 0; i < support.size(); ++i) {
    const double z = model.frame.to_local(support.point(i)).z();
    zmin = i == 0 ? z : std::min(zmin, z);
    zmax = i == 0 ? z : std::max(zmax, z);
  }
  const auto& h = model.params;
  const double t0 = h.phase + 2.0 * kPi * zmin / h.pitch, t1 = h.phase + 2.0 * kPi * zmax / h.pitch;
  const int n = std::max(2, static_cast<int>(std::ceil((t1 - t0) / (2.0 * kPi) * 72.0)));
  std::vector<Point3d> pts;
  for (int i = 0; i <= n; ++i) pts.push_back(model.frame.to_world(helix_point(h, t0 + (t1 - t0) * i / n)));
  return PointCloudd::from_points(pts, Frame::TurbineAxis);
}

PointCloudd to_turbine(const PointCloudd& cloud, const PipelineConfig& cfg, std::vector<std::string>& warnings,
                       const std::string& name) {
  if (cloud.frame() == Frame::TurbineAxis) {
    warnings.push_back(name + ": input already in the turbine frame; offset not applied");
    return cloud;
  }
  return transform_to_turbine_frame(cloud, cfg.turbine_offset);
}

}  // namespace

Projection2D<double> project_along(const PointCloudd& cloud, const AxisFrame& frame, ProjectionPlane label) {
  Projection2D<double> out;
  out.plane = label;
  out.points = frame.axes.leftCols<2>().transpose() * (cloud.points().colwise() - frame.origin);
  return out;
}

ThreadOutput run_thread(const PointCloudd& cloud, const PipelineConfig& cfg, StageLog& log) {
  cfg.validate();
  ThreadOutput out;
  out.turbine = log.run("transform", [&] { return to_turbine(cloud, cfg, out.warnings, "thread"); });
  out.sor = log.run("sor", [&] { return sor_filter(out.turbine, cfg.sor); });
  log.run("pca", [&] {
    out.basis = pca_basis(out.sor.cloud);
    if (out.basis.near_degenerate)
      out.warnings.push_back("pca: near-equal eigenvalues; principal axes are ill-defined (consider pca.axis_override)");
    out.frame = cfg.axis_override ? AxisFrame::along(out.basis.mean, *cfg.axis_override)
                                  : AxisFrame::from_basis(out.basis, view_axis(cfg.view));
  });
  out.projection = log.run("project", [&] {
    return cfg.axis_override ? project_along(out.sor.cloud, out.frame, cfg.view)
                             : project(out.sor.cloud, out.basis, cfg.view);
  });

  auto cluster = [&] {
    const Eigen::Index seed = pick_seed(out.projection);
    out.labeling = cfg.dbscan_mode == DbscanMode::Full ? dbscan(out.projection, cfg.dbscan)
                                                       : expand_from_seed(out.projection, cfg.dbscan, seed);
    out.cluster = extract_thread_cluster(out.sor.cloud, out.labeling, seed);
  };
  log.run("cluster", cluster);

  if (cfg.refine_axis && !cfg.axis_override) {
    log.run("axis", [&] {
      // the principal axis of a finite helix leans towards the thread; a
      // cylinder fit on the clustered crest removes the lean
      for (int round = 0; round < 2; ++round) {
        if (out.cluster.cloud.size() < 10) break;
        out.frame = refine_axis(out.cluster.cloud, out.frame);
        out.projection = project_along(out.sor.cloud, out.frame, cfg.view);
        cluster();
      }
    });
  }
  out.fit = log.run("hough", [&] { return hough_fit(out.cluster.cloud, out.frame, cfg.hough); });
  if (!out.fit.refined_kept) out.warnings.push_back("hough: refinement did not improve on the bin centre; bin model kept");
  return out;
}

MatchOutput run_match(const PointCloudd& scan_a_in, const PointCloudd& scan_b_in, const PipelineConfig& cfg,
                      StageLog& log) {
  cfg.validate();
  MatchOutput out;
  PointCloudd scan_a, scan_b;
  log.run("transform", [&] {
    scan_a = to_turbine(scan_a_in, cfg, out.warnings, "scan A");
    scan_b = to_turbine(scan_b_in, cfg, out.warnings, "scan B");
  });

  log.run("planes", [&] {
    auto face = [&](const PointCloudd& scan, int model, const char* name) {
      const RansacConfig rc{cfg.plane.iterations_for(model), cfg.plane.threshold, 1, {}};
      auto seg = segment_planes(scan, rc, cfg.seed);  // same stream for both scans
      append_warnings(out.warnings, seg.warnings);
      if (seg.planes.empty()) throw processing_error(std::string("no plane found in scan ") + name);
      FaceSide side;
      side.plane = seg.planes.front().plane;
      side.inliers = std::move(seg.planes.front().inliers);
      return side;
    };
    out.a = face(scan_a, 0, "A");
    out.b = face(scan_b, 1, "B");

    const Point3d ca = scan_a.select(out.a.inliers).centroid(), cb = scan_b.select(out.b.inliers).centroid();
    Point3d nb = out.b.plane.normal.normalized();
    const double separation = std::abs(nb.dot(ca - cb));
    const double angle = std::acos(std::min(1.0, std::abs(nb.dot(out.a.plane.normal.normalized()))));
    out.coincident = separation < cfg.plane.threshold && angle < deg2rad(0.01) && (ca - cb).norm() < cfg.plane.threshold;
    if (!out.coincident && nb.dot(ca - cb) < 0.0) nb = -nb;
    Point3d na = out.a.plane.normal.normalized();
    if (na.dot(nb) > 0.0) na = -na;
    out.b.plane = {nb, cb};
    out.a.plane = {na, ca};
    if (out.coincident) out.warnings.push_back("planes: faces A and B coincide; mating in place with zero gap");
  });

  const int expected = cfg.hole.models;
  auto find_holes = [&](const PointCloudd& scan, FaceSide& side, std::uint64_t seed, const char* name) {
    // sign-free plane so a face yields the same holes whichever way its normal points
    const PlaneModeld plane{canonical_sign<double>(side.plane.normal), side.plane.point};
    side.candidates = presearch_holes(scan.select(side.inliers), plane, expected);
    std::vector<char> on_plane(static_cast<std::size_t>(scan.size()), 0);
    for (auto i : side.inliers) on_plane[static_cast<std::size_t>(i)] = 1;
    std::vector<Eigen::Index> rest;
    for (Eigen::Index i = 0; i < scan.size(); ++i)
      if (!on_plane[static_cast<std::size_t>(i)]) rest.push_back(i);
    const PointCloudd residual = scan.select(rest);
    const PlaneFrame frame(plane);
    HoleFitOptions opts;
    opts.max_tilt_deg = cfg.hole_max_tilt_deg;
    for (std::size_t k = 0; k < side.candidates.size(); ++k) {
      const auto crop = crop_to_polygon(residual, frame, side.candidates[k].polygon);
      try {
        side.holes.push_back(fit_hole_axis(residual.select(crop), plane, cfg.hole.iterations, cfg.hole.threshold,
                                           seed + 7919 * k, opts));
      } catch (const Error& e) {
        throw Error(e.kind(), std::string("face ") + name + " hole " + std::to_string(k) + ": " + e.what());
      }
    }
  };
  log.run("holes", [&] {
    find_holes(scan_a, out.a, cfg.seed + 101, "A");
    find_holes(scan_b, out.b, cfg.seed + 101, "B");
  });

  log.run("shaft", [&] {
    // shaft surface: points of A off the face plane, outside the hole ring
    const Point3d n = out.a.plane.normal, c = out.a.plane.point;
    double ring = 0.0;
    for (const auto& h : out.a.holes)
      ring = std::max(ring, distance_to_line(h.point, c, n) + 2.0 * h.radius);
    std::vector<Point3d> band;
    for (Eigen::Index i = 0; i < scan_a.size(); ++i) {
      const Point3d p = scan_a.point(i);
      if (-n.dot(p - c) > 2.0 * cfg.plane.threshold && distance_to_line(p, c, n) > ring) band.push_back(p);
    }
    out.shaft_axis = n;
    out.shaft_point = c;
    if (band.size() < 100) {
      out.warnings.push_back("shaft: no shaft surface found beyond the hole ring; using the face normal through the face centroid");
      return;
    }
    const PointCloudd bc = PointCloudd::from_points(band, Frame::TurbineAxis);
    double r0 = 0.0;
    for (const auto& p : band) r0 += distance_to_line(p, c, n);
    CylinderFitOptions opts;
    opts.max_tilt = deg2rad(cfg.hole_max_tilt_deg);
    auto fit = fit_cylinder_lsq(bc.points(), {c, n, r0 / static_cast<double>(band.size())}, opts);
    Point3d dir = fit.cylinder.direction.normalized();
    if (dir.dot(n) < 0.0) dir = -dir;
    const double denom = dir.dot(n);
    out.shaft_axis = dir;
    out.shaft_point = fit.cylinder.point + (c - fit.cylinder.point).dot(n) / denom * dir;
    out.shaft_fitted = true;
  });

  log.run("face", [&] {
    FaceMatchInput<double> in{scan_a.select(out.a.inliers), scan_b.select(out.b.inliers), out.a.plane.normal,
                              out.b.plane.normal, out.a.plane.point, out.b.plane.point, cfg.h0};
    FaceOptimizeOptions opts;
    opts.nominal_gap = out.coincident ? 0.0 : cfg.gap;
    opts.max_evaluations = cfg.face_max_evaluations;
    opts.combination = cfg.combination;
    if (out.coincident) {
      // the same surface mates with itself in place
      out.face = eps_pla(RigidTransformd::identity(), in, cfg.combination);
      out.face.eps_pla_initial = out.face.eps_pla;
      out.face.evaluations = 1;
      return;
    }
    out.face = optimize_face_pose(in, opts);
    if (!out.face.converged) out.warnings.push_back("face: simplex stopped at the evaluation limit");
  });

  log.run("rotation", [&] {
    if (out.a.holes.size() != out.b.holes.size())
      throw processing_error("hole counts differ between faces A and B");
    const auto& xf = out.face.xf;
    HoleMatchInput<double> in;
    for (const auto& h : out.a.holes) in.studs.push_back(xf(h.point));
    for (const auto& h : out.b.holes) in.holes.push_back({h.point, h.direction});
    in.axis = (xf.rotation * out.shaft_axis).normalized();
    if (in.axis.dot(out.b.plane.normal) < 0.0) in.axis = -in.axis;
    in.center = xf(out.shaft_point);
    in.d0 = cfg.d0;
    in.period_deg = cfg.period_deg > 0.0 ? cfg.period_deg : 360.0 / static_cast<double>(in.studs.size());
    pair_by_azimuth(in);
    HoleOptimizeOptions opts;
    opts.grid_step_deg = cfg.grid_step_deg;
    opts.objective = cfg.objective;
    // Rank pairing fixes the order; the rank offset is the one whose search
    // fits best, starting from the forward pairing so ties keep it.
    for (std::size_t shift = 0; shift < in.holes.size(); ++shift) {
      HoleMatchInput<double> candidate = in;
      std::rotate(candidate.holes.begin(), candidate.holes.begin() + static_cast<std::ptrdiff_t>(shift),
                  candidate.holes.end());
      auto result = optimize_hole_rotation(candidate, opts);
      if (shift == 0 || result.objective < out.hole.objective) {
        out.hole = std::move(result);
        out.hole_input = std::move(candidate);
      }
    }
  });

  out.pose = assemble_pose(out.face, out.hole, out.warnings);
  return out;
}

json to_json(const PoseSolutiond& pose) {
  json r = json::array();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r.push_back(pose.xf.rotation(i, j));
  return {{"R", r},
          {"t", vec_json(pose.xf.translation)},
          {"theta_deg", pose.theta_deg},
          {"eps_pla", pose.eps_pla},
          {"eps_cyc", pose.eps_cyc},
          {"per_hole_dev_mm", pose.per_hole_dev_mm},
          {"warnings", pose.warnings}};
}

PoseSolutiond pose_from_json(const json& j) {
  try {
    PoseSolutiond p;
    const auto& r = j.at("R");
    if (!r.is_array() || r.size() != 9) throw config_error("pose: R must hold 9 numbers");
    for (int i = 0; i < 3; ++i)
      for (int k = 0; k < 3; ++k) p.xf.rotation(i, k) = r[static_cast<std::size_t>(3 * i + k)].get<double>();
    p.xf.translation = vec_from_json(j.at("t"));
    p.theta_deg = j.at("theta_deg").get<double>();
    p.eps_pla = j.at("eps_pla").get<double>();
    p.eps_cyc = j.at("eps_cyc").get<double>();
    p.per_hole_dev_mm = j.at("per_hole_dev_mm").get<std::vector<double>>();
    p.warnings = j.at("warnings").get<std::vector<std::string>>();
    return p;
  } catch (const json::exception& e) {
    throw config_error(std::string("pose: ") + e.what());
  }
}

json to_json(const HelixModel& m) {
  return {{"radius", m.params.radius},   {"pitch", m.params.pitch},
          {"phase", m.params.phase},     {"axis", vec_json(m.frame.axis())},
          {"origin", vec_json(m.frame.origin)}, {"residual_rms", m.residual_rms},
          {"support", m.support},        {"votes", m.votes}};
}

json config_json(const PipelineConfig& cfg) {
  json j = json::object();
  for (const auto& [k, v] : config_entries(cfg)) j[k] = v;
  return j;
}

json without_timings(json report) {
  report.erase("timings_ms");
  return report;
}

namespace {

json base_report(const std::string& command, const json& config) {
  return {{"schema_version", kReportSchemaVersion},
          {"version", kVersion},
          {"command", command},
          {"status", "ok"},
          {"config", config},
          {"inputs", json::object()},
          {"outputs", json::object()},
          {"warnings", json::array()}};
}

int exit_code_of(ErrorKind kind) { return static_cast<int>(kind); }

/// Fills the failure marker; `stage` is empty for errors outside a stage.
CommandResult failure(json report, const StageLog& log, const std::string& stage, ErrorKind kind,
                      const std::string& message) {
  report["status"] = "failed";
  report["failed_stage"] = stage.empty() ? "setup" : stage;
  report["error"] = message;
  report["timings_ms"] = timings_json(log);
  return {exit_code_of(kind), std::move(report), message};
}

template <typename Body>
CommandResult guarded(json report, StageLog& log, Body&& body) {
  try {
    body(report);
    report["timings_ms"] = timings_json(log);
    return {0, std::move(report), {}};
  } catch (const StageError& e) {
    return failure(std::move(report), log, e.stage(), e.kind(), e.what());
  } catch (const Error& e) {
    return failure(std::move(report), log, "", e.kind(), e.what());
  } catch (const std::exception& e) {
    return failure(std::move(report), log, "", ErrorKind::Processing, e.what());
  }
}

PointCloudd load(StageLog& log, const std::string& stage, const std::string& path) {
  return log.run(stage, [&] { return read_cloud(path); });
}

json thread_outputs(const ThreadOutput& t) {
  json o;
  o["helix"] = to_json(t.fit.model);
  o["hough_bin"] = {{"radius", t.fit.bin_model.params.radius},
                    {"pitch", t.fit.bin_model.params.pitch},
                    {"phase", t.fit.bin_model.params.phase},
                    {"votes", t.fit.bin_model.votes}};
  o["refined_kept"] = t.fit.refined_kept;
  o["sor"] = {{"mu", t.sor.stats.mu}, {"sigma", t.sor.stats.sigma}, {"removed", t.sor.stats.removed_count}};
  json axes = json::array();
  for (int i = 0; i < 3; ++i) axes.push_back(vec_json(t.basis.axes.col(i)));
  o["pca"] = {{"eigenvalues", vec_json(t.basis.eigenvalues)}, {"axes", axes}, {"near_degenerate", t.basis.near_degenerate}};
  o["cluster"] = {{"eps", t.labeling.eps},
                  {"clusters", t.labeling.cluster_count},
                  {"noise", t.labeling.noise_count()},
                  {"thread_points", t.cluster.cloud.size()}};
  return o;
}

void write_thread_intermediates(const ThreadOutput& t, const std::string& out_dir, json& outputs) {
  const fs::path dir = ensure_dir(out_dir);
  const std::vector<std::pair<std::string, PointCloudd>> files = {
      {"thread_turbine.ply", t.turbine},
      {"thread_sor.ply", t.sor.cloud},
      {"thread_projection.ply", planar_cloud(t.projection)},
      {"thread_cluster.ply", t.cluster.cloud},
      {"thread_helix.ply", helix_samples(t.fit.model, t.cluster.cloud)},
  };
  json list = json::array();
  for (const auto& [name, cloud] : files) {
    write_cloud(cloud, dir / name, CloudFormat::PlyAscii);
    list.push_back(name);
  }
  outputs["intermediates"] = list;
}

json match_outputs(const MatchOutput& m) {
  json o;
  o["pose"] = to_json(m.pose);
  o["planes"] = {{"A", plane_json(m.a.plane, m.a.inliers.size())}, {"B", plane_json(m.b.plane, m.b.inliers.size())}};
  json ha = json::array(), hb = json::array();
  for (const auto& h : m.a.holes) ha.push_back(hole_json(h));
  for (const auto& h : m.b.holes) hb.push_back(hole_json(h));
  o["holes"] = {{"A", ha}, {"B", hb}};
  o["shaft"] = {{"axis", vec_json(m.shaft_axis)}, {"point", vec_json(m.shaft_point)}, {"fitted", m.shaft_fitted}};
  o["face"] = {{"eps_pla_initial", m.face.eps_pla_initial},
               {"eps_pla", m.face.eps_pla},
               {"evaluations", m.face.evaluations},
               {"converged", m.face.converged},
               {"coincident", m.coincident}};
  o["rotation"] = {{"period_deg", m.hole_input.period_deg},
                   {"objective", m.hole.objective},
                   {"best_grid_objective", m.hole.best_grid_objective}};
  return o;
}

void write_match_intermediates(const PointCloudd& a, const PointCloudd& b, const MatchOutput& m,
                               const std::string& out_dir, json& outputs) {
  const fs::path dir = ensure_dir(out_dir);
  std::vector<std::pair<std::string, PointCloudd>> files = {
      {"match_plane_a.ply", a.select(m.a.inliers)},
      {"match_plane_b.ply", b.select(m.b.inliers)},
      {"match_a_mated.ply", apply_transform(a, m.face.xf)},
  };
  json list = json::array();
  for (const auto& [name, cloud] : files) {
    write_cloud(cloud, dir / name, CloudFormat::PlyAscii);
    list.push_back(name);
  }
  outputs["intermediates"] = list;
}

}  // namespace

CommandResult cmd_thread(const PipelineConfig& cfg, const ThreadCommand& cmd) {
  StageLog log;
  json report = base_report("thread", config_json(cfg));
  report["inputs"] = {{"cloud", cmd.input}};
  return guarded(std::move(report), log, [&](json& r) {
    cfg.validate();
    const PointCloudd cloud = load(log, "read", cmd.input);
    const ThreadOutput t = run_thread(cloud, cfg, log);
    r["outputs"] = thread_outputs(t);
    r["warnings"] = t.warnings;
    if (cmd.keep_intermediate) {
      if (cmd.out_dir.empty()) throw config_error("--keep-intermediate needs --out");
      log.run("write", [&] { write_thread_intermediates(t, cmd.out_dir, r["outputs"]); });
    }
  });
}

CommandResult cmd_match(const PipelineConfig& cfg, const MatchCommand& cmd) {
  StageLog log;
  json report = base_report("match", config_json(cfg));
  report["inputs"] = {{"scan_a", cmd.scan_a}, {"scan_b", cmd.scan_b}};
  return guarded(std::move(report), log, [&](json& r) {
    cfg.validate();
    const PointCloudd a = load(log, "read", cmd.scan_a);
    const PointCloudd b = load(log, "read", cmd.scan_b);
    const MatchOutput m = run_match(a, b, cfg, log);
    r["outputs"] = match_outputs(m);
    r["warnings"] = m.warnings;
    if (cmd.keep_intermediate) {
      if (cmd.out_dir.empty()) throw config_error("--keep-intermediate needs --out");
      log.run("write", [&] {
        const PointCloudd ta = a.frame() == Frame::Camera ? transform_to_turbine_frame(a, cfg.turbine_offset) : a;
        const PointCloudd tb = b.frame() == Frame::Camera ? transform_to_turbine_frame(b, cfg.turbine_offset) : b;
        write_match_intermediates(ta, tb, m, cmd.out_dir, r["outputs"]);
      });
    }
  });
}

CommandResult cmd_full(const PipelineConfig& cfg, const FullCommand& cmd) {
  StageLog log;
  json report = base_report("full", config_json(cfg));
  report["inputs"] = {{"bolt", cmd.bolt}, {"scan_a", cmd.scan_a}, {"scan_b", cmd.scan_b}};
  return guarded(std::move(report), log, [&](json& r) {
    cfg.validate();
    const PointCloudd bolt = load(log, "read", cmd.bolt);
    const PointCloudd a = load(log, "read", cmd.scan_a);
    const PointCloudd b = load(log, "read", cmd.scan_b);
    StageLog thread_log, match_log;
    std::vector<std::string> warnings;
    try {
      const ThreadOutput t = run_thread(bolt, cfg, thread_log);
      r["outputs"]["thread"] = thread_outputs(t);
      for (const auto& w : t.warnings) warnings.push_back("thread: " + w);
      if (cmd.keep_intermediate && !cmd.out_dir.empty()) write_thread_intermediates(t, cmd.out_dir, r["outputs"]["thread"]);
      const MatchOutput m = run_match(a, b, cfg, match_log);
      r["outputs"]["match"] = match_outputs(m);
      for (const auto& w : m.warnings) warnings.push_back("match: " + w);
      if (cmd.keep_intermediate && !cmd.out_dir.empty())
        write_match_intermediates(a.frame() == Frame::Camera ? transform_to_turbine_frame(a, cfg.turbine_offset) : a,
                                  b.frame() == Frame::Camera ? transform_to_turbine_frame(b, cfg.turbine_offset) : b, m,
                                  cmd.out_dir, r["outputs"]["match"]);
    } catch (...) {
      r["warnings"] = warnings;
      for (const auto& [k, v] : thread_log.timings()) r["timings_ms"]["thread." + k] = v;
      for (const auto& [k, v] : match_log.timings()) r["timings_ms"]["match." + k] = v;
      throw;
    }
    r["warnings"] = warnings;
    for (const auto& [k, v] : thread_log.timings()) r["timings_ms"]["thread." + k] = v;
    for (const auto& [k, v] : match_log.timings()) r["timings_ms"]["match." + k] = v;
  });
}

namespace {

json truth_json(const FlangeTruth& t) {
  json ha = json::array(), hb = json::array(), rim = json::array();
  for (const auto& p : t.holes_a) ha.push_back(vec_json(p));
  for (const auto& p : t.holes_b) hb.push_back(vec_json(p));
  return {{"pose", to_json(t.pose)},
          {"plane_a", plane_json(t.plane_a, 0)},
          {"plane_b", plane_json(t.plane_b, 0)},
          {"holes_a", ha},
          {"holes_b", hb},
          {"shaft_axis", vec_json(t.shaft_axis)},
          {"shaft_point", vec_json(t.shaft_point)},
          {"nominal_gap", t.nominal_gap}};
}

void write_labels(const LabeledCloud& c, const std::string& name, std::ostream& out) {
  for (const auto& l : c.labels) out << name << ' ' << to_string(l) << '\n';
}

}  // namespace

CommandResult cmd_synth(const SynthCommand& cmd) {
  StageLog log;
  json spec = json::object();
  for (const auto& [k, v] : scene_entries(cmd.spec)) spec[k] = v;
  json report = base_report("synth", spec);
  return guarded(std::move(report), log, [&](json& r) {
    cmd.spec.validate();
    const fs::path dir = ensure_dir(cmd.out_dir);
    const std::string ext = cmd.format == CloudFormat::PlyAscii ? ".ply" : ".xyz";
    json files = json::array();
    auto emit_cloud = [&](const PointCloudd& cloud, const std::string& name) {
      write_cloud(cloud, dir / name, cmd.format);
      files.push_back(name);
    };
    auto emit_text = [&](const std::string& text, const std::string& name) {
      std::ofstream f(dir / name);
      if (!f) throw io_error("cannot write '" + (dir / name).string() + "'");
      f << text;
      files.push_back(name);
    };
    log.run("generate", [&] {
      if (cmd.kind == SceneKind::Bolt) {
        const LabeledCloud bolt = gen_bolt(cmd.spec);
        emit_cloud(bolt.cloud, "bolt" + ext);
        std::ostringstream labels;
        write_labels(bolt, "bolt" + ext, labels);
        emit_text(labels.str(), "labels.txt");
        const auto& h = cmd.spec.helix;
        const json truth = {{"kind", "bolt"},
                            {"radius", h.radius},
                            {"pitch", h.pitch},
                            {"phase", h.phase},
                            {"axis", vec_json(h.axis.normalized())},
                            {"origin", vec_json(h.origin)},
                            {"camera_offset", vec_json(cmd.spec.camera_offset)}};
        emit_text(truth.dump(2) + "\n", "truth.json");
      } else {
        const FlangeScene scene = gen_flange_pair(cmd.spec);
        emit_cloud(scene.a.cloud, "scan_a" + ext);
        emit_cloud(scene.b.cloud, "scan_b" + ext);
        std::ostringstream labels;
        write_labels(scene.a, "scan_a" + ext, labels);
        write_labels(scene.b, "scan_b" + ext, labels);
        emit_text(labels.str(), "labels.txt");
        json truth = truth_json(scene.truth);
        truth["kind"] = "flange";
        truth["camera_offset"] = vec_json(cmd.spec.camera_offset);
        emit_text(truth.dump(2) + "\n", "truth.json");
      }
    });
    r["outputs"] = {{"directory", cmd.out_dir}, {"files", files}};
  });
}

}  // namespace shaftdock
