#pragma once

#include <chrono>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "shaftdock/config.hpp"
#include "shaftdock/holes.hpp"
#include "shaftdock/io.hpp"

namespace shaftdock {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr int kReportSchemaVersion = 1;

/// Error raised inside a named pipeline stage.
class StageError : public Error {
 public:
  StageError(ErrorKind kind, std::string stage, const std::string& what)
      : Error(kind, "stage '" + stage + "': " + what), stage_(std::move(stage)) {}
  const std::string& stage() const noexcept { return stage_; }

 private:
  std::string stage_;
};

/// Runs stages in order, timing each and tagging failures with the stage name.
class StageLog {
 public:
  template <typename F>
  decltype(auto) run(const std::string& name, F&& f) {
    const auto start = std::chrono::steady_clock::now();
    try {
      if constexpr (std::is_void_v<decltype(f())>) {
        f();
        record(name, start);
      } else {
        decltype(auto) r = f();
        record(name, start);
        return r;
      }
    } catch (const StageError&) {
      throw;
    } catch (const Error& e) {
      throw StageError(e.kind(), name, e.what());
    } catch (const std::exception& e) {
      throw StageError(ErrorKind::Processing, name, e.what());
    }
  }

  const std::vector<std::pair<std::string, double>>& timings() const { return timings_; }

 private:
  void record(const std::string& name, std::chrono::steady_clock::time_point start) {
    timings_.emplace_back(name, std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count());
  }
  std::vector<std::pair<std::string, double>> timings_;
};

struct ThreadOutput {
  PointCloudd turbine;
  SorResult<double> sor;
  PcaBasisd basis;
  Projection2D<double> projection;  // along the final thread axis
  ClusterLabeling labeling;
  ThreadCluster<double> cluster;
  AxisFrame frame;
  HoughFit fit;
  std::vector<std::string> warnings;
};

/// transform -> SOR -> PCA -> project -> seed + DBSCAN -> (axis refinement, re-cluster) -> Hough.
ThreadOutput run_thread(const PointCloudd& cloud, const PipelineConfig& cfg, StageLog& log);

/// Projection onto the x-y plane of `frame`.
Projection2D<double> project_along(const PointCloudd& cloud, const AxisFrame& frame, ProjectionPlane label);

struct FaceSide {
  PlaneModeld plane;                  // normal points towards the other face
  std::vector<Eigen::Index> inliers;  // plane inliers in the scan
  std::vector<HoleCandidate> candidates;
  std::vector<HoleAxis> holes;
};

struct MatchOutput {
  FaceSide a, b;
  bool coincident = false;  // both faces are the same surface: mate in place, zero gap
  Point3d shaft_axis = Point3d::UnitZ();
  Point3d shaft_point = Point3d::Zero();
  bool shaft_fitted = false;
  FaceMatchResult<double> face;
  HoleMatchInput<double> hole_input;
  HoleMatchResult<double> hole;
  PoseSolutiond pose;
  std::vector<std::string> warnings;
};

/// planes -> hole pre-search -> hole axes -> shaft axis -> face pose -> hole rotation.
MatchOutput run_match(const PointCloudd& scan_a, const PointCloudd& scan_b, const PipelineConfig& cfg, StageLog& log);

nlohmann::json to_json(const PoseSolutiond& pose);
PoseSolutiond pose_from_json(const nlohmann::json& j);
nlohmann::json to_json(const HelixModel& model);
nlohmann::json config_json(const PipelineConfig& cfg);

struct CommandResult {
  int exit_code = 0;
  nlohmann::json report;
  std::string error;  // empty on success
};

struct ThreadCommand {
  std::string input;
  std::string out_dir;  // empty: no files written
  bool keep_intermediate = false;
};

struct MatchCommand {
  std::string scan_a, scan_b;
  std::string out_dir;
  bool keep_intermediate = false;
};

struct FullCommand {
  std::string bolt, scan_a, scan_b;
  std::string out_dir;
  bool keep_intermediate = false;
};

enum class SceneKind { Flange, Bolt };

struct SynthCommand {
  SceneSpec spec;
  SceneKind kind = SceneKind::Flange;
  CloudFormat format = CloudFormat::PlyAscii;
  std::string out_dir = ".";
};

CommandResult cmd_thread(const PipelineConfig& cfg, const ThreadCommand& cmd);
CommandResult cmd_match(const PipelineConfig& cfg, const MatchCommand& cmd);
CommandResult cmd_full(const PipelineConfig& cfg, const FullCommand& cmd);
CommandResult cmd_synth(const SynthCommand& cmd);

/// Report with the timings removed, for comparisons between runs.
nlohmann::json without_timings(nlohmann::json report);

}  // namespace shaftdock
