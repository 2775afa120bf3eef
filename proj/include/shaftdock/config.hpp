#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "shaftdock/dbscan.hpp"
#include "shaftdock/helix.hpp"
#include "shaftdock/pca.hpp"
#include "shaftdock/pose.hpp"
#include "shaftdock/ransac.hpp"
#include "shaftdock/sor.hpp"
#include "shaftdock/synth.hpp"

namespace shaftdock {

enum class DbscanMode { Full, SeedOnly };

struct PipelineConfig {
  Point3d turbine_offset = Point3d::Zero();  // camera origin expressed in the turbine frame
  SorParams sor;
  ProjectionPlane view = ProjectionPlane::P12;
  std::optional<Point3d> axis_override;
  DbscanParams dbscan;
  DbscanMode dbscan_mode = DbscanMode::Full;
  HoughConfig hough;
  bool refine_axis = true;
  RansacConfig plane{1000, 0.05, 2, {1000, 1500}};
  RansacConfig hole{1000, 0.05, 6, {}};
  double hole_max_tilt_deg = 15.0;
  double h0 = 1.0;
  double d0 = 0.5;
  double gap = 1.0;
  FaceCombination combination = FaceCombination::Symmetric;
  double period_deg = 0.0;  // 0: 360 / hole count
  HoleObjective objective = HoleObjective::Spread;
  double grid_step_deg = 0.01;
  int face_max_evaluations = 500;
  std::uint64_t seed = 1;

  void validate() const;
};

/// `key = value` lines, '#' comments. Unknown or repeated keys are config errors.
std::vector<std::pair<std::string, std::string>> parse_key_values(const std::string& text, const std::string& source);

void apply_setting(PipelineConfig& cfg, const std::string& key, const std::string& value);
PipelineConfig parse_config(const std::string& text, const std::string& source = "<config>");
PipelineConfig load_config(const std::string& path);
/// Every key with its current value, in a fixed order.
std::vector<std::pair<std::string, std::string>> config_entries(const PipelineConfig& cfg);

void apply_scene_setting(SceneSpec& spec, const std::string& key, const std::string& value);
SceneSpec parse_scene(const std::string& text, const std::string& source = "<scene>");
SceneSpec load_scene(const std::string& path);
std::vector<std::pair<std::string, std::string>> scene_entries(const SceneSpec& spec);

std::string read_text_file(const std::string& path);

}  // namespace shaftdock
