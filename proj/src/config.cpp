#include "shaftdock/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <set>
#include <sstream>

#include "shaftdock/io.hpp"

namespace shaftdock {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const std::string& expected) {
  throw config_error(key + ": invalid value '" + value + "' (expected " + expected + ")");
}

double to_double(const std::string& key, const std::string& s) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) bad_value(key, s, "a finite number");
  return v;
}

long long to_integer(const std::string& key, const std::string& s) {
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) bad_value(key, s, "an integer");
  return v;
}

int to_int(const std::string& key, const std::string& s) {
  const long long v = to_integer(key, s);
  if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) bad_value(key, s, "an int");
  return static_cast<int>(v);
}

std::uint64_t to_u64(const std::string& key, const std::string& s) {
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) bad_value(key, s, "a non-negative integer");
  return v;
}

bool to_bool(const std::string& key, const std::string& s) {
  if (s == "true" || s == "1") return true;
  if (s == "false" || s == "0") return false;
  bad_value(key, s, "true or false");
}

Point3d to_vec3(const std::string& key, const std::string& s) {
  std::vector<std::string> parts;
  std::stringstream ss(s);
  std::string part;
  while (std::getline(ss, part, ',')) parts.push_back(trim(part));
  if (parts.size() != 3) bad_value(key, s, "x,y,z");
  return {to_double(key, parts[0]), to_double(key, parts[1]), to_double(key, parts[2])};
}

std::string vec3_str(const Point3d& p) {
  return format_double(p.x()) + "," + format_double(p.y()) + "," + format_double(p.z());
}

std::string num(double v) { return format_double(v); }

template <typename T>
struct Field {
  std::string key;
  std::function<void(T&, const std::string&, const std::string&)> set;
  std::function<std::string(const T&)> get;
};

#define SD_REAL(key, expr)                                                                    \
  Field<PipelineConfig> {                                                                     \
    key, [](PipelineConfig& c, const std::string& k, const std::string& v) { expr = to_double(k, v); }, \
        [](const PipelineConfig& c) { return num(expr); }                                     \
  }

const std::vector<Field<PipelineConfig>>& config_fields() {
  using C = PipelineConfig;
  using S = std::string;
  static const std::vector<Field<C>> fields = {
      {"turbine.offset", [](C& c, const S& k, const S& v) { c.turbine_offset = to_vec3(k, v); },
       [](const C& c) { return vec3_str(c.turbine_offset); }},
      {"sor.k", [](C& c, const S& k, const S& v) { c.sor.k = to_int(k, v); },
       [](const C& c) { return std::to_string(c.sor.k); }},
      SD_REAL("sor.nsigma", c.sor.n_sigma),
      {"sor.statistic",
       [](C& c, const S& k, const S& v) {
         if (v == "mean") c.sor.statistic = SorStatistic::Mean;
         else if (v == "sum") c.sor.statistic = SorStatistic::Sum;
         else bad_value(k, v, "mean or sum");
       },
       [](const C& c) { return S(c.sor.statistic == SorStatistic::Mean ? "mean" : "sum"); }},
      {"pca.view",
       [](C& c, const S& k, const S& v) {
         if (v == "12") c.view = ProjectionPlane::P12;
         else if (v == "13") c.view = ProjectionPlane::P13;
         else if (v == "23") c.view = ProjectionPlane::P23;
         else bad_value(k, v, "12, 13 or 23");
       },
       [](const C& c) {
         return S(c.view == ProjectionPlane::P12 ? "12" : c.view == ProjectionPlane::P13 ? "13" : "23");
       }},
      {"pca.axis_override",
       [](C& c, const S& k, const S& v) {
         if (v == "none" || v.empty()) {
           c.axis_override.reset();
           return;
         }
         c.axis_override = to_vec3(k, v);
       },
       [](const C& c) { return c.axis_override ? vec3_str(*c.axis_override) : S("none"); }},
      SD_REAL("dbscan.eps", c.dbscan.eps),
      {"dbscan.minpts", [](C& c, const S& k, const S& v) { c.dbscan.min_pts = to_int(k, v); },
       [](const C& c) { return std::to_string(c.dbscan.min_pts); }},
      {"dbscan.mode",
       [](C& c, const S& k, const S& v) {
         if (v == "full") c.dbscan_mode = DbscanMode::Full;
         else if (v == "seed") c.dbscan_mode = DbscanMode::SeedOnly;
         else bad_value(k, v, "full or seed");
       },
       [](const C& c) { return S(c.dbscan_mode == DbscanMode::Full ? "full" : "seed"); }},
      {"hough.res",
       [](C& c, const S& k, const S& v) { c.hough.r_res = c.hough.d_res = c.hough.phi_res = to_double(k, v); },
       [](const C& c) { return num(c.hough.r_res); }},
      SD_REAL("hough.rmin", c.hough.r_min),
      SD_REAL("hough.rmax", c.hough.r_max),
      SD_REAL("hough.dmin", c.hough.d_min),
      SD_REAL("hough.dmax", c.hough.d_max),
      {"hough.min_votes",
       [](C& c, const S& k, const S& v) {
         const long long n = to_integer(k, v);
         if (n < 1 || n > 1000000000) bad_value(k, v, "an integer in [1, 1e9]");
         c.hough.min_votes = static_cast<std::uint32_t>(n);
       },
       [](const C& c) { return std::to_string(c.hough.min_votes); }},
      {"hough.refine_iterations", [](C& c, const S& k, const S& v) { c.hough.refine_iterations = to_int(k, v); },
       [](const C& c) { return std::to_string(c.hough.refine_iterations); }},
      {"thread.refine_axis", [](C& c, const S& k, const S& v) { c.refine_axis = to_bool(k, v); },
       [](const C& c) { return S(c.refine_axis ? "true" : "false"); }},
      {"plane.count", [](C& c, const S& k, const S& v) { c.plane.models = to_int(k, v); },
       [](const C& c) { return std::to_string(c.plane.models); }},
      {"plane.k1",
       [](C& c, const S& k, const S& v) {
         c.plane.per_model_iterations.resize(2, c.plane.iterations);
         c.plane.per_model_iterations[0] = c.plane.iterations = to_int(k, v);
       },
       [](const C& c) { return std::to_string(c.plane.iterations_for(0)); }},
      {"plane.k2",
       [](C& c, const S& k, const S& v) {
         c.plane.per_model_iterations.resize(2, c.plane.iterations);
         c.plane.per_model_iterations[1] = to_int(k, v);
       },
       [](const C& c) { return std::to_string(c.plane.iterations_for(1)); }},
      SD_REAL("plane.tau", c.plane.threshold),
      {"hole.count", [](C& c, const S& k, const S& v) { c.hole.models = to_int(k, v); },
       [](const C& c) { return std::to_string(c.hole.models); }},
      {"hole.k", [](C& c, const S& k, const S& v) { c.hole.iterations = to_int(k, v); },
       [](const C& c) { return std::to_string(c.hole.iterations); }},
      SD_REAL("hole.tau", c.hole.threshold),
      SD_REAL("hole.max_tilt_deg", c.hole_max_tilt_deg),
      SD_REAL("match.h0", c.h0),
      SD_REAL("match.d0", c.d0),
      SD_REAL("match.gap", c.gap),
      {"match.combination",
       [](C& c, const S& k, const S& v) {
         if (v == "symmetric") c.combination = FaceCombination::Symmetric;
         else if (v == "a") c.combination = FaceCombination::AOnly;
         else if (v == "b") c.combination = FaceCombination::BOnly;
         else bad_value(k, v, "symmetric, a or b");
       },
       [](const C& c) {
         return S(c.combination == FaceCombination::Symmetric ? "symmetric"
                  : c.combination == FaceCombination::AOnly ? "a" : "b");
       }},
      SD_REAL("match.period_deg", c.period_deg),
      {"match.objective",
       [](C& c, const S& k, const S& v) {
         if (v == "max") c.objective = HoleObjective::Max;
         else if (v == "spread") c.objective = HoleObjective::Spread;
         else bad_value(k, v, "max or spread");
       },
       [](const C& c) { return S(c.objective == HoleObjective::Max ? "max" : "spread"); }},
      SD_REAL("match.grid_step_deg", c.grid_step_deg),
      {"match.max_evaluations", [](C& c, const S& k, const S& v) { c.face_max_evaluations = to_int(k, v); },
       [](const C& c) { return std::to_string(c.face_max_evaluations); }},
      {"seed", [](C& c, const S& k, const S& v) { c.seed = to_u64(k, v); },
       [](const C& c) { return std::to_string(c.seed); }},
  };
  return fields;
}
#undef SD_REAL

#define SD_SCENE_REAL(key, expr)                                                              \
  Field<SceneSpec> {                                                                          \
    key, [](SceneSpec& c, const std::string& k, const std::string& v) { expr = to_double(k, v); }, \
        [](const SceneSpec& c) { return num(expr); }                                          \
  }
#define SD_SCENE_INT(key, expr)                                                               \
  Field<SceneSpec> {                                                                          \
    key, [](SceneSpec& c, const std::string& k, const std::string& v) { expr = to_int(k, v); }, \
        [](const SceneSpec& c) { return std::to_string(expr); }                              \
  }
#define SD_SCENE_VEC(key, expr)                                                               \
  Field<SceneSpec> {                                                                          \
    key, [](SceneSpec& c, const std::string& k, const std::string& v) { expr = to_vec3(k, v); }, \
        [](const SceneSpec& c) { return vec3_str(expr); }                                    \
  }

const std::vector<Field<SceneSpec>>& scene_fields() {
  static const std::vector<Field<SceneSpec>> fields = {
      SD_SCENE_REAL("helix.radius", c.helix.radius),
      SD_SCENE_REAL("helix.pitch", c.helix.pitch),
      SD_SCENE_REAL("helix.phase", c.helix.phase),
      SD_SCENE_REAL("helix.turns", c.helix.turns),
      SD_SCENE_REAL("helix.points_per_turn", c.helix.points_per_turn),
      SD_SCENE_REAL("helix.thread_depth", c.helix.thread_depth),
      SD_SCENE_REAL("helix.core_points_per_turn", c.helix.core_points_per_turn),
      SD_SCENE_VEC("helix.axis", c.helix.axis),
      SD_SCENE_VEC("helix.origin", c.helix.origin),
      SD_SCENE_REAL("flange.outer_radius", c.flange.outer_radius),
      SD_SCENE_REAL("flange.inner_radius", c.flange.inner_radius),
      SD_SCENE_INT("flange.hole_count", c.flange.hole_count),
      SD_SCENE_REAL("flange.hole_radius", c.flange.hole_radius),
      SD_SCENE_REAL("flange.bolt_circle_radius", c.flange.bolt_circle_radius),
      SD_SCENE_REAL("flange.hole_phase_deg", c.flange.hole_phase_deg),
      SD_SCENE_REAL("flange.hole_depth", c.flange.hole_depth),
      SD_SCENE_REAL("flange.band_height", c.flange.band_height),
      SD_SCENE_INT("flange.face_points", c.flange.face_points),
      SD_SCENE_REAL("pose.tilt_deg", c.pose.tilt_deg),
      SD_SCENE_REAL("pose.tilt_azimuth_deg", c.pose.tilt_azimuth_deg),
      SD_SCENE_REAL("pose.gap", c.pose.gap),
      SD_SCENE_REAL("pose.theta_deg", c.pose.theta_deg),
      SD_SCENE_REAL("pose.offset_x", c.pose.offset_x),
      SD_SCENE_REAL("pose.offset_y", c.pose.offset_y),
      SD_SCENE_REAL("pose.nominal_gap", c.pose.nominal_gap),
      SD_SCENE_REAL("noise_sigma", c.noise_sigma),
      SD_SCENE_REAL("outlier_fraction", c.outlier_fraction),
      SD_SCENE_REAL("outlier_bbox_scale", c.outlier_bbox_scale),
      SD_SCENE_VEC("camera_offset", c.camera_offset),
      {"seed", [](SceneSpec& c, const std::string& k, const std::string& v) { c.seed = to_u64(k, v); },
       [](const SceneSpec& c) { return std::to_string(c.seed); }},
  };
  return fields;
}
#undef SD_SCENE_REAL
#undef SD_SCENE_INT
#undef SD_SCENE_VEC

template <typename T>
void apply(const std::vector<Field<T>>& fields, T& target, const std::string& key, const std::string& value) {
  for (const auto& f : fields)
    if (f.key == key) {
      f.set(target, key, trim(value));
      return;
    }
  throw config_error("unknown key '" + key + "'");
}

template <typename T>
std::vector<std::pair<std::string, std::string>> entries(const std::vector<Field<T>>& fields, const T& target) {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& f : fields) out.emplace_back(f.key, f.get(target));
  return out;
}

}  // namespace

void PipelineConfig::validate() const {
  sor.validate();
  if (axis_override && !(axis_override->norm() > 0.0)) throw config_error("pca.axis_override must be non-zero");
  if (dbscan.eps < 0.0) throw config_error("dbscan.eps must be >= 0 (0 selects the k-distance heuristic)");
  if (dbscan.min_pts < 1) throw config_error("dbscan.minpts must be >= 1");
  hough.validate();
  plane.validate("plane");
  hole.validate("hole");
  if (plane.models != 2) throw config_error("plane.count must be 2 (one mating face per scan)");
  if (hole.models < 1) throw config_error("hole.count must be >= 1");
  if (!(hole_max_tilt_deg > 0.0 && hole_max_tilt_deg < 90.0)) throw config_error("hole.max_tilt_deg must be in (0, 90)");
  if (!(h0 > 0.0)) throw config_error("match.h0 must be > 0");
  if (!(d0 > 0.0)) throw config_error("match.d0 must be > 0");
  if (gap < 0.0) throw config_error("match.gap must be >= 0");
  if (period_deg < 0.0 || period_deg > 360.0) throw config_error("match.period_deg must be in [0, 360]");
  if (!(grid_step_deg > 0.0)) throw config_error("match.grid_step_deg must be > 0");
  if (face_max_evaluations < 1) throw config_error("match.max_evaluations must be >= 1");
}

namespace {

struct Entry {
  std::string key, value, where;  // where: "source:line: "
};

std::vector<Entry> parse_entries(const std::string& text, const std::string& source) {
  std::vector<Entry> out;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    std::string where = source + ":" + std::to_string(lineno) + ": ";
    if (eq == std::string::npos) throw config_error(where + "expected 'key = value'");
    std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    if (key.empty()) throw config_error(where + "empty key");
    if (!seen.insert(key).second) throw config_error(where + "duplicate key '" + key + "'");
    out.push_back({std::move(key), std::move(value), std::move(where)});
  }
  return out;
}

template <typename T, typename Apply>
T parse_with(const std::string& text, const std::string& source, Apply apply_one) {
  T target;
  for (const auto& e : parse_entries(text, source)) {
    try {
      apply_one(target, e.key, e.value);
    } catch (const Error& err) {
      throw config_error(e.where + err.what());
    }
  }
  try {
    target.validate();
  } catch (const Error& err) {
    throw config_error(source + ": " + err.what());
  }
  return target;
}

}  // namespace

std::vector<std::pair<std::string, std::string>> parse_key_values(const std::string& text, const std::string& source) {
  std::vector<std::pair<std::string, std::string>> out;
  for (auto& e : parse_entries(text, source)) out.emplace_back(std::move(e.key), std::move(e.value));
  return out;
}

void apply_setting(PipelineConfig& cfg, const std::string& key, const std::string& value) {
  apply(config_fields(), cfg, key, value);
}

PipelineConfig parse_config(const std::string& text, const std::string& source) {
  return parse_with<PipelineConfig>(text, source, apply_setting);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

PipelineConfig load_config(const std::string& path) { return parse_config(read_text_file(path), path); }

std::vector<std::pair<std::string, std::string>> config_entries(const PipelineConfig& cfg) {
  return entries(config_fields(), cfg);
}

void apply_scene_setting(SceneSpec& spec, const std::string& key, const std::string& value) {
  apply(scene_fields(), spec, key, value);
}

SceneSpec parse_scene(const std::string& text, const std::string& source) {
  return parse_with<SceneSpec>(text, source, apply_scene_setting);
}

SceneSpec load_scene(const std::string& path) { return parse_scene(read_text_file(path), path); }

std::vector<std::pair<std::string, std::string>> scene_entries(const SceneSpec& spec) {
  return entries(scene_fields(), spec);
}

}  // namespace shaftdock
