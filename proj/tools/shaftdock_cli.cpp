#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "shaftdock/pipeline.hpp"

using namespace shaftdock;

namespace {

struct Overrides {
  std::map<std::string, std::string> flags;  // flag name -> raw value
  std::vector<std::string> sets;             // key=value
};

// flag -> config keys it sets
const std::vector<std::pair<std::string, std::vector<std::string>>>& flag_keys() {
  static const std::vector<std::pair<std::string, std::vector<std::string>>> table = {
      {"--turbine-offset", {"turbine.offset"}},
      {"--sor-k", {"sor.k"}},
      {"--sor-nsigma", {"sor.nsigma"}},
      {"--pca-view", {"pca.view"}},
      {"--axis-override", {"pca.axis_override"}},
      {"--dbscan-eps", {"dbscan.eps"}},
      {"--dbscan-minpts", {"dbscan.minpts"}},
      {"--hough-res", {"hough.res"}},
      {"--hough-rmin", {"hough.rmin"}},
      {"--hough-rmax", {"hough.rmax"}},
      {"--hough-dmin", {"hough.dmin"}},
      {"--hough-dmax", {"hough.dmax"}},
      {"--ransac-k", {"plane.k1", "plane.k2", "hole.k"}},
      {"--ransac-tau", {"plane.tau", "hole.tau"}},
      {"--planes", {"plane.count"}},
      {"--expected-holes", {"hole.count"}},
      {"--seed", {"seed"}},
  };
  return table;
}

void add_pipeline_flags(CLI::App* app, Overrides& ov, std::string& config_path) {
  app->add_option("--config", config_path, "key = value configuration file");
  app->add_option("--set", ov.sets, "override a configuration key (key=value), repeatable");
  for (const auto& [flag, keys] : flag_keys()) {
    std::string help = "sets " + keys.front();
    for (std::size_t i = 1; i < keys.size(); ++i) help += ", " + keys[i];
    app->add_option_function<std::string>(flag, [&ov, name = flag](const std::string& v) { ov.flags[name] = v; }, help);
  }
}

PipelineConfig build_config(const std::string& config_path, const Overrides& ov) {
  PipelineConfig cfg = config_path.empty() ? PipelineConfig{} : load_config(config_path);
  for (const auto& [flag, keys] : flag_keys()) {
    const auto it = ov.flags.find(flag);
    if (it == ov.flags.end()) continue;
    for (const auto& k : keys) {
      try {
        apply_setting(cfg, k, it->second);
      } catch (const Error& e) {
        throw config_error(flag + ": " + e.what());
      }
    }
  }
  for (const auto& s : ov.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw config_error("--set expects key=value, got '" + s + "'");
    apply_setting(cfg, s.substr(0, eq), s.substr(eq + 1));
  }
  cfg.validate();
  return cfg;
}

int emit(const CommandResult& r, const std::string& out_dir) {
  std::cout << r.report.dump(2) << '\n';
  if (!out_dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    std::ofstream f(std::filesystem::path(out_dir) / "report.json");
    if (!f) {
      std::cerr << "shaftdock: error: cannot write report to '" << out_dir << "'\n";
      return r.exit_code == 0 ? static_cast<int>(ErrorKind::Io) : r.exit_code;
    }
    f << r.report.dump(2) << '\n';
  }
  if (r.exit_code != 0) std::cerr << "shaftdock: error: " << r.error << '\n';
  return r.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Shaft-hole docking measurement from point clouds"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  Overrides ov;
  std::string config_path, out_dir, synth_out = ".", spec_path, kind = "flange", format = "ply";
  bool keep = false;
  std::vector<std::string> scene_sets;
  std::string input, scan_a, scan_b, bolt;
  std::uint64_t synth_seed = 0;

  auto* synth = app.add_subcommand("synth", "generate an oracle scene with ground truth");
  synth->add_option("--spec", spec_path, "scene spec file (key = value)");
  synth->add_option("--set", scene_sets, "override a scene key (key=value), repeatable");
  synth->add_option("--kind", kind, "flange or bolt")->check(CLI::IsMember({"flange", "bolt"}));
  synth->add_option("--format", format, "ply or xyz")->check(CLI::IsMember({"ply", "xyz"}));
  synth->add_option("--out", synth_out, "output directory")->capture_default_str();
  synth->add_option("--seed", synth_seed, "scene seed (overrides the spec)");

  auto* thread = app.add_subcommand("thread", "extract the bolt thread helix");
  thread->add_option("input", input, "bolt point cloud (.ply, .xyz)")->required();
  auto* match = app.add_subcommand("match", "compute the docking pose of scan A onto scan B");
  match->add_option("scan_a", scan_a, "moving flange scan")->required();
  match->add_option("scan_b", scan_b, "fixed flange scan")->required();
  auto* full = app.add_subcommand("full", "thread extraction and docking pose in one report");
  full->add_option("bolt", bolt, "bolt point cloud")->required();
  full->add_option("scan_a", scan_a, "moving flange scan")->required();
  full->add_option("scan_b", scan_b, "fixed flange scan")->required();
  for (auto* sub : {thread, match, full}) {
    add_pipeline_flags(sub, ov, config_path);
    sub->add_option("--out", out_dir, "directory for report.json and intermediates");
    sub->add_flag("--keep-intermediate", keep, "write stage clouds to --out");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return static_cast<int>(ErrorKind::Config);
  }

  try {
    if (synth->parsed()) {
      SynthCommand cmd;
      cmd.spec = spec_path.empty() ? SceneSpec{} : load_scene(spec_path);
      for (const auto& s : scene_sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw config_error("--set expects key=value, got '" + s + "'");
        apply_scene_setting(cmd.spec, s.substr(0, eq), s.substr(eq + 1));
      }
      if (synth->count("--seed")) cmd.spec.seed = synth_seed;
      cmd.kind = kind == "bolt" ? SceneKind::Bolt : SceneKind::Flange;
      cmd.format = format == "xyz" ? CloudFormat::Xyz : CloudFormat::PlyAscii;
      cmd.out_dir = synth_out;
      const CommandResult r = cmd_synth(cmd);
      std::cout << r.report.dump(2) << '\n';
      if (r.exit_code != 0) std::cerr << "shaftdock: error: " << r.error << '\n';
      return r.exit_code;
    }
    const PipelineConfig cfg = build_config(config_path, ov);
    if (keep && out_dir.empty()) throw config_error("--keep-intermediate needs --out");
    if (thread->parsed()) return emit(cmd_thread(cfg, {input, out_dir, keep}), out_dir);
    if (match->parsed()) return emit(cmd_match(cfg, {scan_a, scan_b, out_dir, keep}), out_dir);
    return emit(cmd_full(cfg, {bolt, scan_a, scan_b, out_dir, keep}), out_dir);
  } catch (const Error& e) {
    std::cerr << "shaftdock: error: " << e.what() << '\n';
    return static_cast<int>(e.kind());
  }
}
