#include <gtest/gtest.h>

#include <fstream>

#include "shaftdock/pipeline.hpp"
#include "support.hpp"

using namespace shaftdock;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// Subset of JSON Schema used by docs/report.schema.json: type, enum, required,
// properties, additionalProperties, items, minItems, maxItems, minimum, $ref.
class MiniValidator {
 public:
  explicit MiniValidator(json root) : root_(std::move(root)) {}

  std::vector<std::string> validate(const json& v) const {
    std::vector<std::string> errors;
    check(root_, v, "$", errors);
    return errors;
  }

 private:
  const json& resolve(const json& s) const {
    if (!s.contains("$ref")) return s;
    const std::string ref = s["$ref"];
    const std::string prefix = "#/$defs/";
    return root_.at("$defs").at(ref.substr(prefix.size()));
  }

  static bool has_type(const json& v, const std::string& t) {
    if (t == "object") return v.is_object();
    if (t == "array") return v.is_array();
    if (t == "string") return v.is_string();
    if (t == "boolean") return v.is_boolean();
    if (t == "integer") return v.is_number_integer();
    if (t == "number") return v.is_number();
    return false;
  }

  void check(const json& schema, const json& v, const std::string& at, std::vector<std::string>& errors) const {
    const json& s = resolve(schema);
    if (s.contains("type") && !has_type(v, s["type"])) {
      errors.push_back(at + ": expected " + s["type"].get<std::string>());
      return;
    }
    if (s.contains("enum") && std::find(s["enum"].begin(), s["enum"].end(), v) == s["enum"].end())
      errors.push_back(at + ": value not in enum");
    if (s.contains("minimum") && v.is_number() && v.get<double>() < s["minimum"].get<double>())
      errors.push_back(at + ": below minimum");
    if (v.is_object()) {
      if (s.contains("required"))
        for (const auto& k : s["required"])
          if (!v.contains(k.get<std::string>())) errors.push_back(at + ": missing " + k.get<std::string>());
      for (auto it = v.begin(); it != v.end(); ++it) {
        if (s.contains("properties") && s["properties"].contains(it.key()))
          check(s["properties"][it.key()], it.value(), at + "." + it.key(), errors);
        else if (s.contains("additionalProperties") && s["additionalProperties"].is_object())
          check(s["additionalProperties"], it.value(), at + "." + it.key(), errors);
      }
    }
    if (v.is_array()) {
      if (s.contains("minItems") && v.size() < s["minItems"].get<std::size_t>()) errors.push_back(at + ": too few items");
      if (s.contains("maxItems") && v.size() > s["maxItems"].get<std::size_t>()) errors.push_back(at + ": too many items");
      if (s.contains("items"))
        for (std::size_t i = 0; i < v.size(); ++i) check(s["items"], v[i], at + "[" + std::to_string(i) + "]", errors);
    }
  }

  json root_;
};

MiniValidator schema() {
  std::ifstream f(SHAFTDOCK_SCHEMA);
  return MiniValidator(json::parse(f));
}

std::string q(const std::string& s) { return "'" + s + "'"; }

/// One default flange pair and bolt, generated once for the whole suite.
struct Fixture {
  support::TempDir dir{"pipeline"};
  Fixture() {
    SynthCommand f;
    f.out_dir = dir / "flange";
    SynthCommand b;
    b.kind = SceneKind::Bolt;
    b.out_dir = dir / "bolt";
    if (cmd_synth(f).exit_code != 0 || cmd_synth(b).exit_code != 0) throw std::runtime_error("synth failed");
  }
  std::string a() const { return dir / "flange/scan_a.ply"; }
  std::string b() const { return dir / "flange/scan_b.ply"; }
  std::string bolt() const { return dir / "bolt/bolt.ply"; }
};

const Fixture& fixture() {
  static Fixture f;
  return f;
}

}  // namespace

TEST(Synth, DefaultWritesFourFiles) {
  support::TempDir dir("synth");
  const auto r = support::run_cli("synth --out " + q(dir / "s"), dir);
  ASSERT_EQ(r.exit_code, 0) << r.err;
  for (const char* f : {"scan_a.ply", "scan_b.ply", "labels.txt", "truth.json"}) EXPECT_TRUE(fs::exists(dir.path() / "s" / f)) << f;
  EXPECT_EQ(std::distance(fs::directory_iterator(dir.path() / "s"), fs::directory_iterator{}), 4);
  const auto truth = json::parse(support::slurp(dir.path() / "s" / "truth.json"));
  EXPECT_TRUE(truth.contains("pose"));
}

TEST(Pipeline, ThreadKeepsFiveIntermediates) {
  support::TempDir dir("thread");
  const auto r = support::run_cli("thread " + q(fixture().bolt()) + " --out " + q(dir / "o") + " --keep-intermediate", dir);
  ASSERT_EQ(r.exit_code, 0) << r.err;
  int ply = 0;
  for (const auto& e : fs::directory_iterator(dir.path() / "o")) ply += e.path().extension() == ".ply";
  EXPECT_EQ(ply, 5);
  EXPECT_TRUE(fs::exists(dir.path() / "o" / "report.json"));
  const auto report = json::parse(r.out);
  EXPECT_EQ(report["status"], "ok");
  EXPECT_NEAR(report["outputs"]["helix"]["radius"].get<double>(), 5.0, 0.01);
  EXPECT_NEAR(report["outputs"]["helix"]["pitch"].get<double>(), 1.0, 0.01);
}

TEST(Pipeline, MissingFileExitsTwoNamingPath) {
  support::TempDir dir("missing");
  const auto r = support::run_cli("thread /no/such/bolt.ply", dir);
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_NE(r.err.find("/no/such/bolt.ply"), std::string::npos) << r.err;
  const auto m = support::run_cli("match " + q(fixture().a()) + " /no/such/b.ply", dir);
  EXPECT_EQ(m.exit_code, 2);
  EXPECT_NE(m.err.find("/no/such/b.ply"), std::string::npos) << m.err;
}

TEST(Pipeline, ConfigErrorsExitThree) {
  support::TempDir dir("config");
  EXPECT_EQ(support::run_cli("thread " + q(fixture().bolt()) + " --set bogus=1", dir).exit_code, 3);
  EXPECT_EQ(support::run_cli("match " + q(fixture().a()) + " " + q(fixture().b()) + " --planes 0", dir).exit_code, 3);
  EXPECT_EQ(support::run_cli("thread " + q(fixture().bolt()) + " --sor-k -1", dir).exit_code, 3);
  EXPECT_EQ(support::run_cli("frobnicate", dir).exit_code, 3);
}

TEST(Pipeline, ProcessingFailureExitsOne) {
  support::TempDir dir("processing");
  const auto r = support::run_cli("thread " + q(fixture().a()) + " --hough-rmin 80 --hough-rmax 90", dir);
  EXPECT_EQ(r.exit_code, 1) << r.err;
  const auto report = json::parse(r.out);
  EXPECT_EQ(report["status"], "failed");
  EXPECT_TRUE(report.contains("failed_stage"));
  EXPECT_TRUE(schema().validate(report).empty());
}

TEST(Pipeline, IdenticalScansGiveIdentityPose) {
  const auto r = cmd_match(PipelineConfig{}, {fixture().a(), fixture().a(), "", false});
  ASSERT_EQ(r.exit_code, 0) << r.error;
  const auto pose = pose_from_json(r.report["outputs"]["pose"]);
  EXPECT_LT((pose.xf.rotation - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_LT(pose.xf.translation.norm(), 1e-9);
  const double theta = std::min(pose.theta_deg, 60.0 - pose.theta_deg);
  EXPECT_LT(theta, 1e-3);
  EXPECT_FALSE(r.report["warnings"].empty());
}

TEST(Pipeline, MatchRecoversTruth) {
  const auto r = cmd_match(PipelineConfig{}, {fixture().a(), fixture().b(), "", false});
  ASSERT_EQ(r.exit_code, 0) << r.error;
  const auto truth = json::parse(support::slurp(fs::path(fixture().a()).parent_path() / "truth.json"));
  const auto pose = pose_from_json(r.report["outputs"]["pose"]);
  EXPECT_NEAR(pose.theta_deg, truth["pose"]["theta_deg"].get<double>(), 0.07);
  EXPECT_TRUE(schema().validate(r.report).empty());
}

TEST(Pipeline, DeterministicExceptTimings) {
  const PipelineConfig cfg;
  const FullCommand cmd{fixture().bolt(), fixture().a(), fixture().b(), "", false};
  const auto a = cmd_full(cfg, cmd), b = cmd_full(cfg, cmd);
  ASSERT_EQ(a.exit_code, 0) << a.error;
  EXPECT_EQ(without_timings(a.report).dump(), without_timings(b.report).dump());
}

TEST(Pipeline, ReportsMatchSchema) {
  const auto v = schema();
  const auto full = cmd_full(PipelineConfig{}, {fixture().bolt(), fixture().a(), fixture().b(), "", false});
  ASSERT_EQ(full.exit_code, 0) << full.error;
  for (const auto& e : v.validate(full.report)) ADD_FAILURE() << e;
  const auto thread = cmd_thread(PipelineConfig{}, {fixture().bolt(), "", false});
  for (const auto& e : v.validate(thread.report)) ADD_FAILURE() << e;
  support::TempDir dir("schema");
  SynthCommand s;
  s.out_dir = dir / "s";
  for (const auto& e : v.validate(cmd_synth(s).report)) ADD_FAILURE() << e;
  // the validator itself rejects a broken report
  auto broken = full.report;
  broken["outputs"]["match"]["pose"]["t"] = json::array({1, 2});
  broken.erase("status");
  EXPECT_GE(v.validate(broken).size(), 2u);
}

TEST(Pipeline, CliReportMatchesLibrary) {
  support::TempDir dir("cli");
  const auto r = support::run_cli("match " + q(fixture().a()) + " " + q(fixture().b()), dir);
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_FALSE(fs::exists(dir.path() / "report.json")) << "report written without --out";
  const auto lib = cmd_match(PipelineConfig{}, {fixture().a(), fixture().b(), "", false});
  EXPECT_EQ(without_timings(json::parse(r.out))["outputs"].dump(), without_timings(lib.report)["outputs"].dump());
}

TEST(Pipeline, LagAtPatternBoundary) {
  for (double lag : {0.0, 59.98}) {
    SceneSpec spec;
    spec.noise_sigma = lag == 0.0 ? 0.0 : 0.02;
    spec.pose.theta_deg = lag;
    spec.flange.face_points = 8000;
    const auto scene = gen_flange_pair(spec);
    StageLog log;
    const auto m = run_match(scene.a.cloud, scene.b.cloud, PipelineConfig{}, log);
    double err = std::fmod(std::abs(m.pose.theta_deg - lag), 60.0);
    err = std::min(err, 60.0 - err);
    EXPECT_LT(err, lag == 0.0 ? 1e-3 : 0.07) << "lag " << lag << " got " << m.pose.theta_deg;
  }
}
