#pragma once
// Helpers shared by the unit tests.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "shaftdock/cloud.hpp"
#include "shaftdock/rng.hpp"

namespace support {

using shaftdock::CounterRng;
using shaftdock::Point3d;
using shaftdock::PointCloudd;

inline PointCloudd gaussian_cloud(CounterRng& rng, int n, double scale = 1.0) {
  std::vector<Point3d> pts;
  for (int i = 0; i < n; ++i) pts.emplace_back(scale * rng.normal(), scale * rng.normal(), scale * rng.normal());
  return PointCloudd::from_points(pts);
}

inline Point3d random_unit(CounterRng& rng) {
  Point3d v(rng.normal(), rng.normal(), rng.normal());
  while (v.norm() < 1e-6) v = Point3d(rng.normal(), rng.normal(), rng.normal());
  return v.normalized();
}

/// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("shaftdock_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::string operator/(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

struct CliRun {
  int exit_code = -1;
  std::string out, err;
};

/// Runs the command-line tool inside `scratch` with `args` (already shell-quoted),
/// capturing both streams.
inline CliRun run_cli(const std::string& args, const TempDir& scratch) {
  const std::string out = scratch / "stdout.txt", err = scratch / "stderr.txt";
  const std::string cmd = "cd '" + scratch.path().string() + "' && " + std::string(SHAFTDOCK_CLI) + " " + args +
                          " >" + out + " 2>" + err;
  const int status = std::system(cmd.c_str());
  CliRun r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

}  // namespace support
