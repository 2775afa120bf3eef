#include "shaftdock/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

namespace shaftdock {
namespace {

std::vector<std::string> split_ws(const std::string& line) {
  std::istringstream in(line);
  std::vector<std::string> out;
  for (std::string tok; in >> tok;) out.push_back(tok);
  return out;
}

std::string strip(std::string s) {
  while (!s.empty() && (s.back() == '\r' || s.back() == ' ' || s.back() == '\t')) s.pop_back();
  return s;
}

Error parse_error(const std::string& source, std::size_t line, const std::string& what) {
  return io_error(source + ":" + std::to_string(line) + ": " + what);
}

double parse_number(const std::string& tok, const std::string& source, std::size_t line) {
  double v = 0.0;
  const auto* end = tok.data() + tok.size();
  const auto [ptr, ec] = std::from_chars(tok.data(), end, v);
  if (ec != std::errc() || ptr != end) throw parse_error(source, line, "invalid number '" + tok + "'");
  if (!std::isfinite(v)) throw parse_error(source, line, "non-finite coordinate '" + tok + "'");
  return v;
}

bool numeric_ply_type(const std::string& t) {
  static const char* types[] = {"char", "uchar", "short", "ushort", "int", "uint", "float", "double",
                                "int8", "uint8", "int16", "uint16", "int32", "uint32", "float32", "float64"};
  for (const char* k : types)
    if (t == k) return true;
  return false;
}

PointCloudd parse_xyz(std::istream& in, const std::string& source) {
  std::vector<Point3d> pts;
  std::string line;
  std::size_t no = 0;
  Frame frame = Frame::Camera;
  while (std::getline(in, line)) {
    ++no;
    if (strip(line) == "# frame turbine-axis") frame = Frame::TurbineAxis;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto tok = split_ws(line);
    if (tok.empty()) continue;
    if (tok.size() != 3) throw parse_error(source, no, "expected 3 coordinates, got " + std::to_string(tok.size()));
    pts.emplace_back(parse_number(tok[0], source, no), parse_number(tok[1], source, no), parse_number(tok[2], source, no));
  }
  return PointCloudd::from_points(pts, frame);
}

PointCloudd parse_ply(std::istream& in, const std::string& source) {
  std::string line;
  std::size_t no = 0;
  if (!std::getline(in, line) || strip(line) != "ply") throw parse_error(source, 1, "missing 'ply' magic");
  ++no;
  Frame frame = Frame::Camera;
  long vertex_count = -1;
  std::vector<std::string> props;
  bool in_vertex = false, saw_format = false, header_done = false;
  while (std::getline(in, line)) {
    ++no;
    const auto tok = split_ws(strip(line));
    if (tok.empty()) continue;
    if (tok[0] == "format") {
      if (tok.size() < 2 || tok[1] != "ascii") throw parse_error(source, no, "unsupported PLY format (only ascii)");
      saw_format = true;
    } else if (tok[0] == "comment" || tok[0] == "obj_info") {
      if (tok.size() >= 3 && tok[0] == "comment" && tok[1] == "frame")
        frame = tok[2] == "turbine-axis" ? Frame::TurbineAxis : Frame::Camera;
    } else if (tok[0] == "element") {
      if (tok.size() != 3) throw parse_error(source, no, "malformed element line");
      if (tok[1] != "vertex") throw parse_error(source, no, "unsupported element '" + tok[1] + "'");
      long count = 0;
      const auto [p, ec] = std::from_chars(tok[2].data(), tok[2].data() + tok[2].size(), count);
      if (ec != std::errc() || count < 0) throw parse_error(source, no, "invalid vertex count");
      vertex_count = count;
      in_vertex = true;
    } else if (tok[0] == "property") {
      if (!in_vertex) throw parse_error(source, no, "property outside element vertex");
      if (tok.size() != 3) throw parse_error(source, no, "unsupported property declaration '" + strip(line) + "'");
      if (!numeric_ply_type(tok[1])) throw parse_error(source, no, "unsupported property type '" + tok[1] + "'");
      props.push_back(tok[2]);
    } else if (tok[0] == "end_header") {
      header_done = true;
      break;
    } else {
      throw parse_error(source, no, "unexpected header keyword '" + tok[0] + "'");
    }
  }
  if (!saw_format) throw parse_error(source, no, "truncated header: missing format line");
  if (vertex_count < 0) throw parse_error(source, no, "truncated header: missing element vertex");
  if (!header_done) throw parse_error(source, no, "truncated header: missing end_header");
  int ix = -1, iy = -1, iz = -1;
  for (std::size_t i = 0; i < props.size(); ++i) {
    if (props[i] == "x") ix = static_cast<int>(i);
    if (props[i] == "y") iy = static_cast<int>(i);
    if (props[i] == "z") iz = static_cast<int>(i);
  }
  if (ix < 0 || iy < 0 || iz < 0) throw parse_error(source, no, "element vertex lacks x, y, z properties");

  std::vector<Point3d> pts;
  pts.reserve(static_cast<std::size_t>(vertex_count));
  while (static_cast<long>(pts.size()) < vertex_count && std::getline(in, line)) {
    ++no;
    const auto tok = split_ws(line);
    if (tok.empty()) continue;
    if (tok.size() != props.size())
      throw parse_error(source, no, "expected " + std::to_string(props.size()) + " values, got " + std::to_string(tok.size()));
    pts.emplace_back(parse_number(tok[static_cast<std::size_t>(ix)], source, no),
                     parse_number(tok[static_cast<std::size_t>(iy)], source, no),
                     parse_number(tok[static_cast<std::size_t>(iz)], source, no));
  }
  if (static_cast<long>(pts.size()) != vertex_count)
    throw parse_error(source, no, "file ends after " + std::to_string(pts.size()) + " of " + std::to_string(vertex_count) + " vertices");
  return PointCloudd::from_points(pts, frame);
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

CloudFormat format_from_path(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".ply" || ext == ".PLY") return CloudFormat::PlyAscii;
  if (ext == ".xyz" || ext == ".XYZ" || ext == ".txt") return CloudFormat::Xyz;
  throw io_error("cannot infer cloud format from '" + path.string() + "' (use .ply or .xyz)");
}

PointCloudd parse_cloud(const std::string& text, CloudFormat format, const std::string& source) {
  std::istringstream in(text);
  return format == CloudFormat::PlyAscii ? parse_ply(in, source) : parse_xyz(in, source);
}

PointCloudd read_cloud(const std::filesystem::path& path, CloudFormat format) {
  std::ifstream in(path);
  if (!in) throw io_error("cannot open '" + path.string() + "'");
  return format == CloudFormat::PlyAscii ? parse_ply(in, path.string()) : parse_xyz(in, path.string());
}

PointCloudd read_cloud(const std::filesystem::path& path) { return read_cloud(path, format_from_path(path)); }

std::string format_cloud(const PointCloudd& cloud, CloudFormat format) {
  std::string out;
  if (format == CloudFormat::PlyAscii) {
    out += "ply\nformat ascii 1.0\ncomment frame ";
    out += to_string(cloud.frame());
    out += "\nelement vertex " + std::to_string(cloud.size()) +
           "\nproperty double x\nproperty double y\nproperty double z\nend_header\n";
  } else {
    out += std::string("# frame ") + to_string(cloud.frame()) + "\n";
  }
  for (Eigen::Index i = 0; i < cloud.size(); ++i) {
    out += format_double(cloud.points()(0, i));
    out += ' ';
    out += format_double(cloud.points()(1, i));
    out += ' ';
    out += format_double(cloud.points()(2, i));
    out += '\n';
  }
  return out;
}

void write_cloud(const PointCloudd& cloud, const std::filesystem::path& path, CloudFormat format) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot write '" + path.string() + "'");
  out << format_cloud(cloud, format);
  if (!out) throw io_error("write failed for '" + path.string() + "'");
}

void write_cloud(const PointCloudd& cloud, const std::filesystem::path& path) {
  write_cloud(cloud, path, format_from_path(path));
}

}  // namespace shaftdock
