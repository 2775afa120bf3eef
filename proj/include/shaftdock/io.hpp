#pragma once

#include <filesystem>
#include <string>

#include "shaftdock/cloud.hpp"

namespace shaftdock {

enum class CloudFormat { PlyAscii, Xyz };

/// Format implied by the file extension (.ply or .xyz/.txt).
CloudFormat format_from_path(const std::filesystem::path& path);

/// Parses an ASCII PLY (vertex element with x, y, z properties) or a
/// whitespace XYZ file ('#' starts a comment). Parse errors carry the line number.
PointCloudd read_cloud(const std::filesystem::path& path, CloudFormat format);
PointCloudd read_cloud(const std::filesystem::path& path);

PointCloudd parse_cloud(const std::string& text, CloudFormat format, const std::string& source = "<memory>");

/// Coordinates are written with 17 significant digits, so read(write(c)) == c exactly.
void write_cloud(const PointCloudd& cloud, const std::filesystem::path& path, CloudFormat format);
void write_cloud(const PointCloudd& cloud, const std::filesystem::path& path);

std::string format_cloud(const PointCloudd& cloud, CloudFormat format);

/// Shortest round-trip decimal text of a double.
std::string format_double(double v);

}  // namespace shaftdock
