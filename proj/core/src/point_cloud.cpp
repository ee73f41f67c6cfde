#include "hsi/point_cloud.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>
#include <string>

#include "hsi/error.hpp"

namespace hsi {

PointCloud fuse(std::span<const PointCloud> clouds, double voxel) {
  const bool colored = !clouds.empty() && std::all_of(clouds.begin(), clouds.end(), [](const PointCloud& c) {
    return c.empty() || c.has_colors();
  });

  PointCloud out;
  if (!(voxel > 0.0)) {
    for (const auto& c : clouds) {
      out.points.insert(out.points.end(), c.points.begin(), c.points.end());
      if (colored) {
        if (c.has_colors()) out.colors.insert(out.colors.end(), c.colors.begin(), c.colors.end());
      }
    }
    if (!colored) out.colors.clear();
    return out;
  }

  struct Cell {
    Vec3 sum = Vec3::Zero();
    std::array<double, 3> rgb{0.0, 0.0, 0.0};
    std::size_t count = 0;
  };
  using Key = std::array<std::int64_t, 3>;
  std::map<Key, Cell> cells;
  for (const auto& c : clouds) {
    for (std::size_t i = 0; i < c.points.size(); ++i) {
      const Vec3& p = c.points[i];
      const Key key{static_cast<std::int64_t>(std::floor(p.x() / voxel)),
                    static_cast<std::int64_t>(std::floor(p.y() / voxel)),
                    static_cast<std::int64_t>(std::floor(p.z() / voxel))};
      Cell& cell = cells[key];
      cell.sum += p;
      if (colored) {
        cell.rgb[0] += c.colors[i].r;
        cell.rgb[1] += c.colors[i].g;
        cell.rgb[2] += c.colors[i].b;
      }
      ++cell.count;
    }
  }
  out.points.reserve(cells.size());
  for (const auto& [key, cell] : cells) {
    const double n = static_cast<double>(cell.count);
    out.points.push_back(cell.count == 1 ? cell.sum : Vec3(cell.sum / n));
    if (colored)
      out.colors.push_back({static_cast<std::uint8_t>(std::lround(cell.rgb[0] / n)),
                            static_cast<std::uint8_t>(std::lround(cell.rgb[1] / n)),
                            static_cast<std::uint8_t>(std::lround(cell.rgb[2] / n))});
  }
  return out;
}

void write_ply(const std::filesystem::path& path, const PointCloud& cloud) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  const bool colored = cloud.has_colors();
  out << "ply\nformat ascii 1.0\nelement vertex " << cloud.size() << "\n"
      << "property float64 x\nproperty float64 y\nproperty float64 z\n";
  if (colored) out << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
  out << "end_header\n" << std::setprecision(17);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Vec3& p = cloud.points[i];
    out << p.x() << ' ' << p.y() << ' ' << p.z();
    if (colored)
      out << ' ' << int(cloud.colors[i].r) << ' ' << int(cloud.colors[i].g) << ' ' << int(cloud.colors[i].b);
    out << '\n';
  }
  if (!out) throw Error(ErrorKind::Io, "failed writing " + path.string());
}

PointCloud read_ply(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Input, "cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  if (line != "ply") throw Error(ErrorKind::Input, path.string() + ": not a PLY file");
  std::size_t count = 0;
  int properties = 0;
  bool colored = false, ascii = false, in_vertex = false;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string tok;
    ls >> tok;
    if (tok == "format") {
      std::string fmt;
      ls >> fmt;
      ascii = fmt == "ascii";
    } else if (tok == "element") {
      std::string name;
      ls >> name;
      in_vertex = name == "vertex";
      if (in_vertex) ls >> count;
    } else if (tok == "property" && in_vertex) {
      std::string type, name;
      ls >> type >> name;
      ++properties;
      if (name == "red") colored = true;
    } else if (tok == "end_header") {
      break;
    }
  }
  if (!ascii) throw Error(ErrorKind::Input, path.string() + ": only ASCII PLY is supported");
  if (properties != 3 && properties != 6)
    throw Error(ErrorKind::Input, path.string() + ": expected x y z [red green blue] vertex properties");
  PointCloud cloud;
  cloud.points.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    double x, y, z;
    if (!(in >> x >> y >> z)) throw Error(ErrorKind::Input, path.string() + ": truncated vertex list");
    if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(z))
      throw Error(ErrorKind::Input, path.string() + ": non-finite coordinate");
    cloud.points.emplace_back(x, y, z);
    if (colored) {
      int r, g, b;
      in >> r >> g >> b;
      cloud.colors.push_back({static_cast<std::uint8_t>(r), static_cast<std::uint8_t>(g),
                              static_cast<std::uint8_t>(b)});
    }
  }
  return cloud;
}

Vec3 centroid(const PointCloud& cloud) {
  Vec3 sum = Vec3::Zero();
  for (const auto& p : cloud.points) sum += p;
  return cloud.empty() ? sum : Vec3(sum / static_cast<double>(cloud.size()));
}

}  // namespace hsi
