#include "hsi/camera.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

#include "hsi/error.hpp"
#include "json_util.hpp"

namespace hsi {

void Camera::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) throw Error(ErrorKind::Input, "camera focal lengths must be positive");
  if (width <= 0 || height <= 0) throw Error(ErrorKind::Input, "camera image size must be positive");
  if (!is_orthonormal(world_from_camera.rotation, 1e-6))
    throw Error(ErrorKind::Input, "camera rotation is not orthonormal");
  if (!world_from_camera.translation.allFinite())
    throw Error(ErrorKind::Input, "camera translation is not finite");
  if (std::abs(gravity_dir.norm() - 1.0) > 1e-6)
    throw Error(ErrorKind::Input, "camera gravity_dir must have unit norm");
}

Vec2 project(const Vec3& world_point, const Camera& cam) {
  const Vec3 pc = cam.world_from_camera.inverse() * world_point;
  if (!(pc.z() > 0.0)) throw Error(ErrorKind::BehindCamera, "point lies behind the camera");
  return {cam.fx * pc.x() / pc.z() + cam.cx, cam.fy * pc.y() / pc.z() + cam.cy};
}

Vec3 unproject(double u, double v, double depth, const Camera& cam) {
  return {depth * (u - cam.cx) / cam.fx, depth * (v - cam.cy) / cam.fy, depth};
}

Camera look_at(const Vec3& eye, const Vec3& target, const Vec3& up, double fx, double fy,
               int width, int height) {
  const Vec3 z = (target - eye).normalized();
  const Vec3 x = z.cross(up).normalized();
  const Vec3 y = z.cross(x);
  Camera cam;
  cam.fx = fx;
  cam.fy = fy;
  cam.cx = (width - 1) / 2.0;
  cam.cy = (height - 1) / 2.0;
  cam.width = width;
  cam.height = height;
  cam.world_from_camera.rotation.col(0) = x;
  cam.world_from_camera.rotation.col(1) = y;
  cam.world_from_camera.rotation.col(2) = z;
  cam.world_from_camera.translation = eye;
  cam.gravity_dir = -up.normalized();
  return cam;
}

Camera read_camera_json(const std::filesystem::path& path) {
  const nlohmann::json j = read_json_file(path);
  Camera cam;
  try {
    cam.fx = j.at("fx").get<double>();
    cam.fy = j.at("fy").get<double>();
    cam.cx = j.at("cx").get<double>();
    cam.cy = j.at("cy").get<double>();
    cam.width = j.at("width").get<int>();
    cam.height = j.at("height").get<int>();
    const auto& m = j.at("world_from_camera");
    if (!m.is_array() || m.size() != 16)
      throw Error(ErrorKind::Input, "world_from_camera must be a 16-element row-major array");
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) cam.world_from_camera.rotation(r, c) = m[r * 4 + c].get<double>();
      cam.world_from_camera.translation(r) = m[r * 4 + 3].get<double>();
    }
    cam.gravity_dir = vec3_from_json(j.at("gravity_dir"));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Input, path.string() + ": " + e.what());
  }
  cam.validate();
  return cam;
}

void write_camera_json(const std::filesystem::path& path, const Camera& cam) {
  nlohmann::json m = nlohmann::json::array();
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) {
      if (r == 3) m.push_back(c == 3 ? 1.0 : 0.0);
      else if (c == 3) m.push_back(cam.world_from_camera.translation(r));
      else m.push_back(cam.world_from_camera.rotation(r, c));
    }
  nlohmann::json j{{"fx", cam.fx}, {"fy", cam.fy}, {"cx", cam.cx}, {"cy", cam.cy},
                   {"width", cam.width}, {"height", cam.height},
                   {"world_from_camera", m}, {"gravity_dir", vec3_to_json(cam.gravity_dir)}};
  write_json_file(path, j);
}

}  // namespace hsi
