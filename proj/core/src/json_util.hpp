#pragma once

// Internal JSON helpers shared by the readers and writers.

#include <filesystem>

#include <json.hpp>

#include "hsi/geometry.hpp"

namespace hsi {

nlohmann::json read_json_file(const std::filesystem::path& path);
/// Pretty-printed, trailing newline; byte-stable for identical input.
void write_json_file(const std::filesystem::path& path, const nlohmann::json& j);

Vec3 vec3_from_json(const nlohmann::json& j);
nlohmann::json vec3_to_json(const Vec3& v);

}  // namespace hsi
