#pragma once

#include <fstream>
#include <string>

#include <nlohmann/json.hpp>

#include "sblab/core/errors.hpp"
#include "sblab/geometry/configuration.hpp"

namespace sblab {

using json = nlohmann::json;

inline json to_json_array(const Vec3& v) { return json::array({v.x, v.y, v.z}); }

inline Vec3 vec3_from_json(const json& j) {
  if (!j.is_array() || j.size() != 3) throw ConfigError("expected a 3-element array");
  return {j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()};
}

/// {"n", "radius", "positions", "velocities", "region"}; "region" is optional on read.
inline json configuration_to_json(const ParticleConfiguration& c) {
  json j;
  j["n"] = c.n();
  j["radius"] = c.radius();
  json pos = json::array(), vel = json::array();
  for (std::size_t i = 0; i < c.n(); ++i) {
    pos.push_back(to_json_array(c.positions[i]));
    vel.push_back(to_json_array(c.velocities[i]));
  }
  j["positions"] = std::move(pos);
  j["velocities"] = std::move(vel);
  j["region"] = {{"lo", to_json_array(c.region.lo)}, {"hi", to_json_array(c.region.hi)}};
  return j;
}

/// Parses a configuration snapshot. Unless allow_invalid is set, snapshots
/// with overlapping spheres or centers outside the region are rejected.
inline ParticleConfiguration configuration_from_json(const json& j, bool allow_invalid = false) {
  try {
    const auto n = j.at("n").get<std::size_t>();
    const auto& pos = j.at("positions");
    const auto& vel = j.at("velocities");
    if (pos.size() != n || vel.size() != n) throw ConfigError("configuration: n disagrees with array lengths");
    ParticleConfiguration c;
    c.positions.reserve(n);
    c.velocities.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      c.positions.push_back(vec3_from_json(pos.at(i)));
      c.velocities.push_back(vec3_from_json(vel.at(i)));
    }
    if (j.contains("region")) {
      c.region.lo = vec3_from_json(j["region"].at("lo"));
      c.region.hi = vec3_from_json(j["region"].at("hi"));
    }
    if (j.contains("radius") && n > 0 && std::abs(j["radius"].get<double>() - c.radius()) > 1e-12 * c.radius())
      throw ConfigError("configuration: radius must equal 1/n");
    if (!allow_invalid) require_valid(c);
    return c;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("configuration JSON: ") + e.what());
  }
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("malformed JSON in " + path + ": " + e.what());
  }
}

inline void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << text;
  if (!out) throw IoError("write failed for " + path);
}

}  // namespace sblab
