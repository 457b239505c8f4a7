#pragma once

// JSON round trip for Scene fixtures. Doubles are written with round-trip
// precision, so a reloaded scene reproduces every gain bit for bit.

#include <json.hpp>

#include <string>

#include "squintsense/channel.hpp"

namespace squint {

inline nlohmann::json scene_to_json(const Scene& scene) {
  using nlohmann::json;
  json j;
  j["rng_seed"] = scene.rng_seed;
  j["targets"] = json::array();
  for (const auto& t : scene.targets) {
    j["targets"].push_back({{"theta", t.theta}, {"phi", t.phi}, {"distance", t.distance}, {"rcs", t.rcs}});
  }
  j["clutterers"] = json::array();
  for (const auto& c : scene.clutterers) {
    j["clutterers"].push_back({{"theta", c.theta},
                               {"phi", c.phi},
                               {"distance", c.distance},
                               {"rcs", c.rcs},
                               {"fading_re", c.fading.real()},
                               {"fading_im", c.fading.imag()}});
  }
  j["users"] = json::array();
  for (const auto& u : scene.users) {
    j["users"].push_back(
        {{"theta", u.theta}, {"phi", u.phi}, {"distance", u.distance}, {"noise_var", u.noise_var}});
  }
  return j;
}

inline Scene scene_from_json(const nlohmann::json& j) {
  Scene scene;
  scene.rng_seed = j.at("rng_seed").get<std::uint64_t>();
  for (const auto& t : j.at("targets")) {
    scene.targets.push_back({t.at("theta").get<double>(), t.at("phi").get<double>(),
                             t.at("distance").get<double>(), t.at("rcs").get<double>()});
  }
  for (const auto& c : j.at("clutterers")) {
    scene.clutterers.push_back({c.at("theta").get<double>(), c.at("phi").get<double>(),
                                c.at("distance").get<double>(), c.at("rcs").get<double>(),
                                cplx(c.at("fading_re").get<double>(), c.at("fading_im").get<double>())});
  }
  for (const auto& u : j.at("users")) {
    scene.users.push_back({u.at("theta").get<double>(), u.at("phi").get<double>(),
                           u.at("distance").get<double>(), u.at("noise_var").get<double>()});
  }
  return scene;
}

inline std::string serialize_scene(const Scene& scene) { return scene_to_json(scene).dump(2); }

inline Scene deserialize_scene(const std::string& text) {
  return scene_from_json(nlohmann::json::parse(text));
}

}  // namespace squint
