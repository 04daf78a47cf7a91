#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>

#include "relground/worldgen/demos.hpp"
#include "relground/worldgen/relations.hpp"
#include "relground/worldgen/render.hpp"
#include "relground/worldgen/scene.hpp"

namespace relground::worldgen {

std::string scene_to_json(const Scene& scene);
Scene scene_from_json(std::string_view text);

std::string thresholds_to_json(const ThresholdConfig& t);
ThresholdConfig thresholds_from_json(std::string_view text);

std::string camera_to_json(const CameraConfig& c);
CameraConfig camera_from_json(std::string_view text);

std::string scene_config_to_json(const SceneConfig& c);
SceneConfig scene_config_from_json(std::string_view text);

/// rgbd array followed by the mask stack and the object id list.
void write_observation(std::ostream& out, const Observation& obs);
Observation read_observation(std::istream& in);

/// Demo directory: manifest.json (metadata, labels, plans, poses, scenes)
/// plus frames.bin with one observation per frame.
void save_demo(const std::filesystem::path& dir, const Demonstration& demo);
Demonstration load_demo(const std::filesystem::path& dir);

}  // namespace relground::worldgen
