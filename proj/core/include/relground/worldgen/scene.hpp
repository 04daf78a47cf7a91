#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "relground/common.hpp"

namespace relground::worldgen {

struct Vec3 {
    double x = 0, y = 0, z = 0;

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    Vec3 cross(const Vec3& o) const { return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x}; }
    double norm() const { return std::sqrt(dot(*this)); }
    Vec3 normalized() const { return *this * (1.0 / norm()); }
    bool operator==(const Vec3&) const = default;
};

enum class Shape { cube, sphere, cylinder, tray, cup, bowl };

std::string shape_name(Shape s);
Shape shape_from_name(const std::string& name);

/// Containers (tray, bowl) are hollow: a thin floor and four walls.
inline bool is_container(Shape s) { return s == Shape::tray || s == Shape::bowl; }

/// RGB reflectance in [0,1] for a color label.
std::array<float, 3> color_rgb(const std::string& color);

class PlacementFailure : public ConfigError {
public:
    using ConfigError::ConfigError;
};

/// World frame: table top is z = 0, x points right and y away from the camera.
struct SceneObject {
    int id = 0;
    std::string color;
    std::string shape;
    std::string size;
    Shape kind = Shape::cube;
    Vec3 position;      ///< centre of the bounding box
    Vec3 half_extents;  ///< axis-aligned bounding box half sizes
    double yaw = 0;     ///< rotation about z; only cups use it visibly
    double roll = 0;
    double pitch = 0;

    double bottom() const { return position.z - half_extents.z; }
    double top() const { return position.z + half_extents.z; }
    bool container() const { return is_container(kind); }

    /// Height at which something resting on or in this object sits.
    double support_top() const;
    /// Half size of the open interior of a container (x, y).
    double inner_half_x() const;
    double inner_half_y() const;

    bool operator==(const SceneObject&) const = default;
};

struct Scene {
    std::vector<SceneObject> objects;
    std::uint64_t seed = 0;

    const SceneObject& object(int id) const;
    SceneObject& object(int id);
    bool operator==(const Scene&) const = default;
};

/// Container wall and floor thickness, metres.
inline constexpr double kWallThickness = 0.02;
inline constexpr double kFloorThickness = 0.01;

struct AttributePools {
    std::vector<std::string> colors{"gray", "red", "blue", "green", "brown", "purple", "cyan", "yellow"};
    std::vector<std::string> shapes{"cube", "sphere", "cylinder"};
    std::array<double, 2> small_range{0.13, 0.16};
    std::array<double, 2> large_range{0.19, 0.23};
    bool include_tray = true;
    std::array<double, 2> tray_footprint{0.36, 0.42};
    double tray_height = 0.05;
};

struct SceneConfig {
    int n_objects = 4;
    AttributePools pools;
    double workspace_half = 0.5;
    double p_in_tray = 0.15;
    double p_stacked = 0.12;
    double p_floating = 0.12;
    std::array<double, 2> float_gap{0.06, 0.30};
    int max_attempts_per_object = 200;
    int max_scene_attempts = 200;
    /// Scenes where some object shows fewer pixels than this (at the check
    /// resolution) are rejected and resampled; 0 disables the check.
    int min_visible_pixels = 8;
    int visibility_resolution = 64;
};

/// Samples a scene by rejection until objects do not interpenetrate.
Scene generate_scene(std::uint64_t seed, const SceneConfig& config = {});

/// Axis-aligned box overlap volume (0 when merely touching).
double overlap_volume(const SceneObject& a, const SceneObject& b);

/// True when `inner` sits inside the open interior of `outer`.
bool contained_in(const SceneObject& inner, const SceneObject& outer);

/// Pairwise non-penetration, allowing containment in a container.
bool non_penetrating(const Scene& scene);

/// Builds an object with half extents derived from shape and edge size.
/// `base` is the footprint centre with z at the bottom face.
/// For containers `size` is the footprint side and `height` the wall height
/// (negative = shape default).
SceneObject make_object(int id, const std::string& color, Shape kind, const std::string& size_label, double size,
                        Vec3 base, double yaw = 0, double height = -1);

/// Cup geometry derived from its half extents.
double cup_radius(const SceneObject& cup);
inline constexpr double kCupHandleReach = 0.035;

}  // namespace relground::worldgen
