#pragma once

#include <optional>
#include <vector>

#include "relground/common.hpp"
#include "relground/worldgen/scene.hpp"

namespace relground::worldgen {

struct CameraConfig {
    Vec3 position{0.0, -1.00, 1.20};
    Vec3 look_at{0.0, 0.04, 0.0};
    double vertical_fov_deg = 50.0;
    /// Camera distances mapped to depth 0 and 1.
    double near = 0.5;
    double far = 2.5;
    Vec3 light_direction{-0.4, -0.6, 1.0};
    double ambient = 0.35;
    /// Half side of the visible table plane, metres.
    double table_half = 0.85;

    bool operator==(const CameraConfig&) const = default;
};

struct Observation {
    Image rgbd;  ///< H x W x 4; RGB in [0,1], channel 3 = normalised depth
    std::vector<Mask> masks;  ///< one per scene object, in scene order
    std::vector<int> object_ids;

    int resolution() const { return rgbd.height; }
    /// Index into masks for an object id, or -1.
    int mask_index(int object_id) const;
    const Mask& mask_of(int object_id) const;
    /// Objects outside the frustum or fully occluded.
    std::vector<int> empty_mask_ids() const;
};

/// First ray hit against one object, world units.
struct Hit {
    double distance;
    Vec3 normal;
};

/// Ray cast against a single object (its primitives), nearest positive hit.
std::optional<Hit> intersect(const SceneObject& object, const Vec3& origin, const Vec3& direction);

/// Renders RGBD plus per-object masks. Each pixel shows the nearest surface
/// along its ray, so masks are disjoint and occluded parts go to the
/// occluder. Resolution must be 64 or 128.
Observation render_observation(const Scene& scene, const CameraConfig& camera, int resolution);

/// Pixel-centre ray direction (unit) for pixel (row, col).
Vec3 pixel_ray(const CameraConfig& camera, int resolution, int row, int col);

/// Continuous pixel coordinates (col, row) of a world point.
std::array<double, 2> project(const CameraConfig& camera, int resolution, const Vec3& point);

/// Visible pixel count per object at the given resolution.
std::vector<int> visible_pixels(const Scene& scene, const CameraConfig& camera, int resolution);

}  // namespace relground::worldgen
