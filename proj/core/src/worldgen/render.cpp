#include "relground/worldgen/render.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace relground::worldgen {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kMinT = 1e-9;

struct Basis {
    Vec3 forward, right, up;
    double tan_half;
};

Basis camera_basis(const CameraConfig& cam) {
    Basis b;
    b.forward = (cam.look_at - cam.position).normalized();
    b.right = b.forward.cross({0, 0, 1}).normalized();
    b.up = b.right.cross(b.forward);
    b.tan_half = std::tan(cam.vertical_fov_deg * std::numbers::pi / 360.0);
    return b;
}

Vec3 rotate_z(const Vec3& v, double angle) {
    const double c = std::cos(angle), s = std::sin(angle);
    return {c * v.x - s * v.y, s * v.x + c * v.y, v.z};
}

/// Slab test against an axis-aligned box centred at `c` (local frame).
void hit_box(const Vec3& o, const Vec3& d, const Vec3& c, const Vec3& h, double& best, Vec3& normal) {
    double t0 = -kInf, t1 = kInf;
    int axis0 = -1;
    double sign0 = 0;
    const double oc[3] = {o.x - c.x, o.y - c.y, o.z - c.z};
    const double dd[3] = {d.x, d.y, d.z};
    const double hh[3] = {h.x, h.y, h.z};
    for (int a = 0; a < 3; ++a) {
        if (std::abs(dd[a]) < 1e-15) {
            if (std::abs(oc[a]) > hh[a]) return;
            continue;
        }
        double ta = (-hh[a] - oc[a]) / dd[a];
        double tb = (hh[a] - oc[a]) / dd[a];
        double s = -1;
        if (ta > tb) {
            std::swap(ta, tb);
            s = 1;
        }
        if (ta > t0) {
            t0 = ta;
            axis0 = a;
            sign0 = s;
        }
        t1 = std::min(t1, tb);
        if (t0 > t1) return;
    }
    if (t0 < kMinT || t0 >= best || axis0 < 0) return;
    best = t0;
    normal = {axis0 == 0 ? sign0 : 0.0, axis0 == 1 ? sign0 : 0.0, axis0 == 2 ? sign0 : 0.0};
}

void hit_sphere(const Vec3& o, const Vec3& d, double r, double& best, Vec3& normal) {
    const double b = o.dot(d);
    const double c = o.dot(o) - r * r;
    const double disc = b * b - c;
    if (disc < 0) return;
    const double t = -b - std::sqrt(disc);
    if (t < kMinT || t >= best) return;
    best = t;
    normal = (o + d * t).normalized();
}

/// Vertical cylinder centred at `c`, radius r, half height hz.
void hit_cylinder(const Vec3& o0, const Vec3& d, const Vec3& c, double r, double hz, double& best, Vec3& normal) {
    const Vec3 o = o0 - c;
    const double a = d.x * d.x + d.y * d.y;
    if (a > 1e-15) {
        const double b = o.x * d.x + o.y * d.y;
        const double cc = o.x * o.x + o.y * o.y - r * r;
        const double disc = b * b - a * cc;
        if (disc >= 0) {
            const double t = (-b - std::sqrt(disc)) / a;
            const double z = o.z + d.z * t;
            if (t >= kMinT && t < best && std::abs(z) <= hz) {
                best = t;
                normal = Vec3{o.x + d.x * t, o.y + d.y * t, 0.0}.normalized();
            }
        }
    }
    if (std::abs(d.z) > 1e-15) {
        for (double cap : {hz, -hz}) {
            const double t = (cap - o.z) / d.z;
            const double x = o.x + d.x * t, y = o.y + d.y * t;
            if (t >= kMinT && t < best && x * x + y * y <= r * r) {
                best = t;
                normal = {0, 0, cap > 0 ? 1.0 : -1.0};
            }
        }
    }
}

struct PixelHit {
    double distance = kInf;
    int object = -1;  // index into scene.objects, -1 = table/background
    Vec3 normal;
    bool table = false;
};

PixelHit trace(const Scene& scene, const CameraConfig& cam, const Vec3& dir) {
    PixelHit px;
    for (std::size_t i = 0; i < scene.objects.size(); ++i) {
        if (auto h = intersect(scene.objects[i], cam.position, dir); h && h->distance < px.distance) {
            px.distance = h->distance;
            px.object = static_cast<int>(i);
            px.normal = h->normal;
        }
    }
    if (std::abs(dir.z) > 1e-15) {
        const double t = -cam.position.z / dir.z;
        const Vec3 p = cam.position + dir * t;
        if (t > kMinT && t < px.distance && std::abs(p.x) <= cam.table_half && std::abs(p.y) <= cam.table_half) {
            px.distance = t;
            px.object = -1;
            px.normal = {0, 0, 1};
            px.table = true;
        }
    }
    return px;
}

void check_resolution(int resolution) {
    if (resolution != 64 && resolution != 128)
        throw ShapeMismatch("render resolution must be 64 or 128, got " + std::to_string(resolution));
}

}  // namespace

std::optional<Hit> intersect(const SceneObject& obj, const Vec3& origin, const Vec3& direction) {
    const Vec3 o = rotate_z(origin - obj.position, -obj.yaw);
    const Vec3 d = rotate_z(direction, -obj.yaw);
    const Vec3 h = obj.half_extents;
    double best = kInf;
    Vec3 n;
    switch (obj.kind) {
        case Shape::cube:
            hit_box(o, d, {0, 0, 0}, h, best, n);
            break;
        case Shape::sphere:
            hit_sphere(o, d, h.x, best, n);
            break;
        case Shape::cylinder:
            hit_cylinder(o, d, {0, 0, 0}, h.x, h.z, best, n);
            break;
        case Shape::cup: {
            const double r = cup_radius(obj);
            hit_cylinder(o, d, {0, 0, 0}, r, h.z, best, n);
            // Handle on the local -x side, half the cup height.
            hit_box(o, d, {-r - kCupHandleReach / 2 + 0.0025, 0, 0},
                    {kCupHandleReach / 2 + 0.0025, 0.012, h.z * 0.5}, best, n);
            break;
        }
        case Shape::tray:
        case Shape::bowl: {
            const double w = kWallThickness, f = kFloorThickness;
            hit_box(o, d, {0, 0, -h.z + f / 2}, {h.x, h.y, f / 2}, best, n);
            hit_box(o, d, {h.x - w / 2, 0, 0}, {w / 2, h.y, h.z}, best, n);
            hit_box(o, d, {-h.x + w / 2, 0, 0}, {w / 2, h.y, h.z}, best, n);
            hit_box(o, d, {0, h.y - w / 2, 0}, {h.x - w, w / 2, h.z}, best, n);
            hit_box(o, d, {0, -h.y + w / 2, 0}, {h.x - w, w / 2, h.z}, best, n);
            break;
        }
    }
    if (best == kInf) return std::nullopt;
    return Hit{best, rotate_z(n, obj.yaw)};
}

Vec3 pixel_ray(const CameraConfig& cam, int resolution, int row, int col) {
    const Basis b = camera_basis(cam);
    const double sx = ((col + 0.5) / resolution * 2.0 - 1.0) * b.tan_half;
    const double sy = (1.0 - (row + 0.5) / resolution * 2.0) * b.tan_half;
    return (b.forward + b.right * sx + b.up * sy).normalized();
}

std::array<double, 2> project(const CameraConfig& cam, int resolution, const Vec3& point) {
    const Basis b = camera_basis(cam);
    const Vec3 v = point - cam.position;
    const double zc = v.dot(b.forward);
    const double sx = v.dot(b.right) / (zc * b.tan_half);
    const double sy = v.dot(b.up) / (zc * b.tan_half);
    return {(sx + 1.0) / 2.0 * resolution - 0.5, (1.0 - sy) / 2.0 * resolution - 0.5};
}

namespace {

Observation rasterize(const Scene& scene, const CameraConfig& cam, int res) {
    Observation obs;
    obs.rgbd = Image(res, res, 4);
    for (const auto& o : scene.objects) {
        obs.masks.emplace_back(res, res);
        obs.object_ids.push_back(o.id);
    }
    std::vector<std::array<float, 3>> albedo;
    for (const auto& o : scene.objects) albedo.push_back(color_rgb(o.color));
    const std::array<float, 3> table_rgb{0.62f, 0.60f, 0.56f};
    const Vec3 light = cam.light_direction.normalized();
    const double range = cam.far - cam.near;

    for (int r = 0; r < res; ++r)
        for (int c = 0; c < res; ++c) {
            const Vec3 dir = pixel_ray(cam, res, r, c);
            const PixelHit px = trace(scene, cam, dir);
            if (px.distance == kInf) {
                obs.rgbd.at(r, c, 3) = 1.0f;
                continue;
            }
            const auto& base = px.object >= 0 ? albedo[px.object] : table_rgb;
            const double shade = cam.ambient + (1.0 - cam.ambient) * std::max(0.0, px.normal.dot(light));
            for (int k = 0; k < 3; ++k) obs.rgbd.at(r, c, k) = static_cast<float>(std::min(1.0, base[k] * shade));
            obs.rgbd.at(r, c, 3) = static_cast<float>(std::clamp((px.distance - cam.near) / range, 0.0, 1.0));
            if (px.object >= 0) obs.masks[px.object].at(r, c) = 1;
        }
    return obs;
}

}  // namespace

Observation render_observation(const Scene& scene, const CameraConfig& cam, int resolution) {
    check_resolution(resolution);
    if (!(cam.far > cam.near)) throw ConfigError("camera far must exceed near");
    return rasterize(scene, cam, resolution);
}

std::vector<int> visible_pixels(const Scene& scene, const CameraConfig& cam, int resolution) {
    if (resolution < 1) throw ShapeMismatch("resolution must be positive");
    const Observation obs = rasterize(scene, cam, resolution);
    std::vector<int> counts;
    for (const auto& m : obs.masks) counts.push_back(static_cast<int>(m.count()));
    return counts;
}

int Observation::mask_index(int object_id) const {
    for (std::size_t i = 0; i < object_ids.size(); ++i)
        if (object_ids[i] == object_id) return static_cast<int>(i);
    return -1;
}

const Mask& Observation::mask_of(int object_id) const {
    const int i = mask_index(object_id);
    if (i < 0) throw DataError("observation has no mask for object " + std::to_string(object_id));
    return masks[i];
}

std::vector<int> Observation::empty_mask_ids() const {
    std::vector<int> ids;
    for (std::size_t i = 0; i < masks.size(); ++i)
        if (masks[i].count() == 0) ids.push_back(object_ids[i]);
    return ids;
}

}  // namespace relground::worldgen
