#include "relground/worldgen/scene.hpp"

#include <algorithm>
#include <map>
#include <optional>

#include "relground/rng.hpp"
#include "relground/worldgen/render.hpp"

namespace relground::worldgen {

std::string shape_name(Shape s) {
    switch (s) {
        case Shape::cube: return "cube";
        case Shape::sphere: return "sphere";
        case Shape::cylinder: return "cylinder";
        case Shape::tray: return "tray";
        case Shape::cup: return "cup";
        case Shape::bowl: return "bowl";
    }
    return "cube";
}

Shape shape_from_name(const std::string& name) {
    static const std::map<std::string, Shape> table{{"cube", Shape::cube},         {"sphere", Shape::sphere},
                                                    {"cylinder", Shape::cylinder}, {"tray", Shape::tray},
                                                    {"cup", Shape::cup},           {"bowl", Shape::bowl}};
    auto it = table.find(name);
    if (it == table.end()) throw ConfigError("unknown shape '" + name + "'");
    return it->second;
}

std::array<float, 3> color_rgb(const std::string& color) {
    // CLEVR palette, 0..255 scaled.
    static const std::map<std::string, std::array<int, 3>> palette{
        {"gray", {87, 87, 87}},     {"red", {173, 35, 35}},     {"blue", {42, 75, 215}},
        {"green", {29, 105, 20}},   {"brown", {129, 74, 25}},   {"purple", {129, 38, 192}},
        {"cyan", {41, 208, 208}},   {"yellow", {255, 238, 51}},
    };
    auto it = palette.find(color);
    if (it == palette.end()) throw ConfigError("no rgb value for color '" + color + "'");
    return {it->second[0] / 255.0f, it->second[1] / 255.0f, it->second[2] / 255.0f};
}

double SceneObject::support_top() const { return container() ? bottom() + kFloorThickness : top(); }

double SceneObject::inner_half_x() const { return container() ? half_extents.x - kWallThickness : 0.0; }

double SceneObject::inner_half_y() const { return container() ? half_extents.y - kWallThickness : 0.0; }

const SceneObject& Scene::object(int id) const {
    for (const auto& o : objects)
        if (o.id == id) return o;
    throw DataError("no object with id " + std::to_string(id));
}

SceneObject& Scene::object(int id) {
    for (auto& o : objects)
        if (o.id == id) return o;
    throw DataError("no object with id " + std::to_string(id));
}

double cup_radius(const SceneObject& cup) { return cup.half_extents.x - kCupHandleReach; }

SceneObject make_object(int id, const std::string& color, Shape kind, const std::string& size_label, double size,
                        Vec3 base, double yaw, double height) {
    SceneObject o;
    o.id = id;
    o.color = color;
    o.shape = shape_name(kind);
    o.size = size_label;
    o.kind = kind;
    o.yaw = yaw;
    const double h = size / 2;
    switch (kind) {
        case Shape::cube:
        case Shape::sphere:
        case Shape::cylinder:
            o.half_extents = {h, h, h};
            break;
        case Shape::cup: {
            const double r = 0.4 * size;
            o.half_extents = {r + kCupHandleReach, r + kCupHandleReach, h};
            break;
        }
        case Shape::tray:
            o.half_extents = {h, h, (height > 0 ? height : 0.05) / 2};
            break;
        case Shape::bowl:
            o.half_extents = {h, h, (height > 0 ? height : 0.09) / 2};
            break;
    }
    o.position = {base.x, base.y, base.z + o.half_extents.z};
    return o;
}

double overlap_volume(const SceneObject& a, const SceneObject& b) {
    auto axis = [](double ca, double ha, double cb, double hb) {
        return std::max(0.0, std::min(ca + ha, cb + hb) - std::max(ca - ha, cb - hb));
    };
    return axis(a.position.x, a.half_extents.x, b.position.x, b.half_extents.x) *
           axis(a.position.y, a.half_extents.y, b.position.y, b.half_extents.y) *
           axis(a.position.z, a.half_extents.z, b.position.z, b.half_extents.z);
}

bool contained_in(const SceneObject& inner, const SceneObject& outer) {
    constexpr double eps = 1e-9;
    if (!outer.container()) return false;
    return std::abs(inner.position.x - outer.position.x) + inner.half_extents.x <= outer.inner_half_x() + eps &&
           std::abs(inner.position.y - outer.position.y) + inner.half_extents.y <= outer.inner_half_y() + eps &&
           inner.bottom() >= outer.support_top() - eps;
}

bool non_penetrating(const Scene& scene) {
    const auto& objs = scene.objects;
    for (std::size_t i = 0; i < objs.size(); ++i)
        for (std::size_t j = i + 1; j < objs.size(); ++j) {
            if (contained_in(objs[i], objs[j]) || contained_in(objs[j], objs[i])) continue;
            if (overlap_volume(objs[i], objs[j]) > 1e-12) return false;
        }
    return true;
}

namespace {

template <class T>
const T& pick(Rng& rng, const std::vector<T>& pool) {
    return pool[rng.below(pool.size())];
}

bool fits(const SceneObject& cand, const std::vector<SceneObject>& placed, double ws_half) {
    if (std::abs(cand.position.x) + cand.half_extents.x > ws_half + 1e-9) return false;
    if (std::abs(cand.position.y) + cand.half_extents.y > ws_half + 1e-9) return false;
    for (const auto& o : placed) {
        if (contained_in(cand, o) || contained_in(o, cand)) continue;
        if (overlap_volume(cand, o) > 1e-12) return false;
    }
    return true;
}

std::optional<SceneObject> sample_object(Rng& rng, int id, const std::vector<SceneObject>& placed,
                                         const SceneConfig& cfg) {
    const auto& pools = cfg.pools;
    const std::string color = pick(rng, pools.colors);
    const Shape kind = shape_from_name(pick(rng, pools.shapes));
    const bool large = rng.below(2) == 1;
    const auto& range = large ? pools.large_range : pools.small_range;
    const double size = rng.uniform(range[0], range[1]);
    const double half = size / 2;

    const SceneObject* tray = nullptr;
    std::vector<const SceneObject*> supporters;
    for (const auto& o : placed) {
        if (o.container() && !tray) tray = &o;
        if ((o.kind == Shape::cube || o.kind == Shape::cylinder) && o.bottom() < 1e-9) supporters.push_back(&o);
    }

    const double u = rng.uniform();
    const double lim = cfg.workspace_half - half;
    Vec3 base{rng.uniform(-lim, lim), rng.uniform(-lim, lim), 0.0};
    if (u < cfg.p_in_tray) {
        if (!tray) return std::nullopt;
        const double hx = tray->inner_half_x() - half, hy = tray->inner_half_y() - half;
        if (hx < 0 || hy < 0) return std::nullopt;
        base = {tray->position.x + rng.uniform(-hx, hx), tray->position.y + rng.uniform(-hy, hy), tray->support_top()};
    } else if (u < cfg.p_in_tray + cfg.p_stacked) {
        if (supporters.empty()) return std::nullopt;
        const SceneObject& sup = *supporters[rng.below(supporters.size())];
        const double ox = sup.half_extents.x * 0.6, oy = sup.half_extents.y * 0.6;
        base = {sup.position.x + rng.uniform(-ox, ox), sup.position.y + rng.uniform(-oy, oy), sup.top()};
    } else if (u < cfg.p_in_tray + cfg.p_stacked + cfg.p_floating) {
        base.z = rng.uniform(cfg.float_gap[0], cfg.float_gap[1]);
    }
    return make_object(id, color, kind, large ? "large" : "small", size, base);
}

}  // namespace

Scene generate_scene(std::uint64_t seed, const SceneConfig& cfg) {
    if (cfg.n_objects < 2) throw ConfigError("a scene needs at least 2 objects");
    if (cfg.pools.colors.empty() || cfg.pools.shapes.empty()) throw ConfigError("empty attribute pool");
    Rng rng(seed);
    const CameraConfig camera;
    for (int attempt = 0; attempt < cfg.max_scene_attempts; ++attempt) {
        Scene scene;
        scene.seed = seed;
        int id = 0;
        if (cfg.pools.include_tray) {
            const double side = rng.uniform(cfg.pools.tray_footprint[0], cfg.pools.tray_footprint[1]);
            const double lim = cfg.workspace_half - side / 2;
            scene.objects.push_back(make_object(id++, "gray", Shape::tray, "large", side,
                                                {rng.uniform(-lim, lim), rng.uniform(-lim, lim), 0.0}, 0.0,
                                                cfg.pools.tray_height));
        }
        bool ok = true;
        while (ok && id < cfg.n_objects) {
            bool placed = false;
            for (int t = 0; t < cfg.max_attempts_per_object && !placed; ++t) {
                auto cand = sample_object(rng, id, scene.objects, cfg);
                if (cand && fits(*cand, scene.objects, cfg.workspace_half)) {
                    scene.objects.push_back(std::move(*cand));
                    placed = true;
                }
            }
            ok = placed;
            ++id;
        }
        if (!ok) continue;
        if (cfg.min_visible_pixels > 0) {
            const auto counts = visible_pixels(scene, camera, cfg.visibility_resolution);
            if (std::any_of(counts.begin(), counts.end(), [&](int c) { return c < cfg.min_visible_pixels; }))
                continue;
        }
        return scene;
    }
    throw PlacementFailure("could not place " + std::to_string(cfg.n_objects) + " objects after " +
                           std::to_string(cfg.max_scene_attempts) + " scene attempts");
}

}  // namespace relground::worldgen
