#include "relground/worldgen/serialization.hpp"

#include <fstream>

#include "json_util.hpp"
#include "relground/array_io.hpp"

namespace relground::worldgen {

using detail::Json;

namespace {

Json vec_json(const Vec3& v) { return Json::array({v.x, v.y, v.z}); }

Vec3 vec_from(const Json& a) { return {a.at(0).get<double>(), a.at(1).get<double>(), a.at(2).get<double>()}; }

Json scene_json(const Scene& s) {
    Json objs = Json::array();
    for (const auto& o : s.objects) {
        objs.push_back({{"id", o.id},
                        {"color", o.color},
                        {"shape", o.shape},
                        {"size", o.size},
                        {"position", vec_json(o.position)},
                        {"half_extents", vec_json(o.half_extents)},
                        {"yaw", o.yaw},
                        {"roll", o.roll},
                        {"pitch", o.pitch}});
    }
    return {{"seed", s.seed}, {"objects", objs}};
}

Scene scene_from(const Json& j) {
    Scene s;
    s.seed = j.at("seed").get<std::uint64_t>();
    for (const auto& o : j.at("objects")) {
        SceneObject so;
        so.id = o.at("id").get<int>();
        so.color = o.at("color").get<std::string>();
        so.shape = o.at("shape").get<std::string>();
        so.size = o.at("size").get<std::string>();
        so.kind = shape_from_name(so.shape);
        so.position = vec_from(o.at("position"));
        so.half_extents = vec_from(o.at("half_extents"));
        so.yaw = o.at("yaw").get<double>();
        so.roll = o.value("roll", 0.0);
        so.pitch = o.value("pitch", 0.0);
        s.objects.push_back(std::move(so));
    }
    return s;
}

Json band_json(const Band& b) { return {{"threshold", b.threshold}, {"half_band", b.half_band}}; }

void read_band(const Json& j, Band& b) {
    if (j.contains("threshold")) b.threshold = j.at("threshold").get<double>();
    if (j.contains("half_band")) b.half_band = j.at("half_band").get<double>();
    if (b.half_band < 0) throw ConfigError("half band must be non-negative");
}

template <class T>
T guarded(std::string_view text, const std::string& what, T (*fn)(const Json&)) {
    const Json j = detail::parse_json(text, what);
    try {
        return fn(j);
    } catch (const Json::exception& e) {
        throw DataError("invalid " + what + ": " + e.what());
    }
}

ThresholdConfig thresholds_from(const Json& j) {
    ThresholdConfig t;
    for (const auto& g : ThresholdConfig::group_names())
        if (j.contains(g)) read_band(j.at(g), t.band(g));
    t.contact_epsilon = j.value("contact_epsilon", t.contact_epsilon);
    t.min_support_overlap = j.value("min_support_overlap", t.min_support_overlap);
    return t;
}

CameraConfig camera_from(const Json& j) {
    CameraConfig c;
    if (j.contains("position")) c.position = vec_from(j.at("position"));
    if (j.contains("look_at")) c.look_at = vec_from(j.at("look_at"));
    if (j.contains("light_direction")) c.light_direction = vec_from(j.at("light_direction"));
    c.vertical_fov_deg = j.value("vertical_fov_deg", c.vertical_fov_deg);
    c.near = j.value("near", c.near);
    c.far = j.value("far", c.far);
    c.ambient = j.value("ambient", c.ambient);
    c.table_half = j.value("table_half", c.table_half);
    if (!(c.far > c.near)) throw ConfigError("camera far must exceed near");
    return c;
}

SceneConfig scene_config_from(const Json& j) {
    SceneConfig c;
    c.n_objects = j.value("n_objects", c.n_objects);
    c.workspace_half = j.value("workspace_half", c.workspace_half);
    c.p_in_tray = j.value("p_in_tray", c.p_in_tray);
    c.p_stacked = j.value("p_stacked", c.p_stacked);
    c.p_floating = j.value("p_floating", c.p_floating);
    if (j.contains("float_gap")) c.float_gap = j.at("float_gap").get<std::array<double, 2>>();
    c.max_attempts_per_object = j.value("max_attempts_per_object", c.max_attempts_per_object);
    c.max_scene_attempts = j.value("max_scene_attempts", c.max_scene_attempts);
    c.min_visible_pixels = j.value("min_visible_pixels", c.min_visible_pixels);
    c.visibility_resolution = j.value("visibility_resolution", c.visibility_resolution);
    if (j.contains("pools")) {
        const Json& p = j.at("pools");
        auto& pools = c.pools;
        if (p.contains("colors")) pools.colors = p.at("colors").get<std::vector<std::string>>();
        if (p.contains("shapes")) pools.shapes = p.at("shapes").get<std::vector<std::string>>();
        if (p.contains("small_range")) pools.small_range = p.at("small_range").get<std::array<double, 2>>();
        if (p.contains("large_range")) pools.large_range = p.at("large_range").get<std::array<double, 2>>();
        if (p.contains("tray_footprint")) pools.tray_footprint = p.at("tray_footprint").get<std::array<double, 2>>();
        pools.include_tray = p.value("include_tray", pools.include_tray);
        pools.tray_height = p.value("tray_height", pools.tray_height);
    }
    return c;
}

}  // namespace

std::string scene_to_json(const Scene& scene) { return scene_json(scene).dump(); }

Scene scene_from_json(std::string_view text) { return guarded<Scene>(text, "scene", &scene_from); }

std::string thresholds_to_json(const ThresholdConfig& t) {
    Json j;
    for (const auto& g : ThresholdConfig::group_names()) j[g] = band_json(t.band(g));
    j["contact_epsilon"] = t.contact_epsilon;
    j["min_support_overlap"] = t.min_support_overlap;
    return j.dump(2);
}

ThresholdConfig thresholds_from_json(std::string_view text) {
    return guarded<ThresholdConfig>(text, "threshold config", &thresholds_from);
}

std::string camera_to_json(const CameraConfig& c) {
    return Json{{"position", vec_json(c.position)},
                {"look_at", vec_json(c.look_at)},
                {"vertical_fov_deg", c.vertical_fov_deg},
                {"near", c.near},
                {"far", c.far},
                {"light_direction", vec_json(c.light_direction)},
                {"ambient", c.ambient},
                {"table_half", c.table_half}}
        .dump(2);
}

CameraConfig camera_from_json(std::string_view text) {
    return guarded<CameraConfig>(text, "camera config", &camera_from);
}

std::string scene_config_to_json(const SceneConfig& c) {
    const auto& p = c.pools;
    return Json{{"n_objects", c.n_objects},
                {"workspace_half", c.workspace_half},
                {"p_in_tray", c.p_in_tray},
                {"p_stacked", c.p_stacked},
                {"p_floating", c.p_floating},
                {"float_gap", c.float_gap},
                {"max_attempts_per_object", c.max_attempts_per_object},
                {"max_scene_attempts", c.max_scene_attempts},
                {"min_visible_pixels", c.min_visible_pixels},
                {"visibility_resolution", c.visibility_resolution},
                {"pools",
                 {{"colors", p.colors},
                  {"shapes", p.shapes},
                  {"small_range", p.small_range},
                  {"large_range", p.large_range},
                  {"include_tray", p.include_tray},
                  {"tray_footprint", p.tray_footprint},
                  {"tray_height", p.tray_height}}}}
        .dump(2);
}

SceneConfig scene_config_from_json(std::string_view text) {
    return guarded<SceneConfig>(text, "scene config", &scene_config_from);
}

void write_observation(std::ostream& out, const Observation& obs) {
    write_array(out, image_record(obs.rgbd));
    write_array(out, mask_stack_record(obs.masks, obs.rgbd.height, obs.rgbd.width));
    std::vector<float> ids(obs.object_ids.begin(), obs.object_ids.end());
    const std::uint32_t n = static_cast<std::uint32_t>(ids.size());
    write_array(out, ids, std::span<const std::uint32_t>(&n, 1));
}

Observation read_observation(std::istream& in) {
    Observation obs;
    obs.rgbd = record_image(read_array(in));
    obs.masks = record_mask_stack(read_array(in));
    const ArrayRecord ids = read_array(in);
    for (float f : ids.values) obs.object_ids.push_back(static_cast<int>(f));
    if (obs.object_ids.size() != obs.masks.size()) throw DataError("observation id list does not match masks");
    return obs;
}

void save_demo(const std::filesystem::path& dir, const Demonstration& demo) {
    std::filesystem::create_directories(dir);
    Json m;
    m["format"] = "relground-demo";
    m["version"] = 1;
    m["kind"] = demo.kind;
    m["seed"] = demo.seed;
    m["length"] = demo.length();
    m["frames_per_second"] = kFramesPerSecond;
    m["reference_id"] = demo.reference_id;
    m["target_ids"] = demo.target_ids;
    Json S = Json::array();
    for (const auto& s : demo.ground_truth_S.movers) S.push_back(s ? Json(*s) : Json(nullptr));
    m["ground_truth_S"] = S;
    Json Y = Json::object();
    for (const auto& [id, plan] : demo.ground_truth_Y) Y[std::to_string(id)] = detail::to_json(plan);
    m["ground_truth_Y"] = Y;
    Json G = Json::object();
    for (const auto& [id, seq] : demo.geometric_labels) {
        Json a = Json::array();
        for (const auto& v : seq) a.push_back(detail::to_json(v));
        G[std::to_string(id)] = a;
    }
    m["geometric_labels"] = G;
    Json W = Json::array();
    for (const auto& v : demo.window_labels) W.push_back(detail::to_json(v));
    m["window_labels"] = W;
    if (demo.ground_truth_poses) {
        Json P = Json::array();
        for (const auto& p : *demo.ground_truth_poses) P.push_back(detail::to_json(p));
        m["ground_truth_poses"] = P;
    }
    Json scenes = Json::array();
    for (const auto& s : demo.scenes) scenes.push_back(scene_json(s));
    m["scenes"] = scenes;
    m["rendered"] = !demo.frames.empty();
    detail::write_text(dir / "manifest.json", m.dump(1));

    if (!demo.frames.empty()) {
        std::ofstream out(dir / "frames.bin", std::ios::binary);
        if (!out) throw DataError("cannot write " + (dir / "frames.bin").string());
        write_u32(out, static_cast<std::uint32_t>(demo.frames.size()));
        for (const auto& f : demo.frames) write_observation(out, f);
    }
}

Demonstration load_demo(const std::filesystem::path& dir) {
    const Json m = detail::parse_json(detail::read_text(dir / "manifest.json"), "demo manifest");
    Demonstration d;
    try {
        if (m.at("format").get<std::string>() != "relground-demo") throw DataError("not a demo manifest");
        d.kind = m.at("kind").get<std::string>();
        d.seed = m.at("seed").get<std::uint64_t>();
        d.reference_id = m.at("reference_id").get<int>();
        d.target_ids = m.at("target_ids").get<std::vector<int>>();
        for (const auto& s : m.at("ground_truth_S"))
            d.ground_truth_S.movers.push_back(s.is_null() ? std::nullopt : std::optional<int>(s.get<int>()));
        for (const auto& [k, v] : m.at("ground_truth_Y").items()) d.ground_truth_Y[std::stoi(k)] = detail::plan_from_json(v);
        for (const auto& [k, v] : m.at("geometric_labels").items()) {
            auto& seq = d.geometric_labels[std::stoi(k)];
            for (const auto& x : v) seq.push_back(detail::label_vector_from_json(x));
        }
        for (const auto& x : m.at("window_labels")) d.window_labels.push_back(detail::label_vector_from_json(x));
        if (m.contains("ground_truth_poses")) {
            std::vector<Pose> poses;
            for (const auto& p : m.at("ground_truth_poses")) poses.push_back(detail::pose_from_json(p));
            d.ground_truth_poses = std::move(poses);
        }
        for (const auto& s : m.at("scenes")) d.scenes.push_back(scene_from(s));
    } catch (const Json::exception& e) {
        throw DataError("invalid demo manifest " + (dir / "manifest.json").string() + ": " + e.what());
    }
    if (m.value("rendered", false)) {
        std::ifstream in(dir / "frames.bin", std::ios::binary);
        if (!in) throw DataError("cannot open " + (dir / "frames.bin").string());
        const auto n = read_u32(in);
        if (n != d.scenes.size()) throw DataError("frame count does not match manifest");
        for (std::uint32_t i = 0; i < n; ++i) d.frames.push_back(read_observation(in));
    }
    return d;
}

}  // namespace relground::worldgen
