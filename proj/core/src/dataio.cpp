#include "relground/dataio.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <thread>

#include "json_util.hpp"
#include "relground/array_io.hpp"
#include "relground/rng.hpp"
#include "relground/worldgen/serialization.hpp"

namespace relground::dataio {

using detail::Json;
using labelspace::LabelConfig;
using labelspace::LabelVector;

LabelVector object_labels(const worldgen::SceneObject& object, const LabelConfig& labels) {
    LabelVector v(labels.object().size());
    for (std::size_t g = 0; g < labels.object().size(); ++g) {
        const auto& group = labels.object()[g];
        const std::string* value = nullptr;
        if (group.name == "color") value = &object.color;
        if (group.name == "shape") value = &object.shape;
        if (group.name == "size") value = &object.size;
        if (value) v.assignments[g] = group.index_of(*value);
    }
    return v;
}

std::shared_ptr<const ObjectView> make_view(const worldgen::Observation& obs, const worldgen::SceneObject& object,
                                            const LabelConfig& labels) {
    const Mask& mask = obs.mask_of(object.id);
    if (mask.count() == 0) throw EmptyMask("object " + std::to_string(object.id) + " has no visible pixels");
    auto view = std::make_shared<ObjectView>();
    view->mask = mask;
    view->object_id = object.id;
    view->labels = object_labels(object, labels);
    view->masked = Image(obs.rgbd.height, obs.rgbd.width, obs.rgbd.channels);
    for (int y = 0; y < mask.height; ++y)
        for (int x = 0; x < mask.width; ++x)
            if (mask.at(y, x))
                for (int c = 0; c < obs.rgbd.channels; ++c) view->masked.at(y, x, c) = obs.rgbd.at(y, x, c);
    return view;
}

namespace {

/// Views per object id, skipping (and reporting) empty masks.
std::map<int, std::shared_ptr<const ObjectView>> scene_views(const SceneRecord& rec, const LabelConfig& labels,
                                                             std::vector<std::string>* warnings) {
    std::map<int, std::shared_ptr<const ObjectView>> views;
    for (const auto& o : rec.scene.objects) {
        try {
            views[o.id] = make_view(rec.observation, o, labels);
        } catch (const EmptyMask& e) {
            if (warnings) warnings->push_back("scene " + std::to_string(rec.scene_id) + ": " + e.what());
        }
    }
    return views;
}

}  // namespace

std::vector<ObservationPair> build_pair_dataset(const std::vector<SceneRecord>& scenes,
                                                const worldgen::ThresholdConfig& thresholds,
                                                const LabelConfig& labels, std::vector<std::string>* warnings) {
    std::vector<ObservationPair> pairs;
    for (const auto& rec : scenes) {
        const auto views = scene_views(rec, labels, warnings);
        std::size_t skipped = 0;
        for (const auto& a : rec.scene.objects)
            for (const auto& b : rec.scene.objects) {
                if (a.id == b.id) continue;
                if (!views.contains(a.id) || !views.contains(b.id)) {
                    ++skipped;
                    continue;
                }
                ObservationPair p;
                p.target = views.at(a.id);
                p.referent = views.at(b.id);
                p.y = worldgen::ground_truth_relations(a, b, thresholds, labels);
                p.scene_id = rec.scene_id;
                p.pair_id = static_cast<int>(pairs.size());
                pairs.push_back(std::move(p));
            }
        if (skipped && warnings)
            warnings->push_back("scene " + std::to_string(rec.scene_id) + ": skipped " + std::to_string(skipped) +
                                " pairs with empty masks");
    }
    return pairs;
}

std::vector<ObservationPair> demo_pairs(const worldgen::Demonstration& demo, const LabelConfig& labels,
                                        int scene_id_offset, int pair_id_offset) {
    if (demo.frames.size() != demo.scenes.size()) throw DataError("demo '" + demo.kind + "' has no rendered frames");
    const bool windowed = !demo.window_labels.empty();
    std::vector<ObservationPair> pairs;
    for (std::size_t f = 0; f < demo.frames.size(); ++f) {
        const auto& scene = demo.scenes[f];
        const auto& obs = demo.frames[f];
        const auto& ref = scene.object(demo.reference_id);
        if (obs.mask_of(ref.id).count() == 0) continue;
        auto ref_view = make_view(obs, ref, labels);
        for (int t : demo.target_ids) {
            const auto& tar = scene.object(t);
            if (obs.mask_of(t).count() == 0) continue;
            ObservationPair p;
            p.target = make_view(obs, tar, labels);
            p.referent = ref_view;
            if (windowed) {
                p.y = demo.window_labels[f];
            } else {
                p.y = demo.geometric_labels.at(t)[f];
            }
            if (p.y.size() != labels.relational().size())
                throw ShapeMismatch("demo labels do not match the label configuration");
            p.scene_id = scene_id_offset + static_cast<int>(f);
            p.pair_id = pair_id_offset + static_cast<int>(pairs.size());
            pairs.push_back(std::move(p));
        }
    }
    return pairs;
}

std::vector<ObservationPair> demo_training_pairs(const std::vector<worldgen::Demonstration>& demos,
                                                 const LabelConfig& labels, int stride) {
    if (stride < 1) throw ConfigError("frame stride must be >= 1");
    std::vector<ObservationPair> out;
    int offset = 0;
    for (const auto& demo : demos) {
        for (auto& p : demo_pairs(demo, labels, offset, 0)) {
            const int f = p.scene_id - offset;
            if (p.y.count_known() == 0 && f % stride != 0) continue;
            p.pair_id = static_cast<int>(out.size());
            out.push_back(std::move(p));
        }
        offset += static_cast<int>(demo.length());
    }
    return out;
}

std::vector<double> labelled_fractions(const std::vector<ObservationPair>& pairs, const std::vector<int>& indices) {
    if (pairs.empty()) return {};
    std::vector<double> frac(pairs.front().y.size(), 0.0);
    for (int i : indices)
        for (std::size_t g = 0; g < frac.size(); ++g) frac[g] += pairs[i].y.known(g);
    for (auto& f : frac) f = indices.empty() ? 0.0 : f / static_cast<double>(indices.size());
    return frac;
}

DatasetSplit stratified_split(const std::vector<ObservationPair>& pairs, std::array<double, 3> fractions,
                              std::uint64_t seed, double tolerance, int max_attempts) {
    if (pairs.empty()) throw DataError("cannot split an empty dataset");
    for (double f : fractions)
        if (f < 0) throw ConfigError("split fractions must be non-negative");
    const double total = fractions[0] + fractions[1] + fractions[2];
    if (std::abs(total - 1.0) > 1e-6) throw ConfigError("split fractions must sum to 1");

    std::map<int, std::vector<int>> by_scene;
    for (std::size_t i = 0; i < pairs.size(); ++i) by_scene[pairs[i].scene_id].push_back(static_cast<int>(i));
    std::vector<int> scene_ids;
    for (const auto& [id, _] : by_scene) scene_ids.push_back(id);
    const std::size_t n = scene_ids.size();
    const std::size_t groups = pairs.front().y.size();

    // (group, label) -> scenes containing it.
    std::map<std::pair<std::size_t, int>, std::set<int>> label_scenes;
    for (const auto& p : pairs)
        for (std::size_t g = 0; g < groups; ++g)
            if (p.y.known(g)) label_scenes[{g, p.y.label(g)}].insert(p.scene_id);

    std::array<std::size_t, 3> counts{};
    counts[0] = static_cast<std::size_t>(std::llround(fractions[0] * static_cast<double>(n)));
    counts[1] = static_cast<std::size_t>(std::llround(fractions[1] * static_cast<double>(n)));
    counts[0] = std::min(counts[0], n);
    counts[1] = std::min(counts[1], n - counts[0]);
    counts[2] = n - counts[0] - counts[1];
    const std::size_t parts = (counts[0] > 0) + (counts[1] > 0) + (counts[2] > 0);
    for (const auto& [key, scenes] : label_scenes)
        if (scenes.size() < parts)
            throw InfeasibleStratification("label " + std::to_string(key.second) + " of group " +
                                           std::to_string(key.first) + " occurs in " +
                                           std::to_string(scenes.size()) + " scene(s), fewer than " +
                                           std::to_string(parts) + " split parts");

    std::vector<int> all(pairs.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
    const auto global = labelled_fractions(pairs, all);

    Rng rng(seed);
    for (int attempt = 0; attempt < max_attempts; ++attempt) {
        std::vector<int> order = scene_ids;
        rng.shuffle(order.begin(), order.end());
        DatasetSplit split;
        std::array<std::vector<int>*, 3> dst{&split.train, &split.validation, &split.test};
        std::size_t k = 0;
        bool ok = true;
        for (int part = 0; part < 3 && ok; ++part) {
            std::set<int> members;
            for (std::size_t c = 0; c < counts[part]; ++c, ++k) {
                members.insert(order[k]);
                const auto& idx = by_scene[order[k]];
                dst[part]->insert(dst[part]->end(), idx.begin(), idx.end());
            }
            if (counts[part] == 0) continue;
            const auto frac = labelled_fractions(pairs, *dst[part]);
            for (std::size_t g = 0; g < groups; ++g)
                if (std::abs(frac[g] - global[g]) > tolerance) ok = false;
            for (const auto& [key, scenes] : label_scenes) {
                const bool present = std::any_of(scenes.begin(), scenes.end(), [&](int s) { return members.contains(s); });
                if (!present) ok = false;
            }
        }
        if (ok) {
            for (auto* v : dst) std::sort(v->begin(), v->end());
            return split;
        }
    }
    throw InfeasibleStratification("no scene assignment met the stratification tolerance after " +
                                   std::to_string(max_attempts) + " attempts");
}

Dataset generate_dataset(const DatasetHeader& header, std::vector<std::string>* warnings) {
    if (header.n_scenes < 1) throw ConfigError("dataset needs at least one scene");
    Dataset ds;
    ds.header = header;
    ds.scenes.resize(header.n_scenes);
    const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
    const int workers = static_cast<int>(std::min<unsigned>(hw, static_cast<unsigned>(header.n_scenes)));
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&, w] {
            try {
                for (int i = w; i < header.n_scenes; i += workers) {
                    auto& rec = ds.scenes[i];
                    rec.scene_id = i;
                    rec.scene = worldgen::generate_scene(header.seed + static_cast<std::uint64_t>(i),
                                                         header.scene_config);
                    rec.observation = worldgen::render_observation(rec.scene, header.camera, header.resolution);
                }
            } catch (...) {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
    ds.pairs = build_pair_dataset(ds.scenes, header.thresholds, header.labels, warnings);
    return ds;
}

namespace {

std::string scene_file(int id) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "scene_%05d.bin", id);
    return buf;
}

}  // namespace

void write_dataset(const std::filesystem::path& dir, const Dataset& ds) {
    namespace fs = std::filesystem;
    fs::create_directories(dir / "scenes");
    const auto& h = ds.header;
    Json header{{"format", "relground-dataset"},
                {"version", 1},
                {"resolution", h.resolution},
                {"seed", h.seed},
                {"n_scenes", static_cast<int>(ds.scenes.size())},
                {"n_pairs", ds.pairs.size()},
                {"depth_range", {h.camera.near, h.camera.far}},
                {"labels", Json::parse(h.labels.to_json())},
                {"thresholds", Json::parse(worldgen::thresholds_to_json(h.thresholds))},
                {"camera", Json::parse(worldgen::camera_to_json(h.camera))},
                {"scene_config", Json::parse(worldgen::scene_config_to_json(h.scene_config))}};
    detail::write_text(dir / "header.json", header.dump(2) + "\n");

    std::map<int, std::vector<const ObservationPair*>> by_scene;
    for (const auto& p : ds.pairs) by_scene[p.scene_id].push_back(&p);
    for (const auto& rec : ds.scenes) {
        Json meta;
        meta["scene_id"] = rec.scene_id;
        meta["scene"] = Json::parse(worldgen::scene_to_json(rec.scene));
        Json plist = Json::array();
        for (const auto* p : by_scene[rec.scene_id])
            plist.push_back({{"pair_id", p->pair_id},
                             {"target", p->target->object_id},
                             {"referent", p->referent->object_id},
                             {"y", detail::to_json(p->y)}});
        meta["pairs"] = plist;
        std::ofstream out(dir / "scenes" / scene_file(rec.scene_id), std::ios::binary);
        if (!out) throw DataError("cannot write scene record " + std::to_string(rec.scene_id));
        write_blob(out, meta.dump());
        worldgen::write_observation(out, rec.observation);
    }
}

Dataset read_dataset(const std::filesystem::path& dir) {
    const Json header = detail::parse_json(detail::read_text(dir / "header.json"), "dataset header");
    Dataset ds;
    try {
        if (header.at("format").get<std::string>() != "relground-dataset")
            throw DataError(dir.string() + " is not a dataset directory");
        auto& h = ds.header;
        h.resolution = header.at("resolution").get<int>();
        h.seed = header.at("seed").get<std::uint64_t>();
        h.n_scenes = header.at("n_scenes").get<int>();
        h.labels = LabelConfig::from_json(header.at("labels").dump());
        h.thresholds = worldgen::thresholds_from_json(header.at("thresholds").dump());
        h.camera = worldgen::camera_from_json(header.at("camera").dump());
        h.scene_config = worldgen::scene_config_from_json(header.at("scene_config").dump());
    } catch (const Json::exception& e) {
        throw DataError("invalid dataset header: " + std::string(e.what()));
    }

    for (int i = 0; i < ds.header.n_scenes; ++i) {
        std::ifstream in(dir / "scenes" / scene_file(i), std::ios::binary);
        if (!in) throw DataError("missing scene record " + std::to_string(i));
        const Json meta = detail::parse_json(read_blob(in), "scene record");
        SceneRecord rec;
        try {
            rec.scene_id = meta.at("scene_id").get<int>();
            rec.scene = worldgen::scene_from_json(meta.at("scene").dump());
            rec.observation = worldgen::read_observation(in);
            const auto views = scene_views(rec, ds.header.labels, nullptr);
            for (const auto& pj : meta.at("pairs")) {
                ObservationPair p;
                p.pair_id = pj.at("pair_id").get<int>();
                p.scene_id = rec.scene_id;
                p.target = views.at(pj.at("target").get<int>());
                p.referent = views.at(pj.at("referent").get<int>());
                p.y = detail::label_vector_from_json(pj.at("y"));
                ds.pairs.push_back(std::move(p));
            }
        } catch (const Json::exception& e) {
            throw DataError("invalid scene record " + std::to_string(i) + ": " + e.what());
        } catch (const std::out_of_range&) {
            throw DataError("scene record " + std::to_string(i) + " references an object without a view");
        }
        ds.scenes.push_back(std::move(rec));
    }
    std::sort(ds.pairs.begin(), ds.pairs.end(),
              [](const ObservationPair& a, const ObservationPair& b) { return a.pair_id < b.pair_id; });
    for (std::size_t i = 0; i < ds.pairs.size(); ++i)
        if (ds.pairs[i].pair_id != static_cast<int>(i)) throw DataError("dataset pair ids are not contiguous");
    return ds;
}

void write_split(const std::filesystem::path& dir, const DatasetSplit& split) {
    std::filesystem::create_directories(dir / "splits");
    auto put = [&](const char* name, const std::vector<int>& idx) {
        std::string text;
        for (int i : idx) text += std::to_string(i) + "\n";
        detail::write_text(dir / "splits" / name, text);
    };
    put("train.txt", split.train);
    put("validation.txt", split.validation);
    put("test.txt", split.test);
}

DatasetSplit read_split(const std::filesystem::path& dir) {
    auto get = [&](const char* name) {
        std::ifstream in(dir / "splits" / name);
        if (!in) throw DataError("missing split file " + (dir / "splits" / name).string());
        std::vector<int> idx;
        long long v;
        while (in >> v) idx.push_back(static_cast<int>(v));
        if (!in.eof()) throw DataError("malformed split file " + std::string(name));
        return idx;
    };
    return {get("train.txt"), get("validation.txt"), get("test.txt")};
}

}  // namespace relground::dataio
