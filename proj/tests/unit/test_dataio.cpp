#include <doctest.h>

#include <filesystem>
#include <set>

#include "relground/dataio.hpp"
#include "relground/worldgen/demos.hpp"

using namespace relground;
using namespace relground::dataio;

namespace {

const labelspace::LabelConfig& bw() {
    static const auto cfg = labelspace::LabelConfig::blocksworld();
    return cfg;
}

SceneRecord record(int id, worldgen::Scene scene) {
    SceneRecord r;
    r.scene_id = id;
    r.observation = worldgen::render_observation(scene, worldgen::CameraConfig{}, 64);
    r.scene = std::move(scene);
    return r;
}

Dataset small_dataset(int n_scenes) {
    DatasetHeader h;
    h.n_scenes = n_scenes;
    h.seed = 100;
    return generate_dataset(h);
}

std::filesystem::path temp_dir(const std::string& name) {
    auto d = std::filesystem::temp_directory_path() / ("relground_test_" + name);
    std::filesystem::remove_all(d);
    return d;
}

}  // namespace

TEST_CASE("one scene with four objects gives 12 ordered pairs") {
    std::vector<SceneRecord> scenes{record(0, worldgen::generate_scene(0))};
    auto pairs = build_pair_dataset(scenes, worldgen::ThresholdConfig{}, bw());
    REQUIRE(pairs.size() == 12);
    std::set<std::pair<int, int>> ordered;
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        const auto& p = pairs[i];
        CHECK(p.pair_id == static_cast<int>(i));
        CHECK(p.target->object_id != p.referent->object_id);
        ordered.insert({p.target->object_id, p.referent->object_id});
        CHECK(p.y.size() == 6);
        CHECK(p.o_tar().size() == 3);
        CHECK(p.target->masked.height == p.referent->masked.height);
        CHECK(p.y == worldgen::ground_truth_relations(scenes[0].scene, p.target->object_id, p.referent->object_id,
                                                     worldgen::ThresholdConfig{}));
    }
    CHECK(ordered.size() == 12);
}

TEST_CASE("masked views are zero outside the mask") {
    auto r = record(0, worldgen::generate_scene(4));
    for (const auto& obj : r.scene.objects) {
        auto v = make_view(r.observation, obj, bw());
        for (int y = 0; y < 64; ++y)
            for (int x = 0; x < 64; ++x)
                for (int c = 0; c < 4; ++c) {
                    if (!v->mask.at(y, x))
                        CHECK(v->masked.at(y, x, c) == 0.0f);
                    else
                        CHECK(v->masked.at(y, x, c) == r.observation.rgbd.at(y, x, c));
                }
    }
}

TEST_CASE("a fully occluded object drops its pairs with a warning") {
    using namespace worldgen;
    Scene s;
    s.objects.push_back(make_object(0, "gray", Shape::cube, "large", 0.5, {0, 0, 0}));
    s.objects.push_back(make_object(1, "red", Shape::cube, "small", 0.06, {0, 0.32, 0}));
    s.objects.push_back(make_object(2, "blue", Shape::sphere, "small", 0.14, {-0.40, -0.30, 0}));
    s.objects.push_back(make_object(3, "green", Shape::cube, "small", 0.14, {0.40, -0.30, 0}));
    std::vector<SceneRecord> scenes{record(7, s)};
    std::vector<std::string> warnings;
    auto pairs = build_pair_dataset(scenes, ThresholdConfig{}, bw(), &warnings);
    CHECK(pairs.size() == 6);
    CHECK(warnings.size() >= 1);
    for (const auto& p : pairs) {
        CHECK(p.target->object_id != 1);
        CHECK(p.referent->object_id != 1);
    }
    CHECK_THROWS_AS(make_view(scenes[0].observation, s.object(1), bw()), EmptyMask);
}

TEST_CASE("stratified split") {
    auto data = small_dataset(200);
    const auto& pairs = data.pairs;
    auto split = stratified_split(pairs, {0.8, 0.1, 0.1}, 0, 0.1);
    const double n = static_cast<double>(pairs.size());
    CHECK(std::abs(split.train.size() - 0.8 * n) <= 12);
    CHECK(std::abs(split.validation.size() - 0.1 * n) <= 12);
    CHECK(std::abs(split.test.size() - 0.1 * n) <= 12);
    CHECK(split.train.size() + split.validation.size() + split.test.size() == pairs.size());

    std::map<int, int> scene_part;
    std::set<int> seen;
    int part = 0;
    for (const auto* idx : {&split.train, &split.validation, &split.test}) {
        for (int i : *idx) {
            CHECK(seen.insert(i).second);
            auto [it, fresh] = scene_part.emplace(pairs[i].scene_id, part);
            CHECK(it->second == part);
        }
        ++part;
    }

    std::vector<int> all(pairs.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
    const auto global = labelled_fractions(pairs, all);
    for (const auto* idx : {&split.train, &split.validation, &split.test}) {
        const auto f = labelled_fractions(pairs, *idx);
        for (std::size_t g = 0; g < f.size(); ++g) CHECK(std::abs(f[g] - global[g]) <= 0.1);
    }

    auto again = stratified_split(pairs, {0.8, 0.1, 0.1}, 0, 0.1);
    CHECK(again.train == split.train);
    CHECK(again.test == split.test);

    CHECK_THROWS_AS(stratified_split(pairs, {0.5, 0.2, 0.2}, 0), ConfigError);
}

TEST_CASE("a label present in only one scene cannot be split three ways") {
    auto data = small_dataset(6);
    auto pairs = data.pairs;
    // Label index 1 of group 0 survives only in scene 0.
    for (auto& p : pairs)
        if (p.scene_id != pairs.front().scene_id && p.y.known(0) && p.y.label(0) == 1) p.y.assignments[0] = 0;
    bool in_first = false;
    for (const auto& p : pairs)
        if (p.scene_id == pairs.front().scene_id && p.y.known(0) && p.y.label(0) == 1) in_first = true;
    if (!in_first) {
        pairs.front().y.assignments[0] = 1;
    }
    CHECK_THROWS_AS(stratified_split(pairs, {0.8, 0.1, 0.1}, 0, 1.0), InfeasibleStratification);
}

TEST_CASE("dataset and split files round trip bit-exactly") {
    auto data = small_dataset(5);
    auto dir = temp_dir("dataio_rt");
    write_dataset(dir, data);
    auto back = read_dataset(dir);
    CHECK(back.header.n_scenes == data.header.n_scenes);
    CHECK(back.header.labels == data.header.labels);
    CHECK(back.header.thresholds == data.header.thresholds);
    REQUIRE(back.scenes.size() == data.scenes.size());
    for (std::size_t i = 0; i < data.scenes.size(); ++i) {
        CHECK(back.scenes[i].scene == data.scenes[i].scene);
        CHECK(back.scenes[i].observation.rgbd == data.scenes[i].observation.rgbd);
        CHECK(back.scenes[i].observation.masks == data.scenes[i].observation.masks);
    }
    REQUIRE(back.pairs.size() == data.pairs.size());
    for (std::size_t i = 0; i < data.pairs.size(); ++i) {
        CHECK(back.pairs[i].y == data.pairs[i].y);
        CHECK(back.pairs[i].o_tar() == data.pairs[i].o_tar());
        CHECK(back.pairs[i].o_ref() == data.pairs[i].o_ref());
        CHECK(back.pairs[i].pair_id == data.pairs[i].pair_id);
        CHECK(back.pairs[i].scene_id == data.pairs[i].scene_id);
        CHECK(back.pairs[i].target->masked == data.pairs[i].target->masked);
        CHECK(back.pairs[i].referent->mask == data.pairs[i].referent->mask);
    }

    DatasetSplit split{{0, 1, 2}, {3}, {4, 5}};
    write_split(dir, split);
    auto s = read_split(dir);
    CHECK(s.train == split.train);
    CHECK(s.validation == split.validation);
    CHECK(s.test == split.test);
}

TEST_CASE("dataset generation is deterministic") {
    auto a = small_dataset(3);
    auto b = small_dataset(3);
    REQUIRE(a.pairs.size() == b.pairs.size());
    for (std::size_t i = 0; i < a.pairs.size(); ++i) {
        CHECK(a.pairs[i].y == b.pairs[i].y);
        CHECK(a.pairs[i].target->masked == b.pairs[i].target->masked);
    }
}

TEST_CASE("demo pairs") {
    auto demo = worldgen::generate_placement_demo("place_on", 0);
    const auto& labels = worldgen::placement_labels();
    auto pairs = demo_pairs(demo, labels);
    CHECK(pairs.size() == demo.length());
    for (std::size_t f = 0; f < pairs.size(); ++f) CHECK(pairs[f].y == demo.window_labels[f]);

    auto thin = demo_training_pairs({demo, demo}, labels, 5);
    // 40 labelled frames per demo plus every fifth of the 100 middle frames.
    CHECK(thin.size() == 2 * (40 + 20));
    std::set<int> ids;
    for (std::size_t i = 0; i < thin.size(); ++i) {
        CHECK(thin[i].pair_id == static_cast<int>(i));
        ids.insert(thin[i].scene_id);
    }
    CHECK(ids.size() == thin.size());
    CHECK_THROWS_AS(demo_training_pairs({demo}, labels, 0), ConfigError);
}
