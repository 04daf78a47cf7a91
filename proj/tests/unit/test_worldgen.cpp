#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <set>

#include "relground/worldgen/demos.hpp"
#include "relground/worldgen/relations.hpp"
#include "relground/worldgen/render.hpp"
#include "relground/worldgen/scene.hpp"
#include "relground/worldgen/serialization.hpp"

using namespace relground;
using namespace relground::worldgen;

namespace {

const labelspace::LabelConfig& bw() {
    static const auto cfg = labelspace::LabelConfig::blocksworld();
    return cfg;
}

int group_index(const std::string& name) { return bw().relational_index(name); }

int label_index(const std::string& group, const std::string& label) {
    return *bw().relational()[group_index(group)].index_of(label);
}

/// Position of the first step with the given symbol at or after `from`, or -1.
int find_step(const SymbolicPlan& p, int g, int l, int from = 0) {
    for (int i = from; i < static_cast<int>(p.size()); ++i)
        if (p.steps[i].group == g && p.steps[i].label == l) return i;
    return -1;
}

}  // namespace

TEST_CASE("generate_scene is deterministic and non-penetrating") {
    auto a = generate_scene(0);
    auto b = generate_scene(0);
    CHECK(a == b);
    CHECK(a.objects.size() == 4);
    CHECK(non_penetrating(a));
    CHECK(a.objects[0].shape == "tray");
    CHECK_FALSE(generate_scene(1) == a);

    for (std::uint64_t s = 0; s < 200; ++s) CHECK(non_penetrating(generate_scene(s)));

    SceneConfig one;
    one.n_objects = 1;
    CHECK_THROWS_AS(generate_scene(0, one), ConfigError);

    SceneConfig crowded;
    crowded.n_objects = 40;
    crowded.max_scene_attempts = 2;
    crowded.max_attempts_per_object = 5;
    CHECK_THROWS_AS(generate_scene(0, crowded), PlacementFailure);
}

TEST_CASE("1000 scenes of 4 objects give 72,000 ordered-pair group slots") {
    std::size_t slots = 0;
    for (std::uint64_t s = 0; s < 1000; ++s) {
        const auto n = generate_scene(s).objects.size();
        slots += n * (n - 1) * bw().relational().size();
    }
    CHECK(slots == 72000);
}

TEST_CASE("render_observation contracts") {
    CameraConfig cam;
    Scene single;
    single.objects.push_back(make_object(0, "red", Shape::cube, "large", 0.2, {0, 0, 0}));
    auto obs = render_observation(single, cam, 64);
    CHECK(obs.rgbd.height == 64);
    CHECK(obs.rgbd.channels == 4);
    REQUIRE(obs.masks.size() == 1);
    CHECK(obs.masks[0].count() > 0);
    for (int y = 0; y < 64; ++y)
        for (int x = 0; x < 64; ++x)
            for (int c = 0; c < 4; ++c) {
                CHECK(obs.rgbd.at(y, x, c) >= 0.0f);
                CHECK(obs.rgbd.at(y, x, c) <= 1.0f);
            }

    Scene hidden;
    hidden.objects.push_back(make_object(0, "gray", Shape::cube, "large", 0.5, {0, 0, 0}));
    hidden.objects.push_back(make_object(1, "red", Shape::cube, "small", 0.06, {0, 0.32, 0}));
    auto occ = render_observation(hidden, cam, 64);
    CHECK(occ.masks[1].count() == 0);
    CHECK(occ.empty_mask_ids() == std::vector<int>{1});

    Scene empty;
    auto blank = render_observation(empty, cam, 64);
    CHECK(blank.masks.empty());
    CHECK(blank.rgbd.height == 64);

    CHECK_THROWS_AS(render_observation(single, cam, 32), ShapeMismatch);
}

TEST_CASE("masks are disjoint and lie on rendered pixels") {
    for (std::uint64_t s = 0; s < 20; ++s) {
        auto scene = generate_scene(s);
        auto obs = render_observation(scene, CameraConfig{}, 64);
        for (int y = 0; y < 64; ++y)
            for (int x = 0; x < 64; ++x) {
                int owners = 0;
                for (const auto& m : obs.masks) owners += m.at(y, x) != 0;
                CHECK(owners <= 1);
            }
        auto counts = visible_pixels(scene, CameraConfig{}, 64);
        for (std::size_t i = 0; i < obs.masks.size(); ++i)
            CHECK(static_cast<int>(obs.masks[i].count()) == counts[i]);
    }
}

TEST_CASE("depth increases with camera distance") {
    CameraConfig cam;
    Scene near_scene, far_scene;
    near_scene.objects.push_back(make_object(0, "red", Shape::cube, "large", 0.2, {0, -0.3, 0}));
    far_scene.objects.push_back(make_object(0, "red", Shape::cube, "large", 0.2, {0, 0.4, 0}));
    auto depth_mean = [&](const Scene& s) {
        auto o = render_observation(s, cam, 64);
        double d = 0;
        int n = 0;
        for (int y = 0; y < 64; ++y)
            for (int x = 0; x < 64; ++x)
                if (o.masks[0].at(y, x)) d += o.rgbd.at(y, x, 3), ++n;
        return d / n;
    };
    CHECK(depth_mean(near_scene) < depth_mean(far_scene));
}

TEST_CASE("ground_truth_relations sign rule and unknown band") {
    ThresholdConfig t;
    t.left_right = {0.0, 0.05};
    auto ref = make_object(0, "blue", Shape::cube, "small", 0.1, {0, 0, 0});
    auto tar = make_object(1, "red", Shape::cube, "small", 0.1, {-0.30, 0, 0});
    auto y = ground_truth_relations(tar, ref, t);
    CHECK(y.assignments[group_index("left_right")] == label_index("left_right", "left"));

    tar = make_object(1, "red", Shape::cube, "small", 0.1, {-0.02, 0.5, 0});
    y = ground_truth_relations(tar, ref, t);
    CHECK_FALSE(y.known(group_index("left_right")));

    auto stacked = make_object(1, "red", Shape::cube, "small", 0.1, {0, 0, ref.top()});
    y = ground_truth_relations(stacked, ref, ThresholdConfig{});
    CHECK(y.assignments[group_index("on_off")] == label_index("on_off", "on"));
    CHECK(y.assignments[group_index("above_below")] == label_index("above_below", "above"));
}

TEST_CASE("relations are antisymmetric for directional groups and symmetric for close/far") {
    const ThresholdConfig t;
    const int cf = group_index("close_far");
    for (std::uint64_t s = 0; s < 300; ++s) {
        auto scene = generate_scene(s);
        for (const auto& a : scene.objects)
            for (const auto& b : scene.objects) {
                if (a.id == b.id) continue;
                auto ab = ground_truth_relations(scene, a.id, b.id, t);
                auto ba = ground_truth_relations(scene, b.id, a.id, t);
                for (const char* g : {"left_right", "front_behind", "above_below"}) {
                    const int gi = group_index(g);
                    CHECK(ab.known(gi) == ba.known(gi));
                    if (ab.known(gi)) CHECK(ab.label(gi) != ba.label(gi));
                }
                CHECK(ab.assignments[cf] == ba.assignments[cf]);
            }
    }
}

TEST_CASE("repetitive demos") {
    DemoConfig cfg;
    cfg.render = false;
    for (const auto& group : ThresholdConfig::group_names()) {
        for (std::uint64_t seed = 0; seed < 5; ++seed) {
            auto demo = generate_repetitive_demo(group, 3, seed, cfg);
            auto again = generate_repetitive_demo(group, 3, seed, cfg);
            CHECK(again.scenes == demo.scenes);
            CHECK(again.ground_truth_S == demo.ground_truth_S);
            CHECK(demo.target_ids.size() == 3);
            CHECK(demo.ground_truth_S.steps() + 1 == demo.length());
            // Mover blocks: each target appears in exactly one contiguous run.
            std::vector<int> order;
            std::optional<int> prev;
            for (auto m : demo.ground_truth_S.movers) {
                if (m && m != prev) order.push_back(*m);
                prev = m;
            }
            CHECK(order == demo.target_ids);
            for (int id : demo.target_ids) {
                const auto& Y = demo.ground_truth_Y.at(id);
                // Initial label, then the flipped one.
                REQUIRE(Y.size() == 2);
                CHECK(Y.steps[0].group == group_index(group));
                CHECK(Y.steps[1].group == group_index(group));
                CHECK(Y.steps[0].label != Y.steps[1].label);
            }
            CHECK(movers_from_scenes(demo.scenes, demo.target_ids) == demo.ground_truth_S);
        }
    }
    CHECK_THROWS_AS(generate_repetitive_demo("sideways", 3, 0, cfg), ConfigError);
}

TEST_CASE("chained demos pass through their milestones") {
    DemoConfig cfg;
    cfg.render = false;
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
        auto c = generate_chained_demo("c_shape", seed, cfg);
        const auto& Yc = c.ground_truth_Y.at(c.target_ids.front());
        const int fb = group_index("front_behind"), lr = group_index("left_right");
        int i = find_step(Yc, fb, label_index("front_behind", "front"));
        if (i < 0) i = 0;
        i = find_step(Yc, fb, label_index("front_behind", "behind"), i);
        CHECK(i >= 0);
        i = find_step(Yc, lr, label_index("left_right", "right"), i);
        CHECK(i >= 0);
        CHECK(find_step(Yc, fb, label_index("front_behind", "front"), i) >= 0);

        auto o = generate_chained_demo("off_on_off", seed, cfg);
        const auto& Yo = o.ground_truth_Y.at(o.target_ids.front());
        const int on = group_index("on_off");
        const int a = find_step(Yo, on, label_index("on_off", "on"));
        CHECK(a >= 0);
        CHECK(find_step(Yo, on, label_index("on_off", "off"), a) > a);

        auto j = generate_chained_demo("jump_over", seed, cfg);
        const auto& Yj = j.ground_truth_Y.at(j.target_ids.front());
        const int ab = group_index("above_below");
        const int up = find_step(Yj, ab, label_index("above_below", "above"));
        CHECK(up >= 0);
        CHECK(find_step(Yj, lr, label_index("left_right", "right"), up) > up);

        for (const auto* d : {&c, &o, &j}) {
            for (auto m : d->ground_truth_S.movers)
                if (m) CHECK(*m == d->target_ids.front());
        }
    }
    CHECK_THROWS_AS(generate_chained_demo("zigzag", 0, cfg), ConfigError);
}

TEST_CASE("placement demos follow the window protocol") {
    DemoConfig cfg;
    cfg.render = false;
    std::size_t labelled = 0, unlabelled = 0;
    for (const auto& task : placement_tasks()) {
        std::set<std::pair<double, double>> refs;
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            auto d = generate_placement_demo(task, seed, cfg);
            REQUIRE(d.ground_truth_poses.has_value());
            CHECK(d.ground_truth_poses->size() == d.length());
            CHECK(d.window_labels.size() == d.length());
            for (std::size_t f = 0; f < d.length(); ++f) {
                const bool known = d.window_labels[f].count_known() > 0;
                CHECK(known == (f < 20 || f + 20 >= d.length()));
                (known ? labelled : unlabelled) += 1;
            }
            const auto& ref = d.scenes.front().object(d.reference_id);
            refs.insert({ref.position.x, ref.position.y});
            if (task == "place_on") {
                const auto& tar = d.scenes.back().object(d.target_ids.front());
                const Pose& p = d.ground_truth_poses->back();
                CHECK(std::abs(p.z - tar.half_extents.z - ref.top()) < ThresholdConfig{}.contact_epsilon);
                CHECK(std::abs(p.x - ref.position.x) < ref.half_extents.x);
                CHECK(std::abs(p.y - ref.position.y) < ref.half_extents.y);
            }
        }
        CHECK(refs.size() == 20);
    }
    const double ratio = static_cast<double>(labelled) / static_cast<double>(unlabelled);
    CHECK(ratio == doctest::Approx(2400.0 / 6000.0).epsilon(0.15));
}

TEST_CASE("scene and demo serialization round trip") {
    auto scene = generate_scene(3);
    CHECK(scene_from_json(scene_to_json(scene)) == scene);
    ThresholdConfig t;
    CHECK(thresholds_from_json(thresholds_to_json(t)) == t);

    auto demo = generate_chained_demo("jump_over", 1);
    auto dir = std::filesystem::temp_directory_path() / "relground_test_demo_io";
    std::filesystem::remove_all(dir);
    save_demo(dir, demo);
    auto back = load_demo(dir);
    CHECK(back.kind == demo.kind);
    CHECK(back.scenes == demo.scenes);
    CHECK(back.ground_truth_S == demo.ground_truth_S);
    REQUIRE(back.frames.size() == demo.frames.size());
    CHECK(back.frames[3].rgbd == demo.frames[3].rgbd);
    CHECK(back.frames[3].masks == demo.frames[3].masks);
}
