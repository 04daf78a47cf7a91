#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <numbers>

#include "relground/planner.hpp"
#include "relground/rng.hpp"
#include "oracles.hpp"

using namespace relground;
using namespace relground::planner;
using relground::testing::iso_density;

namespace {

Trace make_trace(std::vector<std::vector<double>> emb) {
    Trace t;
    for (std::size_t g = 0; g < emb.front().size(); ++g) t.groups.push_back("g" + std::to_string(g));
    t.occluded.assign(emb.size(), false);
    t.embeddings = std::move(emb);
    return t;
}

SymbolicPlan plan(std::initializer_list<std::pair<int, int>> steps) {
    SymbolicPlan p;
    int t = 0;
    for (auto [g, l] : steps) p.steps.push_back({g, l, t++});
    return p;
}

std::filesystem::path temp_dir(const std::string& name) {
    auto d = std::filesystem::temp_directory_path() / ("relground_test_" + name);
    std::filesystem::remove_all(d);
    std::filesystem::create_directories(d);
    return d;
}

}  // namespace

TEST_CASE("closed-form moving threshold") {
    SegmentationConfig cfg;
    CHECK(moving_threshold(6, cfg) == doctest::Approx(1.5351).epsilon(1e-4));
    CHECK(moving_threshold(6, cfg) == doctest::Approx(6 * std::log(10.0) / 9).epsilon(1e-12));
    CHECK_THROWS_AS(moving_threshold(6, SegmentationConfig{0.1, 1.0}), ConfigError);
}

TEST_CASE("density comparison equals the squared-distance rule on 1000 random steps") {
    SegmentationConfig cfg;
    const double thr = moving_threshold(6, cfg);
    Rng rng(5);
    int moving = 0;
    for (int i = 0; i < 1000; ++i) {
        std::vector<double> a(6), b(6);
        const double scale = rng.uniform(0.05, 1.2);
        for (int k = 0; k < 6; ++k) {
            a[k] = rng.uniform(-3, 3);
            b[k] = a[k] + scale * rng.normal();
        }
        double d = 0;
        for (int k = 0; k < 6; ++k) d += (b[k] - a[k]) * (b[k] - a[k]);
        const bool oracle = iso_density(b, a, cfg.var_moving) > iso_density(b, a, cfg.var_static);
        const bool closed = d > thr;
        if (std::abs(d - thr) > 1e-9) {
            CHECK(step_is_moving(a, b, cfg) == oracle);
            CHECK(closed == oracle);
        }
        moving += oracle;
    }
    CHECK(moving > 100);
    CHECK(moving < 900);
}

TEST_CASE("movement_prescription examples") {
    SegmentationConfig cfg;
    std::vector<std::vector<double>> flat(8, std::vector<double>(6, 0.3));
    std::map<int, Trace> traces{{1, make_trace(flat)}, {2, make_trace(flat)}};
    auto S = movement_prescription(traces, cfg);
    CHECK(S.steps() == 7);
    for (auto m : S.movers) CHECK_FALSE(m.has_value());

    auto jump = flat;
    for (std::size_t t = 4; t < jump.size(); ++t) jump[t][0] += 10.0;
    traces[2] = make_trace(jump);
    S = movement_prescription(traces, cfg);
    int flagged = 0;
    for (std::size_t t = 0; t < S.steps(); ++t)
        if (S.movers[t]) {
            ++flagged;
            CHECK(*S.movers[t] == 2);
            CHECK(t == 3);
        }
    CHECK(flagged == 1);

    // Both targets jump: the larger step wins.
    auto small = flat;
    for (std::size_t t = 4; t < small.size(); ++t) small[t][1] += 3.0;
    traces[1] = make_trace(small);
    S = movement_prescription(traces, cfg);
    CHECK(S.movers[3] == 2);

    traces[3] = make_trace({{0, 0, 0, 0, 0, 0}});
    CHECK_THROWS_AS(movement_prescription(traces, cfg), LengthMismatch);
}

TEST_CASE("movement_prescription is translation invariant") {
    SegmentationConfig cfg;
    Rng rng(9);
    for (int trial = 0; trial < 50; ++trial) {
        std::map<int, Trace> traces, shifted;
        std::vector<double> offset(6);
        for (auto& o : offset) o = rng.uniform(-5, 5);
        for (int id = 1; id <= 3; ++id) {
            std::vector<std::vector<double>> emb(20, std::vector<double>(6));
            for (auto& e : emb)
                for (auto& x : e) x = rng.uniform(-1, 1);
            auto moved = emb;
            for (auto& e : moved)
                for (int k = 0; k < 6; ++k) e[k] += offset[k];
            traces[id] = make_trace(emb);
            shifted[id] = make_trace(moved);
        }
        CHECK(movement_prescription(traces, cfg) == movement_prescription(shifted, cfg));
    }
}

TEST_CASE("label fits and symbolic trace") {
    auto cfg = labelspace::LabelConfig::blocksworld();
    Rng rng(3);
    std::vector<std::vector<double>> emb;
    std::vector<labelspace::LabelVector> ys;
    for (int i = 0; i < 300; ++i) {
        labelspace::LabelVector y(6);
        std::vector<double> c(6, 0.0);
        const int kind = i % 3;
        for (int g = 0; g < 6; ++g) {
            if (kind == 0) c[g] = -2 + 0.3 * rng.normal(), y.assignments[g] = 0;
            if (kind == 1) c[g] = 2 + 0.3 * rng.normal(), y.assignments[g] = 1;
            if (kind == 2) c[g] = 0.3 * rng.normal();
        }
        emb.push_back(c);
        ys.push_back(y);
    }
    auto K = fit_label_distributions(emb, ys, cfg, 20);
    for (std::size_t g = 0; g < 6; ++g) {
        const auto& a = K.labels[g][0];
        const auto& b = K.labels[g][1];
        CHECK(a.fit);
        CHECK(b.fit);
        CHECK(std::abs(a.mean - b.mean) > a.stddev + b.stddev);
        CHECK(K.unknown[g].mean > a.mean);
        CHECK(K.unknown[g].mean < b.mean);
    }

    Trace tr = make_trace({std::vector<double>(6, K.labels[0][0].mean), std::vector<double>(6, K.labels[0][1].mean),
                           std::vector<double>(6, 0.0), std::vector<double>(6, 9.0)});
    tr.occluded[3] = true;
    auto sym = symbolic_trace(tr, K);
    CHECK(sym[0].assignments[0] == 0);
    CHECK(sym[1].assignments[0] == 1);
    CHECK_FALSE(sym[2].known(0));
    CHECK(sym[3] == sym[2]);

    // A label with a single sample is left unfit.
    std::vector<std::vector<double>> one{std::vector<double>(6, 1.0)};
    labelspace::LabelVector y1(6);
    y1.assignments[0] = 0;
    auto K1 = fit_label_distributions(one, {y1}, cfg, 20);
    CHECK_FALSE(K1.labels[0][0].fit);
}

TEST_CASE("tie between equal-variance clusters goes to the earlier label") {
    LabelDistributions K;
    K.groups = {"left_right"};
    K.labels = {{{-1.0, 0.5, 30, true}, {1.0, 0.5, 30, true}}};
    K.unknown = {LabelFit{}};
    auto sym = symbolic_trace(make_trace({{0.0}}), K);
    CHECK(sym[0].assignments[0] == 0);
}

TEST_CASE("extract_essence examples and properties") {
    auto a = plan({{0, 0}, {1, 1}, {0, 1}});
    auto b = plan({{0, 0}, {1, 0}, {0, 1}});
    CHECK(extract_essence({a, a, a}).same_symbols(a));
    CHECK(extract_essence({a, b}).same_symbols(plan({{0, 0}, {0, 1}})));
    CHECK(extract_essence({b}).same_symbols(b));
    CHECK_THROWS_AS(extract_essence({plan({{2, 0}}), plan({{3, 1}})}), EmptyEssence);
    CHECK_THROWS_AS(extract_essence({}), EmptyEssence);

    Rng rng(17);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<SymbolicPlan> plans;
        auto base = plan({{0, 0}, {1, 1}, {2, 0}, {0, 1}});
        for (int k = 0; k < 6; ++k) {
            SymbolicPlan p;
            for (const auto& s : base.steps) {
                if (rng.uniform() < 0.3) p.steps.push_back({3, static_cast<int>(rng.below(2)), 0});
                if (rng.uniform() < 0.9) p.steps.push_back(s);
            }
            p.steps.push_back({0, 1, 0});
            plans.push_back(p);
        }
        std::size_t prev = SIZE_MAX;
        for (std::size_t n = 1; n <= plans.size(); ++n) {
            std::vector<SymbolicPlan> first(plans.begin(), plans.begin() + n);
            auto e = extract_essence(first);
            CHECK(e.size() <= prev);
            prev = e.size();
            std::vector<SymbolicPlan> filtered;
            for (const auto& p : first) filtered.push_back(filter_to_essence(p, e));
            CHECK(extract_essence(filtered).same_symbols(e));
        }
    }
}

TEST_CASE("trace, plan and distribution files round trip") {
    auto dir = temp_dir("planner_io");
    Trace tr = make_trace({{0.5, -1.25}, {0.75, 2.0}, {0.0, 0.125}});
    tr.groups = {"left_right", "front_behind"};
    tr.occluded[1] = true;
    write_trace(dir / "t.bin", tr);
    auto back = read_trace(dir / "t.bin");
    CHECK(back.groups == tr.groups);
    CHECK(back.occluded == tr.occluded);
    CHECK(back.embeddings == tr.embeddings);

    auto cfg = labelspace::LabelConfig::blocksworld();
    auto p = plan({{0, 1}, {4, 0}});
    auto q = plan_from_json(plan_to_json(p, cfg));
    CHECK(q.same_symbols(p));
    CHECK(q.steps[1].timestep == 1);

    LabelDistributions K;
    K.groups = {"left_right"};
    K.labels = {{{-1.0, 0.5, 30, true}, {1.0, 0.25, 3, false}}};
    K.unknown = {{0.0, 0.7, 40, true}};
    auto K2 = distributions_from_json(distributions_to_json(K));
    CHECK(K2.groups == K.groups);
    CHECK(K2.labels[0][0].mean == -1.0);
    CHECK(K2.labels[0][1].fit == false);
    CHECK(K2.unknown[0].stddev == 0.7);
}

TEST_CASE("project_demo shape and occlusion flags") {
    worldgen::DemoConfig dc;
    auto demo = worldgen::generate_chained_demo("c_shape", 0, dc);
    auto labels = labelspace::LabelConfig::blocksworld();
    relvae::Model model(relvae::ModelConfig::for_labels(labels, 64));
    const int tar = demo.target_ids.front();
    auto tr = project_demo(demo, model, labels, tar, demo.reference_id);
    CHECK(tr.length() == demo.length());
    CHECK(tr.dim() == 6);
    for (const auto& e : tr.embeddings)
        for (double x : e) CHECK(std::isfinite(x));

    demo.frames[2].masks[demo.frames[2].mask_index(tar)] = Mask(64, 64);
    auto tr2 = project_demo(demo, model, labels, tar, demo.reference_id);
    CHECK(tr2.occluded[2]);
    CHECK(tr2.embeddings[2] == tr2.embeddings[1]);
}
