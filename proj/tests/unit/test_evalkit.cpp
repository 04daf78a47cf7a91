#include <doctest.h>

#include <algorithm>
#include <functional>
#include <numbers>

#include "relground/evalkit.hpp"
#include "relground/rng.hpp"
#include "oracles.hpp"

using namespace relground;
using namespace relground::evalkit;
using namespace relground::testing;

namespace {

SymbolicPlan plan(std::initializer_list<std::pair<int, int>> steps) {
    SymbolicPlan p;
    int t = 0;
    for (auto [g, l] : steps) p.steps.push_back({g, l, t++});
    return p;
}

MovementPrescriptionSequence movers(std::initializer_list<std::optional<int>> xs) { return {{xs.begin(), xs.end()}}; }

SymbolicPlan random_plan(Rng& rng, int max_len) {
    SymbolicPlan p;
    int n = static_cast<int>(rng.below(max_len + 1));
    for (int i = 0; i < n; ++i)
        p.steps.push_back({static_cast<int>(rng.below(3)), static_cast<int>(rng.below(2)), i});
    return p;
}

}  // namespace

TEST_CASE("seg_accuracy examples") {
    auto S = movers({1, 1, std::nullopt, 2});
    CHECK(seg_accuracy(S, S, {1, 2}) == 1.0);
    // One of eight cells disagrees: step 2 claims target 1 moves.
    auto H = movers({1, 1, 1, 2});
    CHECK(seg_accuracy(S, H, {1, 2}) == doctest::Approx(7.0 / 8.0));
    auto H2 = movers({1, 2, std::nullopt, 2});
    CHECK(seg_accuracy(S, H2, {1, 2}) == doctest::Approx(0.75));
    CHECK(seg_accuracy(movers({1, 1}), movers({2, 2}), {1, 2}) == 0.0);
    CHECK_THROWS_AS(seg_accuracy(S, movers({1}), {1, 2}), ShapeMismatch);
}

TEST_CASE("edit_distance examples") {
    auto lr = plan({{0, 0}, {0, 1}});
    CHECK(edit_distance(lr, lr) == 0.0);
    CHECK(edit_distance(lr, plan({{0, 0}, {1, 1}})) == 0.5);
    auto longer = plan({{0, 0}, {1, 1}, {0, 1}});
    CHECK(levenshtein(lr, longer) == 1);
    CHECK(edit_distance(lr, longer) == 0.5);
    CHECK_THROWS_AS(edit_distance(lr, longer, EditMode::strict), ShapeMismatch);
    CHECK(edit_distance(SymbolicPlan{}, SymbolicPlan{}) == 0.0);
    CHECK(edit_distance(SymbolicPlan{}, lr) == 1.0);
}

TEST_CASE("metrics match brute-force reimplementations on 1000 random instances") {
    Rng rng(2024);
    for (int trial = 0; trial < 1000; ++trial) {
        const int T = 1 + static_cast<int>(rng.below(12));
        const int n_targets = 1 + static_cast<int>(rng.below(3));
        std::vector<int> targets;
        for (int o = 0; o < n_targets; ++o) targets.push_back(o + 1);
        MovementPrescriptionSequence S, H;
        for (int t = 0; t < T; ++t) {
            auto draw = [&]() -> std::optional<int> {
                auto k = rng.below(n_targets + 1);
                if (k == 0) return std::nullopt;
                return static_cast<int>(k);
            };
            S.movers.push_back(draw());
            H.movers.push_back(draw());
        }
        CHECK(seg_accuracy(S, H, targets) == brute_seg(S, H, targets));
        CHECK(seg_accuracy(S, S, targets) == 1.0);

        auto Y = random_plan(rng, 6);
        auto Yh = rng.uniform() < 0.4 ? Y : random_plan(rng, 7);
        if (rng.uniform() < 0.3 && !Yh.steps.empty()) Yh.steps[rng.below(Yh.size())].label ^= 1;
        const double ed = edit_distance(Y, Yh);
        CHECK(ed == brute_ed(Y, Yh));
        CHECK(ed >= 0.0);
        CHECK(ed <= 1.0);
        CHECK(edit_distance(Y, Y) == 0.0);
        if (Y.size() == Yh.size()) CHECK(edit_distance(Y, Yh) == edit_distance(Yh, Y));
        CHECK(static_cast<int>(levenshtein(Y, Yh)) == brute_lev(codes(Y), 0, codes(Yh), 0));
    }
}

TEST_CASE("pose_mae") {
    std::vector<Pose> P{{0.1, 0.2, 0.3, 0, 0, 0}, {0.5, 0.0, 0.1, 0.1, 0.2, 0.3}};
    auto zero = pose_mae(P, P);
    for (double v : zero) CHECK(v == 0.0);

    auto Q = P;
    for (auto& p : Q) p.x += 0.1;
    auto m = pose_mae(P, Q);
    CHECK(m[0] == doctest::Approx(0.1));
    for (int i = 1; i < 6; ++i) CHECK(m[i] == doctest::Approx(0.0));

    std::vector<Pose> a{{0, 0, 0, 0, 0, std::numbers::pi - 0.01}};
    std::vector<Pose> b{{0, 0, 0, 0, 0, -std::numbers::pi + 0.01}};
    CHECK(pose_mae(a, b)[5] == doctest::Approx(0.02));
    CHECK_THROWS_AS(pose_mae(P, a), ShapeMismatch);
}

TEST_CASE("ed_vs_demos_curve") {
    // Ground truth [left, right]; demos add different incidental symbols.
    auto gt = plan({{0, 0}, {0, 1}});
    std::vector<SymbolicPlan> inferred{plan({{0, 0}, {1, 1}, {0, 1}}), plan({{0, 0}, {1, 0}, {0, 1}}),
                                       plan({{0, 0}, {0, 1}})};
    std::vector<SymbolicPlan> truth(3, gt);
    auto curve = ed_vs_demos_curve(inferred, truth);
    REQUIRE(curve.size() == 3);
    CHECK(curve[0].n_demos == 1);
    CHECK(curve[1].mean_ed == 0.0);
    CHECK(curve[1].mean_length == 2.0);
    CHECK(curve.back().mean_ed <= curve.front().mean_ed);

    auto again = curve_from_tsv(curve_to_tsv(curve));
    REQUIRE(again.size() == curve.size());
    for (std::size_t i = 0; i < curve.size(); ++i) {
        CHECK(again[i].n_demos == curve[i].n_demos);
        CHECK(again[i].mean_ed == doctest::Approx(curve[i].mean_ed));
        CHECK(again[i].mean_length == doctest::Approx(curve[i].mean_length));
    }
}

TEST_CASE("latent sample TSV round trip") {
    LatentSamples s;
    s.groups = {"left_right"};
    s.label_names = {{"left", "right"}};
    s.by_label = {{{-1.5, -1.25}, {2.0}}};
    s.unknown = {{0.125}};
    auto r = latent_samples_from_tsv(latent_samples_to_tsv(s));
    CHECK(r.groups == s.groups);
    CHECK(r.label_names == s.label_names);
    CHECK(r.by_label == s.by_label);
    CHECK(r.unknown == s.unknown);
    CHECK_THROWS_AS(latent_samples_from_tsv("nope\n"), DataError);
}
