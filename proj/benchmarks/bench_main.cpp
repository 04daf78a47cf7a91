#include <benchmark/benchmark.h>

#include "relground/dataio.hpp"
#include "relground/evalkit.hpp"
#include "relground/planner.hpp"
#include "relground/relvae.hpp"
#include "relground/rng.hpp"
#include "relground/worldgen/render.hpp"
#include "relground/worldgen/scene.hpp"

using namespace relground;

namespace {

struct DeskFixture {
    labelspace::LabelConfig labels = labelspace::LabelConfig::blocksworld();
    dataio::Dataset data;
    relvae::Model model{relvae::ModelConfig::for_labels(labels, 64)};

    DeskFixture() {
        dataio::DatasetHeader h;
        h.n_scenes = 4;
        data = dataio::generate_dataset(h);
    }
};

DeskFixture& fixture() {
    static DeskFixture f;
    return f;
}

void BM_GenerateScene(benchmark::State& state) {
    std::uint64_t seed = 0;
    for (auto _ : state) benchmark::DoNotOptimize(worldgen::generate_scene(seed++));
}
BENCHMARK(BM_GenerateScene);

void BM_Render(benchmark::State& state) {
    const auto scene = worldgen::generate_scene(0);
    const worldgen::CameraConfig cam;
    const int res = static_cast<int>(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(worldgen::render_observation(scene, cam, res));
}
BENCHMARK(BM_Render)->Arg(64)->Arg(128);

void BM_Encode(benchmark::State& state) {
    auto& f = fixture();
    const auto& img = f.data.pairs.front().target->masked;
    for (auto _ : state) benchmark::DoNotOptimize(f.model.encode(img));
}
BENCHMARK(BM_Encode);

void BM_LossAndGradient(benchmark::State& state) {
    auto& f = fixture();
    std::vector<const dataio::ObservationPair*> batch;
    for (std::size_t i = 0; i < f.data.pairs.size() && batch.size() < static_cast<std::size_t>(state.range(0)); ++i)
        batch.push_back(&f.data.pairs[i]);
    std::vector<float> grad;
    for (auto _ : state) {
        grad.assign(f.model.parameter_count(), 0.0f);
        benchmark::DoNotOptimize(f.model.loss(batch, 1, &grad));
    }
    state.SetItemsProcessed(state.iterations() * static_cast<long long>(batch.size()));
}
BENCHMARK(BM_LossAndGradient)->Arg(8)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_MovementPrescription(benchmark::State& state) {
    Rng rng(1);
    std::map<int, planner::Trace> traces;
    for (int id = 1; id <= 3; ++id) {
        planner::Trace t;
        t.groups.assign(6, "g");
        for (int f = 0; f < 200; ++f) {
            std::vector<double> e(6);
            for (auto& x : e) x = rng.normal();
            t.embeddings.push_back(e);
            t.occluded.push_back(false);
        }
        traces[id] = t;
    }
    const planner::SegmentationConfig cfg;
    for (auto _ : state) benchmark::DoNotOptimize(planner::movement_prescription(traces, cfg));
}
BENCHMARK(BM_MovementPrescription);

void BM_EditDistance(benchmark::State& state) {
    Rng rng(2);
    SymbolicPlan a, b;
    for (int i = 0; i < state.range(0); ++i) {
        a.steps.push_back({static_cast<int>(rng.below(6)), static_cast<int>(rng.below(2)), i});
        b.steps.push_back({static_cast<int>(rng.below(6)), static_cast<int>(rng.below(2)), i});
    }
    b.steps.pop_back();
    for (auto _ : state) benchmark::DoNotOptimize(evalkit::edit_distance(a, b));
}
BENCHMARK(BM_EditDistance)->Arg(8)->Arg(64);

}  // namespace

BENCHMARK_MAIN();
