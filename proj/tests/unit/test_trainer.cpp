#include <doctest.h>

#include <cmath>
#include <limits>

#include "relground/trainer.hpp"
#include "tiny_model.hpp"

using namespace relground;
using namespace relground::train;
using relground::testing::tiny_config;
using relground::testing::tiny_pairs;

namespace {

dataio::DatasetSplit simple_split(int n) {
    dataio::DatasetSplit s;
    for (int i = 0; i < n; ++i) (i % 5 == 4 ? s.validation : s.train).push_back(i);
    return s;
}

}  // namespace

TEST_CASE("Adam matches a hand-rolled update") {
    TrainConfig cfg;
    cfg.learning_rate = 0.01;
    Adam adam(2, cfg);
    std::vector<float> p{1.0f, -2.0f};
    double m[2] = {0, 0}, v[2] = {0, 0}, ref[2] = {1.0, -2.0};
    const std::vector<std::vector<float>> grads{{0.5f, -1.0f}, {0.25f, 2.0f}, {-0.5f, 0.1f}};
    int t = 0;
    for (const auto& g : grads) {
        adam.step(p, g);
        ++t;
        for (int i = 0; i < 2; ++i) {
            m[i] = 0.9 * m[i] + 0.1 * g[i];
            v[i] = 0.999 * v[i] + 0.001 * g[i] * g[i];
            const double mh = m[i] / (1 - std::pow(0.9, t)), vh = v[i] / (1 - std::pow(0.999, t));
            ref[i] -= 0.01 * mh / (std::sqrt(vh) + 1e-8);
            CHECK(p[i] == doctest::Approx(ref[i]).epsilon(1e-6));
        }
    }
    CHECK(adam.steps() == 3);
}

TEST_CASE("default training hyperparameters") {
    TrainConfig cfg;
    CHECK(cfg.epochs == 50);
    CHECK(cfg.batch_size == 32);
    CHECK(cfg.learning_rate == 1e-3);
    CHECK(cfg.beta1 == 0.9);
    CHECK(cfg.beta2 == 0.999);
    CHECK(cfg.epsilon == 1e-8);
    CHECK(cfg.weight_decay == 0.0);
}

TEST_CASE("training is reproducible and the loss decreases") {
    auto pairs = tiny_pairs(30, 1);
    auto split = simple_split(30);
    TrainConfig cfg;
    cfg.epochs = 6;
    cfg.batch_size = 8;
    cfg.learning_rate = 3e-3;
    cfg.seed = 5;
    auto a = train::train(pairs, split, tiny_config(), cfg);
    auto b = train::train(pairs, split, tiny_config(), cfg);
    REQUIRE(a.log.size() == 6);
    CHECK(a.model.params() == b.model.params());
    for (std::size_t e = 0; e < a.log.size(); ++e) CHECK(epoch_record_json(a.log[e]) == epoch_record_json(b.log[e]));
    CHECK(a.log.back().loss.total < a.log.front().loss.total);
    for (const auto& r : a.log) CHECK(std::isfinite(r.loss.total));

    cfg.seed = 6;
    auto c = train::train(pairs, split, tiny_config(), cfg);
    CHECK(c.model.params() != a.model.params());
}

TEST_CASE("tiny desk-scale run completes with a finite loss") {
    dataio::DatasetHeader h;
    h.n_scenes = 10;
    auto data = dataio::generate_dataset(h);
    dataio::DatasetSplit split;
    for (std::size_t i = 0; i < data.pairs.size(); ++i)
        (data.pairs[i].scene_id < 8 ? split.train : split.validation).push_back(static_cast<int>(i));
    TrainConfig cfg;
    cfg.epochs = 2;
    int callbacks = 0;
    auto r = train::train(data.pairs, split, relvae::ModelConfig::for_labels(h.labels, 64), cfg,
                   [&](const EpochRecord& rec, const relvae::Model&) {
                       ++callbacks;
                       CHECK(rec.validation_accuracy.size() == 6);
                   });
    CHECK(callbacks == 2);
    CHECK(std::isfinite(r.log.back().loss.total));
}

TEST_CASE("one model per ablation setting") {
    auto pairs = tiny_pairs(12, 2);
    auto split = simple_split(12);
    TrainConfig cfg;
    cfg.epochs = 1;
    std::vector<std::vector<float>> params;
    for (const auto& ab : relvae::Ablation::all()) {
        cfg.ablation = ab;
        auto r = train::train(pairs, split, tiny_config(), cfg);
        CHECK(r.model.config().ablation == ab);
        if (!ab.use_R) CHECK(r.log.back().loss.recon == 0.0);
        if (!ab.use_Q_obj) CHECK(r.log.back().loss.q_obj == 0.0);
        params.push_back(r.model.params());
    }
    CHECK(params.size() == 4);
    CHECK(params[0] != params[3]);
}

TEST_CASE("accuracy is NaN for a group without labelled pairs") {
    auto pairs = tiny_pairs(9, 3);
    relvae::Model m(tiny_config());
    // Pairs 1, 4 and 7 are UNKNOWN.
    auto acc = eval_classifier_accuracy(m, pairs, {1, 4, 7});
    REQUIRE(acc.size() == 1);
    CHECK(std::isnan(acc[0]));
    acc = eval_classifier_accuracy(m, pairs, {0, 2, 3});
    CHECK(acc[0] >= 0.0);
    CHECK(acc[0] <= 1.0);
}

TEST_CASE("a non-finite loss aborts with the last good model") {
    auto pairs = tiny_pairs(12, 4);
    auto split = simple_split(12);
    auto bad = std::make_shared<relvae::Model>(tiny_config());
    auto r = bad->range(relvae::Part::encoder);
    // The last encoder parameter is an output bias, so the NaN reaches the loss.
    bad->params()[r.end - 1] = std::numeric_limits<float>::quiet_NaN();
    TrainConfig cfg;
    cfg.epochs = 2;
    cfg.warm_start = bad;
    bool handed_over = false;
    CHECK_THROWS_AS(train::train(pairs, split, tiny_config(), cfg, {},
                          [&](const relvae::Model& last, int) {
                              handed_over = true;
                              CHECK(std::isnan(last.params()[r.end - 1]));
                          }),
                    DivergenceDetected);
    CHECK(handed_over);
}

TEST_CASE("warm start copies encoder and decoder") {
    auto pairs = tiny_pairs(6, 5);
    auto split = simple_split(6);
    auto init = std::make_shared<relvae::Model>(tiny_config());
    testing::jitter(init->params(), 3);
    TrainConfig cfg;
    cfg.epochs = 1;
    cfg.learning_rate = 1e-30;
    cfg.warm_start = init;
    auto res = train::train(pairs, split, tiny_config(), cfg);
    for (auto part : {relvae::Part::encoder, relvae::Part::decoder}) {
        auto rr = init->range(part);
        for (std::size_t i = rr.begin; i < rr.end; ++i) CHECK(res.model.params()[i] == init->params()[i]);
    }
}
