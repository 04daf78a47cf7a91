#include <doctest.h>

#include <set>

#include "relground/labelspace.hpp"
#include "relground/rng.hpp"

using namespace relground;
using namespace relground::labelspace;

namespace {

std::vector<std::string> v(std::initializer_list<const char*> xs) { return {xs.begin(), xs.end()}; }

}  // namespace

TEST_CASE("parse_instruction splits the three fields") {
    const auto cfg = LabelConfig::blocksworld();
    auto p = parse_instruction("yellow cube left front blue cube", cfg);
    CHECK(p.target == v({"yellow", "cube"}));
    CHECK(p.relations == v({"left", "front"}));
    CHECK(p.referent == v({"blue", "cube"}));

    p = parse_instruction("red sphere on gray tray", cfg);
    CHECK(p.target == v({"red", "sphere"}));
    CHECK(p.relations == v({"on"}));
    CHECK(p.referent == v({"gray", "tray"}));
}

TEST_CASE("parse_instruction errors") {
    const auto cfg = LabelConfig::blocksworld();
    CHECK_THROWS_AS(parse_instruction("red sphere near blue cube", cfg), UnknownToken);
    CHECK_THROWS_AS(parse_instruction("red sphere blue cube", cfg), MalformedTemplate);
    CHECK_THROWS_AS(parse_instruction("left blue cube", cfg), MalformedTemplate);
    CHECK_THROWS_AS(parse_instruction("", cfg), MalformedTemplate);
}

TEST_CASE("aliases resolve to canonical labels") {
    const auto cfg = LabelConfig::blocksworld();
    auto p = parse_instruction("big grey block in front of red ball", cfg);
    CHECK(p.target == v({"large", "gray", "cube"}));
    CHECK(p.relations == v({"front"}));
    CHECK(p.referent == v({"red", "sphere"}));
}

TEST_CASE("relation_label_vector") {
    const auto cfg = LabelConfig::blocksworld();
    auto y = relation_label_vector(v({"left", "front"}), cfg);
    REQUIRE(y.size() == 6);
    CHECK(y.assignments[0] == 0);
    CHECK(y.assignments[1] == 0);
    for (int g = 2; g < 6; ++g) CHECK_FALSE(y.known(g));

    auto empty = relation_label_vector({}, cfg);
    CHECK(empty.size() == 6);
    CHECK(empty.count_known() == 0);

    CHECK_THROWS_AS(relation_label_vector(v({"left", "right"}), cfg), ConflictingLabels);
    CHECK_THROWS_AS(relation_label_vector(v({"red"}), cfg), UnknownToken);
}

TEST_CASE("object_label_vector") {
    const auto cfg = LabelConfig::blocksworld();
    auto o = object_label_vector(v({"yellow", "cube"}), cfg);
    REQUIRE(o.size() == 3);
    CHECK(o.assignments[0] == *cfg.object()[0].index_of("yellow"));
    CHECK(o.assignments[1] == *cfg.object()[1].index_of("cube"));
    CHECK_FALSE(o.known(2));

    auto full = object_label_vector(v({"gray", "tray", "large"}), cfg);
    CHECK(full.count_known() == 3);

    CHECK_THROWS_AS(object_label_vector(v({"yellow", "red", "cube"}), cfg), ConflictingLabels);
}

TEST_CASE("shipped config files equal the built-in configurations") {
    const std::filesystem::path root = RELGROUND_SOURCE_DIR;
    CHECK(LabelConfig::load(root / "config/blocksworld_labels.json") == LabelConfig::blocksworld());
    CHECK(LabelConfig::load(root / "config/robot_labels.json") == LabelConfig::robot());
    CHECK(LabelConfig::blocksworld().relational().size() == 6);
    CHECK(LabelConfig::robot().relational().size() == 3);
}

TEST_CASE("label indices are stable through a JSON round trip") {
    for (const auto& cfg : {LabelConfig::blocksworld(), LabelConfig::robot()}) {
        auto again = LabelConfig::from_json(cfg.to_json());
        CHECK(again == cfg);
        for (std::size_t g = 0; g < cfg.relational().size(); ++g)
            for (int l = 0; l < cfg.relational()[g].size(); ++l)
                CHECK(again.relational()[g].index_of(cfg.relational()[g].labels[l]) == l);
    }
}

TEST_CASE("invalid configurations are rejected") {
    CHECK_THROWS_AS(LabelConfig::from_json("{"), ConfigError);
    CHECK_THROWS_AS(LabelConfig::from_json(R"({"name":"x","relational":[{"name":"a","labels":["p","p"]}],
        "object":[{"name":"shape","labels":["cube","ball"],"noun":true}]})"),
                    ConfigError);
    CHECK_THROWS_AS(LabelConfig::from_json(R"({"name":"x","relational":[{"name":"a","labels":["p","q"]}],
        "object":[{"name":"shape","labels":["cube","ball"]}]})"),
                    ConfigError);
}

TEST_CASE("round trip over random template strings") {
    for (const auto& cfg : {LabelConfig::blocksworld(), LabelConfig::robot()}) {
        Rng rng(11);
        const auto& obj = cfg.object();
        const auto& rel = cfg.relational();
        auto object_phrase = [&] {
            std::vector<std::string> words;
            for (std::size_t g = 0; g < obj.size(); ++g) {
                if (static_cast<int>(g) == cfg.noun_group()) continue;
                if (rng.uniform() < 0.5) words.push_back(obj[g].labels[rng.below(obj[g].labels.size())]);
            }
            const auto& nouns = obj[cfg.noun_group()].labels;
            words.push_back(nouns[rng.below(nouns.size())]);
            return words;
        };
        for (int trial = 0; trial < 500; ++trial) {
            auto tar = object_phrase();
            std::vector<std::string> rels;
            std::set<std::string> expected;
            for (std::size_t g = 0; g < rel.size(); ++g)
                if (rng.uniform() < 0.4) {
                    rels.push_back(rel[g].labels[rng.below(rel[g].labels.size())]);
                    expected.insert(rels.back());
                }
            if (rels.empty()) {
                rels.push_back(rel[0].labels[0]);
                expected.insert(rels.back());
            }
            auto ref = object_phrase();
            std::string text;
            for (const auto* part : {&tar, &rels, &ref})
                for (const auto& w : *part) text += (text.empty() ? "" : " ") + w;

            auto parsed = parse_instruction(text, cfg);
            CHECK(parsed.target == tar);
            CHECK(parsed.referent == ref);
            auto y = relation_label_vector(parsed.relations, cfg);
            std::set<std::string> got;
            for (std::size_t g = 0; g < y.size(); ++g)
                if (y.known(g)) got.insert(rel[g].labels[y.label(g)]);
            CHECK(got == expected);
        }
    }
}
