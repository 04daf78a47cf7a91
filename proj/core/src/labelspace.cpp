#include "relground/labelspace.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include "json.hpp"

namespace relground::labelspace {

using nlohmann::json;

namespace {

constexpr std::string_view kBlocksworldJson = R"({
  "name": "blocksworld",
  "relational": [
    {"name": "left_right",   "labels": ["left", "right"]},
    {"name": "front_behind", "labels": ["front", "behind"]},
    {"name": "above_below",  "labels": ["above", "below"]},
    {"name": "close_far",    "labels": ["close", "far"]},
    {"name": "on_off",       "labels": ["on", "off"]},
    {"name": "out_in",       "labels": ["out_of", "in"]}
  ],
  "object": [
    {"name": "color", "labels": ["gray", "red", "blue", "green", "brown", "purple", "cyan", "yellow"]},
    {"name": "shape", "labels": ["cube", "sphere", "cylinder", "tray"], "noun": true},
    {"name": "size",  "labels": ["small", "large"]}
  ],
  "aliases": {
    "in front of": "front",
    "to the left of": "left",
    "left of": "left",
    "to the right of": "right",
    "right of": "right",
    "on top of": "on",
    "inside": "in",
    "grey": "gray",
    "big": "large",
    "ball": "sphere",
    "block": "cube"
  }
})";

constexpr std::string_view kRobotJson = R"({
  "name": "robot",
  "relational": [
    {"name": "off_on",    "labels": ["off", "on"]},
    {"name": "facing",    "labels": ["not_facing", "facing"]},
    {"name": "out_in",    "labels": ["out", "in"]}
  ],
  "object": [
    {"name": "color", "labels": ["red", "purple", "yellow", "blue", "green"]},
    {"name": "shape", "labels": ["cube", "cup", "bowl"], "noun": true},
    {"name": "size",  "labels": ["small", "large"]}
  ],
  "aliases": {
    "on top of": "on",
    "inside": "in",
    "out of": "out"
  }
})";

bool is_separator(char c) {
    return std::isspace(static_cast<unsigned char>(c)) || c == ',' || c == '{' || c == '}' || c == '[' || c == ']' ||
           c == '_' || c == '(' || c == ')';
}

std::vector<std::string> split_words(std::string_view text) {
    std::vector<std::string> words;
    std::string cur;
    for (char c : text) {
        if (is_separator(c)) {
            if (!cur.empty()) words.push_back(std::move(cur)), cur.clear();
        } else {
            cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
        }
    }
    if (!cur.empty()) words.push_back(std::move(cur));
    return words;
}

std::string join(const std::vector<std::string>& words, std::size_t from, std::size_t n) {
    std::string out;
    for (std::size_t i = 0; i < n; ++i) {
        if (i) out.push_back(' ');
        out += words[from + i];
    }
    return out;
}

ConceptGroup parse_group(const json& j, GroupKind kind) {
    ConceptGroup g;
    g.kind = kind;
    g.name = j.at("name").get<std::string>();
    g.labels = j.at("labels").get<std::vector<std::string>>();
    return g;
}

json group_json(const ConceptGroup& g) {
    return json{{"name", g.name}, {"labels", g.labels}};
}

LabelVector build_vector(std::span<const std::string> names, const LabelConfig& config, GroupKind kind) {
    const auto& groups = kind == GroupKind::relational ? config.relational() : config.object();
    LabelVector v(groups.size());
    for (const auto& raw : names) {
        auto ref = config.lookup(raw);
        if (!ref || ref->kind != kind)
            throw UnknownToken("'" + raw + "' is not a " +
                               std::string(kind == GroupKind::relational ? "relational" : "object") + " label");
        auto& slot = v.assignments[ref->group];
        if (slot && *slot != ref->label)
            throw ConflictingLabels("labels '" + groups[ref->group].labels[*slot] + "' and '" + raw +
                                    "' are mutually exclusive (group " + groups[ref->group].name + ")");
        slot = ref->label;
    }
    return v;
}

}  // namespace

std::optional<int> ConceptGroup::index_of(std::string_view label) const {
    for (std::size_t i = 0; i < labels.size(); ++i)
        if (labels[i] == label) return static_cast<int>(i);
    return std::nullopt;
}

std::size_t LabelVector::count_known() const {
    return static_cast<std::size_t>(std::count_if(assignments.begin(), assignments.end(), [](const auto& a) { return a.has_value(); }));
}

LabelConfig LabelConfig::from_json(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("label config is not valid JSON: ") + e.what());
    }
    LabelConfig cfg;
    try {
        cfg.name_ = j.value("name", std::string("unnamed"));
        for (const auto& g : j.at("relational")) cfg.relational_.push_back(parse_group(g, GroupKind::relational));
        int idx = 0;
        for (const auto& g : j.at("object")) {
            cfg.object_.push_back(parse_group(g, GroupKind::object));
            if (g.value("noun", false)) {
                if (cfg.noun_group_ >= 0) throw ConfigError("label config declares more than one noun group");
                cfg.noun_group_ = idx;
            }
            ++idx;
        }
        if (j.contains("aliases"))
            for (const auto& [k, v] : j.at("aliases").items()) cfg.aliases_[k] = v.get<std::string>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("label config has wrong structure: ") + e.what());
    }
    cfg.validate_and_index();
    return cfg;
}

LabelConfig LabelConfig::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open label config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json(ss.str());
}

std::string LabelConfig::to_json() const {
    json j;
    j["name"] = name_;
    j["relational"] = json::array();
    for (const auto& g : relational_) j["relational"].push_back(group_json(g));
    j["object"] = json::array();
    for (std::size_t i = 0; i < object_.size(); ++i) {
        auto g = group_json(object_[i]);
        if (static_cast<int>(i) == noun_group_) g["noun"] = true;
        j["object"].push_back(g);
    }
    j["aliases"] = aliases_;
    return j.dump(2);
}

LabelConfig LabelConfig::blocksworld() { return from_json(kBlocksworldJson); }
LabelConfig LabelConfig::robot() { return from_json(kRobotJson); }

std::string_view blocksworld_labels_json() { return kBlocksworldJson; }
std::string_view robot_labels_json() { return kRobotJson; }

void LabelConfig::validate_and_index() {
    if (relational_.empty()) throw ConfigError("label config needs at least one relational group");
    if (noun_group_ < 0) throw ConfigError("label config must mark one object group as noun");
    tokens_.clear();
    std::set<std::string> group_names;
    auto add = [&](const std::vector<ConceptGroup>& groups, GroupKind kind) {
        for (std::size_t g = 0; g < groups.size(); ++g) {
            const auto& grp = groups[g];
            if (!group_names.insert(grp.name).second) throw ConfigError("duplicate group name '" + grp.name + "'");
            if (grp.labels.size() < 2) throw ConfigError("group '" + grp.name + "' needs at least two labels");
            for (std::size_t l = 0; l < grp.labels.size(); ++l) {
                const auto& label = grp.labels[l];
                if (label.empty() || std::any_of(label.begin(), label.end(), [](char c) {
                        return std::isspace(static_cast<unsigned char>(c)) || std::isupper(static_cast<unsigned char>(c));
                    }))
                    throw ConfigError("label '" + label + "' must be a lowercase word");
                if (!tokens_.emplace(label, TokenRef{kind, static_cast<int>(g), static_cast<int>(l)}).second)
                    throw ConfigError("label '" + label + "' appears in more than one group");
            }
        }
    };
    add(relational_, GroupKind::relational);
    add(object_, GroupKind::object);

    // Underscored labels are reachable from their spaced spelling since the
    // tokenizer treats '_' as a separator.
    for (const auto& [label, ref] : tokens_) {
        if (label.find('_') == std::string::npos) continue;
        std::string spaced = label;
        std::replace(spaced.begin(), spaced.end(), '_', ' ');
        aliases_.try_emplace(spaced, label);
    }
    max_alias_words_ = 1;
    std::map<std::string, std::string> normalised;
    for (const auto& [phrase, target] : aliases_) {
        if (!tokens_.contains(target)) throw ConfigError("alias '" + phrase + "' targets unknown label '" + target + "'");
        auto words = split_words(phrase);
        if (words.empty()) throw ConfigError("empty alias phrase");
        max_alias_words_ = std::max(max_alias_words_, words.size());
        normalised[join(words, 0, words.size())] = target;
    }
    aliases_ = std::move(normalised);
}

int LabelConfig::relational_index(std::string_view group_name) const {
    for (std::size_t i = 0; i < relational_.size(); ++i)
        if (relational_[i].name == group_name) return static_cast<int>(i);
    throw ConfigError("no relational group named '" + std::string(group_name) + "'");
}

int LabelConfig::object_index(std::string_view group_name) const {
    for (std::size_t i = 0; i < object_.size(); ++i)
        if (object_[i].name == group_name) return static_cast<int>(i);
    throw ConfigError("no object group named '" + std::string(group_name) + "'");
}

std::optional<LabelConfig::TokenRef> LabelConfig::lookup(std::string_view token) const {
    auto it = tokens_.find(token);
    if (it == tokens_.end()) return std::nullopt;
    return it->second;
}

std::vector<std::string> LabelConfig::canonical_tokens(std::string_view text) const {
    const auto words = split_words(text);
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < words.size()) {
        bool matched = false;
        for (std::size_t n = std::min(max_alias_words_, words.size() - i); n >= 1; --n) {
            auto phrase = join(words, i, n);
            if (n == 1 && tokens_.contains(phrase)) {
                out.push_back(phrase);
                i += 1;
                matched = true;
                break;
            }
            if (auto it = aliases_.find(phrase); it != aliases_.end()) {
                out.push_back(it->second);
                i += n;
                matched = true;
                break;
            }
        }
        if (!matched) out.push_back(words[i++]);
    }
    return out;
}

std::string LabelConfig::describe(const LabelVector& v, GroupKind kind) const {
    const auto& groups = kind == GroupKind::relational ? relational_ : object_;
    std::string out = "[";
    for (std::size_t g = 0; g < v.size() && g < groups.size(); ++g) {
        if (g) out += ", ";
        out += v.known(g) ? groups[g].labels[v.label(g)] : std::string("UNKNOWN");
    }
    return out + "]";
}

ParsedInstruction parse_instruction(std::string_view text, const LabelConfig& config) {
    const auto tokens = config.canonical_tokens(text);
    std::vector<LabelConfig::TokenRef> refs;
    refs.reserve(tokens.size());
    for (const auto& t : tokens) {
        auto ref = config.lookup(t);
        if (!ref) throw UnknownToken("token '" + t + "' is not in any vocabulary");
        refs.push_back(*ref);
    }
    auto is_noun = [&](std::size_t i) {
        return refs[i].kind == GroupKind::object && refs[i].group == config.noun_group();
    };
    auto is_object = [&](std::size_t i) { return refs[i].kind == GroupKind::object; };

    auto malformed = [&](const std::string& why) {
        return MalformedTemplate("'" + std::string(text) + "' does not match [target relations referent]: " + why);
    };

    std::size_t i = 0;
    ParsedInstruction out;
    while (i < tokens.size() && is_object(i) && !is_noun(i)) out.target.push_back(tokens[i++]);
    if (i >= tokens.size() || !is_noun(i)) throw malformed("target has no noun");
    out.target.push_back(tokens[i++]);
    while (i < tokens.size() && !is_object(i)) out.relations.push_back(tokens[i++]);
    if (out.relations.empty()) throw malformed("no relation between target and referent");
    while (i < tokens.size() && is_object(i) && !is_noun(i)) out.referent.push_back(tokens[i++]);
    if (i >= tokens.size() || !is_noun(i)) throw malformed("referent has no noun");
    out.referent.push_back(tokens[i++]);
    if (i != tokens.size()) throw malformed("trailing tokens after referent");

    // Attribute sets must themselves be consistent; reuse the vector builders.
    object_label_vector(out.target, config);
    object_label_vector(out.referent, config);
    relation_label_vector(out.relations, config);
    return out;
}

LabelVector relation_label_vector(std::span<const std::string> relations, const LabelConfig& config) {
    return build_vector(relations, config, GroupKind::relational);
}

LabelVector object_label_vector(std::span<const std::string> attrs, const LabelConfig& config) {
    return build_vector(attrs, config, GroupKind::object);
}

}  // namespace relground::labelspace
