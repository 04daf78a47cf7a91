#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "relground/common.hpp"

namespace relground::labelspace {

class UnknownToken : public DataError {
public:
    using DataError::DataError;
};

class MalformedTemplate : public DataError {
public:
    using DataError::DataError;
};

class ConflictingLabels : public DataError {
public:
    using DataError::DataError;
};

enum class GroupKind { relational, object };

/// A named set of mutually exclusive labels. Label order defines classifier
/// output indices and must never be reordered for an existing model.
struct ConceptGroup {
    std::string name;
    std::vector<std::string> labels;
    GroupKind kind = GroupKind::relational;

    std::optional<int> index_of(std::string_view label) const;
    int size() const { return static_cast<int>(labels.size()); }
    bool operator==(const ConceptGroup&) const = default;
};

/// One entry per configured group (in configuration order); nullopt is the
/// UNKNOWN state. UNKNOWN is never a class index.
struct LabelVector {
    std::vector<std::optional<int>> assignments;

    LabelVector() = default;
    explicit LabelVector(std::size_t groups) : assignments(groups) {}

    std::size_t size() const { return assignments.size(); }
    bool known(std::size_t g) const { return assignments[g].has_value(); }
    int label(std::size_t g) const { return *assignments[g]; }
    std::size_t count_known() const;
    bool operator==(const LabelVector&) const = default;
};

struct ParsedInstruction {
    std::vector<std::string> target;
    std::vector<std::string> relations;
    std::vector<std::string> referent;
    bool operator==(const ParsedInstruction&) const = default;
};

/// Declarative label configuration: relational groups, object groups and a
/// phrase alias table. Loaded from JSON; the same code path serves every
/// label set.
class LabelConfig {
public:
    struct TokenRef {
        GroupKind kind;
        int group;
        int label;
        bool operator==(const TokenRef&) const = default;
    };

    static LabelConfig from_json(std::string_view text);
    static LabelConfig load(const std::filesystem::path& path);
    std::string to_json() const;

    /// Built-in table-top block configuration (six relational groups).
    static LabelConfig blocksworld();
    /// Built-in manipulation configuration (three relational groups).
    static LabelConfig robot();

    const std::string& name() const { return name_; }
    const std::vector<ConceptGroup>& relational() const { return relational_; }
    const std::vector<ConceptGroup>& object() const { return object_; }
    const std::map<std::string, std::string>& aliases() const { return aliases_; }
    int noun_group() const { return noun_group_; }

    int relational_index(std::string_view group_name) const;
    int object_index(std::string_view group_name) const;

    std::optional<TokenRef> lookup(std::string_view token) const;

    /// Lowercases, splits on whitespace and template punctuation, then applies
    /// the alias table with greedy longest-phrase matching.
    std::vector<std::string> canonical_tokens(std::string_view text) const;

    std::string describe(const LabelVector& v, GroupKind kind) const;

    bool operator==(const LabelConfig&) const = default;

private:
    void validate_and_index();

    std::string name_;
    std::vector<ConceptGroup> relational_;
    std::vector<ConceptGroup> object_;
    std::map<std::string, std::string> aliases_;
    int noun_group_ = -1;
    std::size_t max_alias_words_ = 1;
    std::map<std::string, TokenRef, std::less<>> tokens_;
};

ParsedInstruction parse_instruction(std::string_view text, const LabelConfig& config);

LabelVector relation_label_vector(std::span<const std::string> relations, const LabelConfig& config);

LabelVector object_label_vector(std::span<const std::string> attrs, const LabelConfig& config);

/// Built-in JSON sources, identical to the files shipped under config/.
std::string_view blocksworld_labels_json();
std::string_view robot_labels_json();

}  // namespace relground::labelspace
