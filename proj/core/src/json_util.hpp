#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"
#include "relground/common.hpp"
#include "relground/labelspace.hpp"
#include "relground/plan_types.hpp"

namespace relground::detail {

using Json = nlohmann::json;

inline Json to_json(const labelspace::LabelVector& v) {
    Json a = Json::array();
    for (const auto& x : v.assignments) a.push_back(x ? Json(*x) : Json(nullptr));
    return a;
}

inline labelspace::LabelVector label_vector_from_json(const Json& a) {
    labelspace::LabelVector v(a.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        if (!a[i].is_null()) v.assignments[i] = a[i].get<int>();
    return v;
}

inline Json to_json(const SymbolicPlan& p) {
    Json a = Json::array();
    for (const auto& s : p.steps) a.push_back({s.group, s.label, s.timestep});
    return a;
}

inline SymbolicPlan plan_from_json(const Json& a) {
    SymbolicPlan p;
    for (const auto& s : a) p.steps.push_back({s.at(0).get<int>(), s.at(1).get<int>(), s.at(2).get<int>()});
    return p;
}

inline Json to_json(const Pose& p) { return Json::array({p.x, p.y, p.z, p.roll, p.pitch, p.yaw}); }

inline Pose pose_from_json(const Json& a) {
    return {a.at(0).get<double>(), a.at(1).get<double>(), a.at(2).get<double>(),
            a.at(3).get<double>(), a.at(4).get<double>(), a.at(5).get<double>()};
}

inline Json parse_json(std::string_view text, const std::string& what) {
    try {
        return Json::parse(text);
    } catch (const Json::exception& e) {
        throw DataError("malformed " + what + ": " + e.what());
    }
}

inline std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path.string());
    out << text;
    if (!out) throw DataError("failed writing " + path.string());
}

}  // namespace relground::detail
