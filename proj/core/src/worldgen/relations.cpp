#include "relground/worldgen/relations.hpp"

#include <algorithm>
#include <cmath>

namespace relground::worldgen {

using labelspace::LabelConfig;
using labelspace::LabelVector;

const std::array<std::string, 6>& ThresholdConfig::group_names() {
    static const std::array<std::string, 6> names{"left_right", "front_behind", "above_below",
                                                  "close_far",  "on_off",       "out_in"};
    return names;
}

Band& ThresholdConfig::band(const std::string& group) {
    return const_cast<Band&>(static_cast<const ThresholdConfig&>(*this).band(group));
}

const Band& ThresholdConfig::band(const std::string& group) const {
    if (group == "left_right") return left_right;
    if (group == "front_behind") return front_behind;
    if (group == "above_below") return above_below;
    if (group == "close_far") return close_far;
    if (group == "on_off") return on_off;
    if (group == "out_in") return out_in;
    throw ConfigError("no geometric rule for relational group '" + group + "'");
}

namespace {

double axis_overlap(double ca, double ha, double cb, double hb) {
    return std::max(0.0, std::min(ca + ha, cb + hb) - std::max(ca - ha, cb - hb));
}

double axis_gap(double ca, double ha, double cb, double hb) {
    return std::max(0.0, std::abs(ca - cb) - ha - hb);
}

/// Signed rule: index 0 when s > tau + delta, index 1 when s < tau - delta.
std::optional<int> signed_label(double s, const Band& b) {
    if (s > b.threshold + b.half_band) return 0;
    if (s < b.threshold - b.half_band) return 1;
    return std::nullopt;
}

std::optional<int> on_off_label(const SceneObject& tar, const SceneObject& ref, const ThresholdConfig& t) {
    const bool contact = std::abs(tar.bottom() - ref.support_top()) < t.contact_epsilon;
    if (contact && footprint_overlap_fraction(tar, ref) >= t.min_support_overlap) return 0;
    if (footprint_gap(tar, ref) > t.on_off.half_band) return 1;
    return std::nullopt;
}

std::optional<int> out_in_label(const SceneObject& tar, const SceneObject& ref, const ThresholdConfig& t) {
    if (!ref.container()) return std::nullopt;
    const double dx = std::abs(tar.position.x - ref.position.x);
    const double dy = std::abs(tar.position.y - ref.position.y);
    if (dx <= ref.inner_half_x() && dy <= ref.inner_half_y() && tar.bottom() < ref.top()) return 1;
    const double ox = std::max(0.0, dx - ref.half_extents.x);
    const double oy = std::max(0.0, dy - ref.half_extents.y);
    if (std::hypot(ox, oy) > t.out_in.half_band) return 0;
    return std::nullopt;
}

}  // namespace

double footprint_overlap_fraction(const SceneObject& tar, const SceneObject& ref) {
    const double ox = axis_overlap(tar.position.x, tar.half_extents.x, ref.position.x, ref.half_extents.x);
    const double oy = axis_overlap(tar.position.y, tar.half_extents.y, ref.position.y, ref.half_extents.y);
    return ox * oy / (4.0 * tar.half_extents.x * tar.half_extents.y);
}

double footprint_gap(const SceneObject& a, const SceneObject& b) {
    return std::hypot(axis_gap(a.position.x, a.half_extents.x, b.position.x, b.half_extents.x),
                      axis_gap(a.position.y, a.half_extents.y, b.position.y, b.half_extents.y));
}

LabelVector ground_truth_relations(const SceneObject& tar, const SceneObject& ref, const ThresholdConfig& t,
                                   const LabelConfig& labels) {
    LabelVector y(labels.relational().size());
    for (std::size_t g = 0; g < labels.relational().size(); ++g) {
        const std::string& name = labels.relational()[g].name;
        if (name == "left_right") {
            y.assignments[g] = signed_label(ref.position.x - tar.position.x, t.left_right);
        } else if (name == "front_behind") {
            y.assignments[g] = signed_label(ref.position.y - tar.position.y, t.front_behind);
        } else if (name == "above_below") {
            y.assignments[g] = signed_label(tar.position.z - ref.position.z, t.above_below);
        } else if (name == "close_far") {
            // close is label 0: distance below the threshold.
            const double d = (tar.position - ref.position).norm();
            y.assignments[g] = signed_label(-d, {-t.close_far.threshold, t.close_far.half_band});
        } else if (name == "on_off") {
            y.assignments[g] = on_off_label(tar, ref, t);
        } else if (name == "out_in") {
            y.assignments[g] = out_in_label(tar, ref, t);
        } else {
            throw ConfigError("no geometric rule for relational group '" + name + "'");
        }
    }
    return y;
}

LabelVector ground_truth_relations(const Scene& scene, int tar_id, int ref_id, const ThresholdConfig& t,
                                   const LabelConfig& labels) {
    if (tar_id == ref_id) throw DataError("target and referent must differ");
    return ground_truth_relations(scene.object(tar_id), scene.object(ref_id), t, labels);
}

std::vector<double> unknown_fractions(const std::vector<Scene>& scenes, const ThresholdConfig& t,
                                      const LabelConfig& labels) {
    const std::size_t groups = labels.relational().size();
    std::vector<double> unknown(groups, 0.0);
    std::size_t pairs = 0;
    for (const auto& s : scenes)
        for (const auto& a : s.objects)
            for (const auto& b : s.objects) {
                if (a.id == b.id) continue;
                const auto y = ground_truth_relations(a, b, t, labels);
                for (std::size_t g = 0; g < groups; ++g) unknown[g] += !y.known(g);
                ++pairs;
            }
    if (pairs == 0) throw DataError("no object pairs to measure");
    for (auto& u : unknown) u /= static_cast<double>(pairs);
    return unknown;
}

ThresholdConfig tune_half_bands(const std::vector<Scene>& scenes, const std::vector<double>& targets,
                                ThresholdConfig start, const LabelConfig& labels) {
    const auto& groups = labels.relational();
    if (targets.size() != groups.size()) throw ConfigError("one unknown-fraction target per group is required");
    ThresholdConfig cfg = start;
    for (std::size_t g = 0; g < groups.size(); ++g) {
        // Unknown fraction is non-decreasing in the half band.
        double lo = 0.0, hi = 1.5;
        for (int it = 0; it < 40; ++it) {
            const double mid = 0.5 * (lo + hi);
            cfg.band(groups[g].name).half_band = mid;
            if (unknown_fractions(scenes, cfg, labels)[g] < targets[g])
                lo = mid;
            else
                hi = mid;
        }
        cfg.band(groups[g].name).half_band = std::round(hi * 1e4) / 1e4;
    }
    return cfg;
}

}  // namespace relground::worldgen
