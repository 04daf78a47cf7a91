#pragma once

#include <array>
#include <functional>
#include <string>
#include <vector>

#include "relground/labelspace.hpp"
#include "relground/worldgen/scene.hpp"

namespace relground::worldgen {

/// Decision threshold and unknown half-band for one relational group.
struct Band {
    double threshold = 0;
    double half_band = 0;

    bool operator==(const Band&) const = default;
};

/// Threshold semantics per group:
///  - left_right:   s = ref.x - tar.x, left when s > tau + delta
///  - front_behind: s = ref.y - tar.y, front when s > tau + delta
///  - above_below:  s = tar.z - ref.z (centres), above when s > tau + delta
///  - close_far:    d = centre distance, close when d < tau - delta, far when d > tau + delta
///  - on_off:       on = resting contact (gap < contact_epsilon) with at least
///                  min_support_overlap of the target footprint over the
///                  referent; off = horizontal footprint gap > delta
///  - out_in:       referent must be a container; in = centre inside the
///                  interior and bottom below the rim; out_of = horizontal
///                  distance of the centre from the footprint > delta
/// Defaults were tuned with tune_half_bands on 1,000 default scenes (seeds
/// 0..999) against unknown fractions (0.28, 0.31, 0.41, 0.36, 0.32, 0.90).
struct ThresholdConfig {
    Band left_right{0.0, 0.1037};
    Band front_behind{0.0, 0.1298};
    Band above_below{0.0, 0.0513};
    Band close_far{0.50, 0.0892};
    Band on_off{0.0, 0.1070};
    Band out_in{0.0, 0.3270};
    double contact_epsilon = 0.01;
    double min_support_overlap = 0.5;

    bool operator==(const ThresholdConfig&) const = default;

    Band& band(const std::string& group);
    const Band& band(const std::string& group) const;
    static const std::array<std::string, 6>& group_names();
};

/// Ground-truth relational labels of the ordered pair (target, referent),
/// one entry per relational group of `labels` (matched by group name).
labelspace::LabelVector ground_truth_relations(const Scene& scene, int tar_id, int ref_id,
                                               const ThresholdConfig& thresholds,
                                               const labelspace::LabelConfig& labels =
                                                   labelspace::LabelConfig::blocksworld());

labelspace::LabelVector ground_truth_relations(const SceneObject& tar, const SceneObject& ref,
                                               const ThresholdConfig& thresholds,
                                               const labelspace::LabelConfig& labels =
                                                   labelspace::LabelConfig::blocksworld());

/// Fraction of the target footprint lying over the referent footprint.
double footprint_overlap_fraction(const SceneObject& tar, const SceneObject& ref);
/// Gap between the two footprints in the table plane (0 when they overlap).
double footprint_gap(const SceneObject& a, const SceneObject& b);

/// Per-group UNKNOWN fraction over all ordered pairs of the scenes.
std::vector<double> unknown_fractions(const std::vector<Scene>& scenes, const ThresholdConfig& thresholds,
                                      const labelspace::LabelConfig& labels = labelspace::LabelConfig::blocksworld());

/// Bisects each group's half band so its UNKNOWN fraction over `scenes`
/// matches `targets` (one per group, in group order). Thresholds tau and the
/// geometric constants are kept.
ThresholdConfig tune_half_bands(const std::vector<Scene>& scenes, const std::vector<double>& targets,
                                ThresholdConfig start = {},
                                const labelspace::LabelConfig& labels = labelspace::LabelConfig::blocksworld());

}  // namespace relground::worldgen
