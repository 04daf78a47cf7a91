#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "relground/labelspace.hpp"
#include "relground/plan_types.hpp"
#include "relground/worldgen/relations.hpp"
#include "relground/worldgen/render.hpp"
#include "relground/worldgen/scene.hpp"

namespace relground::worldgen {

inline constexpr int kFramesPerSecond = 10;

struct Demonstration {
    std::string kind;  ///< e.g. "repetitive/left_right", "chained/c_shape", "placement/place_on"
    std::uint64_t seed = 0;
    std::vector<Scene> scenes;
    std::vector<Observation> frames;
    int reference_id = 0;
    std::vector<int> target_ids;
    MovementPrescriptionSequence ground_truth_S;
    std::map<int, SymbolicPlan> ground_truth_Y;
    /// Per-target relational labels computed from scene geometry, per frame.
    std::map<int, std::vector<labelspace::LabelVector>> geometric_labels;
    /// Placement demos only: pose of the grasped target per frame.
    std::optional<std::vector<Pose>> ground_truth_poses;
    /// Placement demos only: per-frame weak labels of the (target, reference)
    /// pair following the initial/final window protocol.
    std::vector<labelspace::LabelVector> window_labels;

    std::size_t length() const { return scenes.size(); }
};

struct DemoConfig {
    int resolution = 64;
    CameraConfig camera;
    ThresholdConfig thresholds;
    /// Whether to render frames (off for label-only studies).
    bool render = true;
};

/// Repetitive timing: static lead-in, then per target a block of moving
/// steps followed by resting steps.
struct RepetitiveTiming {
    int lead = 1;
    int move = 4;
    int rest = 1;
};

struct ChainedTiming {
    int lead = 2;
    int move = 2;
    int rest = 4;
};

const std::vector<std::string>& chained_kinds();
const std::vector<std::string>& placement_tasks();

Demonstration generate_repetitive_demo(const std::string& group, int n_targets, std::uint64_t seed,
                                       const DemoConfig& config = {}, RepetitiveTiming timing = {});

Demonstration generate_chained_demo(const std::string& kind, std::uint64_t seed, const DemoConfig& config = {},
                                    ChainedTiming timing = {});

/// Robot-style placement task with 10 fps frames: 2 s initial window, 10 s
/// motion, 2 s final window.
Demonstration generate_placement_demo(const std::string& task, std::uint64_t seed, const DemoConfig& config = {});

/// Label config matching the placement tasks.
const labelspace::LabelConfig& placement_labels();

/// Mover per transition derived from object poses between consecutive scenes.
MovementPrescriptionSequence movers_from_scenes(const std::vector<Scene>& scenes, const std::vector<int>& targets);

}  // namespace relground::worldgen
