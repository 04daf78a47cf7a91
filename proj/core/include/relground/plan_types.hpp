#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <vector>

#include "relground/labelspace.hpp"

namespace relground {

/// 6-DoF pose: metres for x/y/z, radians for roll/pitch/yaw.
struct Pose {
    double x = 0, y = 0, z = 0;
    double roll = 0, pitch = 0, yaw = 0;

    bool operator==(const Pose&) const = default;
};

/// Wrap an angle to (-pi, pi].
inline double wrap_angle(double a) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    a = std::fmod(a + std::numbers::pi, two_pi);
    if (a <= 0) a += two_pi;
    return a - std::numbers::pi;
}

/// Which target (object id) moves at each transition t -> t+1; nullopt = nobody.
struct MovementPrescriptionSequence {
    std::vector<std::optional<int>> movers;

    std::size_t steps() const { return movers.size(); }
    bool operator==(const MovementPrescriptionSequence&) const = default;
};

struct PlanStep {
    int group = 0;
    int label = 0;
    int timestep = 0;

    /// Steps compare by symbol only; the timestep is bookkeeping.
    bool same_symbol(const PlanStep& o) const { return group == o.group && label == o.label; }
};

struct SymbolicPlan {
    std::vector<PlanStep> steps;

    std::size_t size() const { return steps.size(); }
    bool empty() const { return steps.empty(); }
    bool same_symbols(const SymbolicPlan& o) const;
};

inline bool SymbolicPlan::same_symbols(const SymbolicPlan& o) const {
    if (steps.size() != o.steps.size()) return false;
    for (std::size_t i = 0; i < steps.size(); ++i)
        if (!steps[i].same_symbol(o.steps[i])) return false;
    return true;
}

/// Turn a per-frame label sequence into an ordered list of label-change events.
///
/// A step is emitted whenever a group enters a known label that differs from
/// its previous known label (UNKNOWN stretches are skipped over). A label
/// already holding in the first frame is emitted only when the group later
/// changes, so constant relations do not clutter the plan; a label that first
/// appears mid-sequence is always an event. Simultaneous events are ordered
/// by group index.
SymbolicPlan plan_from_labels(const std::vector<labelspace::LabelVector>& frames);

}  // namespace relground
