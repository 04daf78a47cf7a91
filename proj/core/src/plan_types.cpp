#include "relground/plan_types.hpp"

#include <algorithm>

namespace relground {

SymbolicPlan plan_from_labels(const std::vector<labelspace::LabelVector>& frames) {
    SymbolicPlan plan;
    if (frames.empty()) return plan;
    const std::size_t groups = frames.front().size();
    for (std::size_t g = 0; g < groups; ++g) {
        std::vector<PlanStep> events;
        std::optional<int> last;
        for (std::size_t t = 0; t < frames.size(); ++t) {
            if (frames[t].size() != groups) throw ShapeMismatch("label sequence with inconsistent group count");
            if (!frames[t].known(g)) continue;
            const int label = frames[t].label(g);
            if (last && *last == label) continue;
            events.push_back({static_cast<int>(g), label, static_cast<int>(t)});
            last = label;
        }
        if (events.size() >= 2 || (!events.empty() && events.front().timestep > 0)) plan.steps.insert(plan.steps.end(), events.begin(), events.end());
    }
    std::stable_sort(plan.steps.begin(), plan.steps.end(), [](const PlanStep& a, const PlanStep& b) {
        return a.timestep != b.timestep ? a.timestep < b.timestep : a.group < b.group;
    });
    return plan;
}

}  // namespace relground
